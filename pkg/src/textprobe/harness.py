"""Multi-task experiment runner: protocol averaging, init comparison,
and the timing benchmark.

Tasks are independent, so the runner fans them out over a thread pool
(the heavy work is BLAS, which releases the GIL). LP_BMM_THREADS caps
the pool; the default is the logical core count. Aggregation is done
in task order after all futures resolve, so parallel and sequential
runs produce identical summaries.
"""

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import InputError, ProbeError, ResourceError
from .evaluation import accuracy, predict, training_free_predict
from .initialization import init_params
from .objective import loss
from .optimizer import fit
from . import io as probe_io
from .synth import synth_task
from .types import CyclingConfig, InitConfig

THREADS_ENV = "LP_BMM_THREADS"


def resolve_threads():
    """Thread cap from LP_BMM_THREADS, defaulting to the core count."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if value < 1:
        raise InputError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


def task_seed(master_seed, index):
    """Per-task seed expansion from a master seed.

    Uses numpy's SeedSequence over the (master, index) pair, a
    splitmix-style expansion with documented, stable semantics.
    """
    return np.random.SeedSequence([int(master_seed), int(index)])


def _score_report(task, text, report):
    """Accuracy of the selected snapshot on test (or validation)."""
    if task.test_features is not None:
        feats, labels = task.test_features, task.test_labels
    else:
        feats, labels = task.val_features, task.val_labels
    return accuracy(predict(feats, text, report.best_params), labels)


def _run_one(task_id, task, text, methods):
    results = {}
    for name, kwargs in methods.items():
        try:
            report = fit(task, text, **kwargs)
        except Exception as err:
            raise ProbeError(f"task {task_id!r} failed in method {name!r}: {err}")
        results[name] = (report, _score_report(task, text, report))
    return results


def run_protocol(tasks, methods=None, threads=None):
    """Fit every method on every task; summarize mean/std accuracy.

    ``tasks`` is a list of manifest paths or of (task, text) pairs.
    ``methods`` maps a method name to fit() keyword arguments. The std
    is the population standard deviation over tasks. Returns a dict
    with per-method summaries and the per-task FitReports.
    """
    if not tasks:
        raise InputError("run_protocol needs at least one task")
    if methods is None:
        methods = {"blended": {}}
    loaded = []
    for item in tasks:
        if isinstance(item, (str, os.PathLike)):
            task, text, _ = probe_io.load_manifest(item)
            loaded.append((str(item), task, text))
        else:
            task, text = item
            loaded.append((f"task-{len(loaded)}", task, text))

    workers = threads if threads is not None else resolve_threads()
    workers = max(1, min(workers, len(loaded)))
    if workers == 1:
        per_task = [
            _run_one(task_id, task, text, methods)
            for task_id, task, text in loaded
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_one, task_id, task, text, methods)
                for task_id, task, text in loaded
            ]
            per_task = [future.result() for future in futures]

    summary = {}
    for name in methods:
        accs = np.array([results[name][1] for results in per_task])
        summary[name] = {
            "mean": float(accs.mean()),
            "std": float(accs.std()),
            "per_task": [float(a) for a in accs],
            "reports": [results[name][0] for results in per_task],
        }
    return summary


def init_comparison(tasks, modes=("random", "hard-mean"), seed=0):
    """Initial loss and zero-step accuracy per initialization mode.

    For hard-mean the zero-step predictor is the training-free rule;
    for random/zero it is argmax prediction at the drawn parameters.
    Accuracy is measured on the test split (validation if absent).
    """
    out = {mode: {"init_loss": [], "zero_step_acc": []} for mode in modes}
    for index, (task, text) in enumerate(tasks):
        for mode in modes:
            rng = np.random.default_rng(task_seed(seed, index))
            params = init_params(
                task.support, text, config=InitConfig(mode=mode), rng=rng
            )
            out[mode]["init_loss"].append(loss(task.support, text, params))
            if task.test_features is not None:
                feats, labels = task.test_features, task.test_labels
            else:
                feats, labels = task.val_features, task.val_labels
            if mode == "hard-mean":
                preds = training_free_predict(task, text, feats)
            else:
                preds = predict(feats, text, params)
            out[mode]["zero_step_acc"].append(accuracy(preds, labels))
    return out


def timing_bench(n, k, d, budget=300, seed=0, **fit_kwargs):
    """One timed fit at the given scale on synthetic data.

    Reports total wall-clock and the eigen/init/steps phase breakdown;
    asserts nothing. The synthetic validation split uses one shot per
    class so the timed section is dominated by the optimizer itself.
    """
    if n < k or k < 2:
        raise InputError(f"need n >= k >= 2, got n={n}, k={k}")
    shots = -(-n // k)
    t0 = time.perf_counter()
    try:
        task, text = synth_task(
            seed, k, shots, d, val_shots=1, test_shots=0
        )
    except MemoryError as err:
        raise ResourceError(f"allocation failed at n={n}, d={d}: {err}")
    synth_seconds = time.perf_counter() - t0

    cycling = _bench_cycling(budget, fit_kwargs.pop("cycling", None))
    t0 = time.perf_counter()
    try:
        report = fit(task, text, cycling=cycling, **fit_kwargs)
    except MemoryError as err:
        raise ResourceError(f"allocation failed at n={n}, d={d}: {err}")
    total = time.perf_counter() - t0
    meta = report.metadata
    return {
        "n": task.support.n,
        "k": k,
        "d": d,
        "budget": meta["budget"],
        "synth_seconds": synth_seconds,
        "total_seconds": total,
        "eigen_seconds": meta["eigen_seconds"],
        "init_seconds": meta["init_seconds"],
        "steps_seconds": meta["steps_seconds"],
        "lambda_max": meta["lambda_max"],
        "init_loss": meta["init_loss"],
        "final_loss": meta["final_loss"],
        "best_val_acc": report.best_val_acc,
    }


def _bench_cycling(budget, cycling):
    if cycling is not None:
        return CyclingConfig(
            iter_w=cycling.iter_w,
            iter_alpha=cycling.iter_alpha,
            budget=budget,
            strategy=cycling.strategy,
        )
    return CyclingConfig(budget=budget)


def write_summary_csv(path, summary):
    """Flatten a run_protocol summary into a CSV table."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "mean", "std", "task_index", "accuracy"])
        for name, entry in summary.items():
            for index, acc in enumerate(entry["per_task"]):
                writer.writerow(
                    [name, f"{entry['mean']:.6f}", f"{entry['std']:.6f}", index, f"{acc:.6f}"]
                )
