"""Command-line surface.

Every subcommand emits a machine-readable JSON document (stdout or
--out). The `fit` report deliberately excludes wall-clock fields, so
identical flags and input files produce byte-identical output; timing
goes to stderr instead.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics
from .errors import NumericError, ProbeError
from .evaluation import accuracy, predict, training_free_predict
from .harness import timing_bench
from .io import (
    load_manifest,
    load_params,
    write_embeddings,
    write_labels,
    write_manifest,
    write_params,
)
from .optimizer import fit
from .stepsize import build_step_sizes
from .synth import synth_task
from .types import CyclingConfig, InitConfig, LabelVector

INIT_NAMES = {"hard": "hard-mean", "random": "random", "zero": "zero"}


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def _emit(payload, out_path):
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _eval_split(task, split):
    if split == "test" or (split == "auto" and task.test_features is not None):
        if task.test_features is None:
            raise ProbeError("manifest has no test split")
        return "test", task.test_features, task.test_labels
    return "val", task.val_features, task.val_labels


def _report_payload(report, task, text):
    meta = report.metadata
    payload = {
        "strategy": meta["strategy"],
        "budget": meta["budget"],
        "iter_w": meta["iter_w"],
        "iter_alpha": meta["iter_alpha"],
        "tau1": meta["tau1"],
        "tau2": meta["tau2"],
        "tau": meta["tau"],
        "lr": meta["lr"],
        "init": meta["init_mode"],
        "seed": meta["seed"],
        "alpha_mode": meta["alpha_mode"],
        "gamma_w": meta["gamma_w"],
        "gamma_alpha": meta["gamma_alpha"],
        "gamma_global": meta["gamma_global"],
        "lambda_max": meta["lambda_max"],
        "power_iterations": meta["power_iterations"],
        "power_converged": meta["power_converged"],
        "init_loss": meta["init_loss"],
        "final_loss": meta["final_loss"],
        "alpha_negative_fraction": meta["alpha_negative_fraction"],
        "val_cadence": meta["val_cadence"],
        "loss_trace": report.loss_trace,
        "val_acc_trace": report.val_acc_trace,
        "val_eval_updates": report.val_eval_updates,
        "best_update_index": report.best_update_index,
        "best_val_acc": report.best_val_acc,
        "n": meta["n"],
        "k": meta["k"],
        "d": meta["d"],
        "shots": meta["shots"],
    }
    if task.test_features is not None:
        preds = predict(task.test_features, text, report.best_params)
        payload["test_acc"] = accuracy(preds, task.test_labels)
    return payload


def _cmd_fit(args):
    task, text, _ = load_manifest(args.manifest)
    strategy = args.strategy
    if strategy == "bcgd":
        cycling = CyclingConfig(
            iter_w=1, iter_alpha=1, budget=args.budget, strategy="bcgd"
        )
    else:
        cycling = CyclingConfig(
            iter_w=args.iter_w,
            iter_alpha=args.iter_alpha,
            budget=args.budget,
            strategy=strategy,
        )
    report = fit(
        task,
        text,
        cycling=cycling,
        init=InitConfig(mode=INIT_NAMES[args.init]),
        tau1=args.tau1,
        tau2=args.tau2,
        seed=args.seed,
    )
    if args.params_out:
        write_params(args.params_out, report.best_params)
    _emit(_report_payload(report, task, text), args.out)
    print(
        f"elapsed: {report.elapsed:.3f}s (eigen "
        f"{report.metadata['eigen_seconds']:.3f}s, init "
        f"{report.metadata['init_seconds']:.3f}s, steps "
        f"{report.metadata['steps_seconds']:.3f}s)",
        file=sys.stderr,
    )
    return 0


def _cmd_predict(args):
    task, text, _ = load_manifest(args.manifest)
    params = load_params(args.params)
    split, features, labels = _eval_split(task, args.split)
    preds = predict(features, text, params)
    if args.pred_out:
        write_labels(args.pred_out, preds)
    _emit(
        {
            "split": split,
            "n": preds.n,
            "accuracy": accuracy(preds, labels),
            "predictions": preds.labels,
        },
        args.out,
    )
    return 0


def _cmd_training_free(args):
    task, text, _ = load_manifest(args.manifest)
    split, features, labels = _eval_split(task, args.split)
    preds = training_free_predict(task, text, features)
    if args.pred_out:
        write_labels(args.pred_out, preds)
    _emit(
        {
            "split": split,
            "n": preds.n,
            "accuracy": accuracy(preds, labels),
            "predictions": preds.labels,
        },
        args.out,
    )
    return 0


def parse_grid(spec):
    """Parse 'LOW..HIGHxCOUNT' into a log-spaced learning-rate grid."""
    head, sep, count_s = spec.rpartition("x")
    low_s, mid, high_s = head.partition("..")
    try:
        low, high, count = float(low_s), float(high_s), int(count_s)
    except ValueError:
        low = high = count = None
    if not sep or not mid or low is None or low <= 0 or high <= low or count < 2:
        raise ProbeError(f"bad grid spec {spec!r}; expected e.g. 1e-4..1e2x7")
    return np.geomspace(low, high, count)


def _sweep_entry(task, text, budget, lr):
    cycling = CyclingConfig(strategy="gd", budget=budget)
    entry = {"lr": float(lr)}
    try:
        report = fit(task, text, cycling=cycling, lr=float(lr))
    except NumericError as err:
        entry["diverged"] = True
        entry["diverged_at_update"] = err.update_index
        return entry
    entry["diverged"] = False
    entry["final_loss"] = report.metadata["final_loss"]
    entry["best_val_acc"] = report.best_val_acc
    if task.test_features is not None:
        preds = predict(task.test_features, text, report.best_params)
        entry["test_acc"] = accuracy(preds, task.test_labels)
    return entry


def _cmd_sweep_lr(args):
    task, text, _ = load_manifest(args.manifest)
    grid = parse_grid(args.grid)
    results = [_sweep_entry(task, text, args.budget, lr) for lr in grid]
    sizes = build_step_sizes(task.support.features, text, tau=1.0)
    lipschitz_lr = 1.0 / sizes.gamma_global
    lipschitz = _sweep_entry(task, text, args.budget, lipschitz_lr)
    _emit(
        {
            "grid": [float(lr) for lr in grid],
            "results": results,
            "lipschitz_lr": lipschitz_lr,
            "lipschitz_result": lipschitz,
        },
        args.out,
    )
    return 0


def _cmd_ablate(args):
    task, text, _ = load_manifest(args.manifest)
    rows = []
    for variant, alpha_mode in (
        ("alpha-learned", "learned"),
        ("alpha-one", "one"),
        ("alpha-zero", "zero"),
    ):
        report = fit(
            task,
            text,
            cycling=CyclingConfig(budget=args.budget),
            alpha_mode=alpha_mode,
        )
        row = {
            "variant": variant,
            "init_loss": report.metadata["init_loss"],
            "final_loss": report.metadata["final_loss"],
            "best_val_acc": report.best_val_acc,
        }
        if task.test_features is not None:
            preds = predict(task.test_features, text, report.best_params)
            row["test_acc"] = accuracy(preds, task.test_labels)
        rows.append(row)
    _emit({"rows": rows}, args.out)
    return 0


def _cmd_synth(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    task, text = synth_task(
        args.seed,
        args.k,
        args.s,
        args.d,
        class_separation=args.sep,
        val_shots=args.val_shots,
        test_shots=args.test_shots,
        noise=args.noise,
        text_noise=args.text_noise,
    )
    files = {
        "text": "text.lpeb",
        "support_features": "support.lpeb",
        "support_labels": "support.lplb",
        "val_features": "val.lpeb",
        "val_labels": "val.lplb",
    }
    write_embeddings(out_dir / files["text"], text)
    write_embeddings(out_dir / files["support_features"], task.support.features)
    write_labels(out_dir / files["support_labels"], task.support.labels)
    write_embeddings(out_dir / files["val_features"], task.val_features)
    write_labels(out_dir / files["val_labels"], task.val_labels)
    if task.test_features is not None:
        files["test_features"] = "test.lpeb"
        files["test_labels"] = "test.lplb"
        write_embeddings(out_dir / files["test_features"], task.test_features)
        write_labels(out_dir / files["test_labels"], task.test_labels)
    entries = dict(files)
    entries["shots"] = args.s
    entries["seed"] = args.seed
    manifest_path = out_dir / "task.ini"
    write_manifest(manifest_path, entries)
    _emit(
        {
            "manifest": str(manifest_path),
            "files": {k: str(out_dir / v) for k, v in files.items()},
            "k": args.k,
            "s": args.s,
            "d": args.d,
            "sep": args.sep,
            "seed": args.seed,
        },
        args.out,
    )
    return 0


def _cmd_check(args):
    results = diagnostics.run_all(seed=args.seed)
    for result in results:
        status = "PASS" if result["passed"] else "FAIL"
        print(f"{result['name']}: {status}", file=sys.stderr)
    passed = all(r["passed"] for r in results)
    _emit({"checks": results, "passed": passed}, args.out)
    return 0 if passed else 1


def _cmd_bench(args):
    result = timing_bench(
        args.n, args.k, args.d, budget=args.budget, seed=args.seed
    )
    _emit(result, args.out)
    print(
        f"total {result['total_seconds']:.2f}s | eigen "
        f"{result['eigen_seconds']:.2f}s | init {result['init_seconds']:.2f}s "
        f"| steps {result['steps_seconds']:.2f}s",
        file=sys.stderr,
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="textprobe",
        description="Few-shot linear probing of cached embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a probe on a task manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--strategy", choices=["bmm", "bcgd", "gd"], default="bmm")
    p.add_argument("--budget", type=int, default=300)
    p.add_argument("--iter-w", type=int, default=10)
    p.add_argument("--iter-alpha", type=int, default=1)
    p.add_argument("--tau1", type=float, default=1.0)
    p.add_argument("--tau2", type=float, default=16.0)
    p.add_argument(
        "--init", choices=["hard", "random", "zero"], default="hard"
    )
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--params-out", default=None)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="predict with saved params")
    p.add_argument("--manifest", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--split", choices=["auto", "test", "val"], default="auto")
    p.add_argument("--out", default=None)
    p.add_argument("--pred-out", default=None)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser(
        "training-free", help="zero-step prediction from the hard init"
    )
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=["auto", "test", "val"], default="auto")
    p.add_argument("--out", default=None)
    p.add_argument("--pred-out", default=None)
    p.set_defaults(func=_cmd_training_free)

    p = sub.add_parser("sweep-lr", help="fixed-rate gradient descent sweep")
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid", default="1e-4..1e2x7")
    p.add_argument("--budget", type=int, default=300)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep_lr)

    p = sub.add_parser("ablate", help="alpha learned / fixed-1 / fixed-0 table")
    p.add_argument("--manifest", required=True)
    p.add_argument("--budget", type=int, default=300)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("synth", help="generate a synthetic task on disk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--s", type=int, default=4)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--sep", type=float, default=0.4)
    p.add_argument("--val-shots", type=int, default=None)
    p.add_argument("--test-shots", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.8)
    p.add_argument("--text-noise", type=float, default=0.25)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("check", help="run the built-in self-checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("bench", help="timed synthetic fit at a given scale")
    p.add_argument("--n", type=int, default=16000)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--d", type=int, default=1024)
    p.add_argument("--budget", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProbeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
