"""Few-shot linear probing of cached vision-language embeddings.

The probe scores class k as f . (w_k + alpha_k t_k): a learned visual
prototype blended with the class text embedding through a learned
per-class multiplier. Fitting minimizes the full-batch cross-entropy
with a block majorize-minimize scheme whose step sizes come from
data-derived curvature constants, starting from hard class means.
"""

from .errors import (
    DegenerateTextError,
    DegenerateWeightError,
    DimensionError,
    EmptyClassError,
    FormatError,
    InputError,
    NormError,
    NumericError,
    OracleScopeError,
    ProbeError,
    ResourceError,
)
from .estimator import BlendedLinearProbe, TrainingFreeProbe
from .evaluation import accuracy, predict, training_free_predict
from .initialization import init_alpha_hard, init_params, init_w_hard
from .objective import grad_alpha, grad_w, logits, loss, softmax_rows
from .optimizer import TaskSplit, convergence_rate_check, fit
from .spectral import dense_gram_eigs, gershgorin_check, power_iteration_gram
from .stepsize import build_step_sizes, gamma_alpha, gamma_global, gamma_w
from .synth import synth_task
from .types import (
    CyclingConfig,
    FeatureMatrix,
    FitReport,
    InitConfig,
    LabelVector,
    ProbeParams,
    SoftmaxCache,
    StepSizes,
    SupportSet,
    TextBank,
    one_hot,
)

__version__ = "0.1.0"

__all__ = [
    "BlendedLinearProbe",
    "CyclingConfig",
    "DegenerateTextError",
    "DegenerateWeightError",
    "DimensionError",
    "EmptyClassError",
    "FeatureMatrix",
    "FitReport",
    "FormatError",
    "InitConfig",
    "InputError",
    "LabelVector",
    "NormError",
    "NumericError",
    "OracleScopeError",
    "ProbeError",
    "ProbeParams",
    "ResourceError",
    "SoftmaxCache",
    "StepSizes",
    "SupportSet",
    "TaskSplit",
    "TextBank",
    "TrainingFreeProbe",
    "accuracy",
    "build_step_sizes",
    "convergence_rate_check",
    "dense_gram_eigs",
    "fit",
    "gamma_alpha",
    "gamma_global",
    "gamma_w",
    "gershgorin_check",
    "grad_alpha",
    "grad_w",
    "init_alpha_hard",
    "init_params",
    "init_w_hard",
    "logits",
    "loss",
    "one_hot",
    "power_iteration_gram",
    "predict",
    "softmax_rows",
    "synth_task",
    "training_free_predict",
    "__version__",
]
