"""Data-driven curvature constants; 1/gamma is the implicit step size.

gamma_w = (tau1 / 4N) lambda_max(sum_i f_i f_i^T)
gamma_alpha = max_k (tau2 / 4N) sum_i (f_i . t_k)^2
gamma_global = tau * max(gamma_w, gamma_alpha)

tau1 = tau2 = 2 (and tau = 2) are the provably safe multipliers;
the method's defaults tau1 = 1, tau2 = 16 are approximate constants
that work well empirically. tau = 1 is accepted for the approximate
single-block mode exercised in the ablations.
"""

import numpy as np

from .errors import DegenerateTextError, InputError
from .objective import similarity
from .spectral import power_iteration_gram
from .types import StepSizes

DEFAULT_TAU1 = 1.0
DEFAULT_TAU2 = 16.0
DEFAULT_TAU = 2.0


def gamma_w(features, tau1=DEFAULT_TAU1, spectrum=None, tol=1e-10, max_iter=200):
    """Curvature constant of the w block.

    When power iteration fails to converge the trace bound
    lambda_max <= N (unit-norm rows) is used instead, which is always
    a safe over-estimate.
    """
    if features is None or features.rows < 1:
        raise InputError("gamma_w requires a non-empty feature matrix")
    if tau1 < 1:
        raise InputError(f"tau1 must be >= 1, got {tau1}")
    if spectrum is None:
        spectrum = power_iteration_gram(features, tol=tol, max_iter=max_iter)
    lam_max = spectrum.lambda_max if spectrum.converged else float(features.rows)
    return tau1 * lam_max / (4.0 * features.rows)


def gamma_alpha(features, text, tau2=DEFAULT_TAU2, sim=None):
    """Curvature constant of the alpha block."""
    if tau2 < 1:
        raise InputError(f"tau2 must be >= 1, got {tau2}")
    if sim is None:
        sim = similarity(features, text)
    column_energy = np.sum(sim * sim, axis=0)
    peak = float(column_energy.max())
    if peak <= 0.0:
        raise DegenerateTextError(
            "every text embedding is orthogonal to every feature row; "
            "the alpha block has no curvature"
        )
    return tau2 * peak / (4.0 * features.rows)


def gamma_global(gw, ga, tau=DEFAULT_TAU):
    """Global constant for joint (w, alpha) steps."""
    if not (np.isfinite(gw) and gw > 0) or not (np.isfinite(ga) and ga > 0):
        raise InputError("block constants must be positive and finite")
    if tau < 1:
        raise InputError(f"tau must be >= 1, got {tau}")
    return tau * max(gw, ga)


def build_step_sizes(
    features,
    text,
    tau1=DEFAULT_TAU1,
    tau2=DEFAULT_TAU2,
    tau=DEFAULT_TAU,
    sim=None,
    tol=1e-10,
    max_iter=200,
):
    """Compute all three constants once, before optimization starts."""
    gw = gamma_w(features, tau1=tau1, tol=tol, max_iter=max_iter)
    ga = gamma_alpha(features, text, tau2=tau2, sim=sim)
    gg = gamma_global(gw, ga, tau=tau)
    return StepSizes(
        gamma_w=gw,
        gamma_alpha=ga,
        gamma_global=gg,
        tau1=tau1,
        tau2=tau2,
        tau=tau,
    )
