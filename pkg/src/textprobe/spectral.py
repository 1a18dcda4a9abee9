"""Eigenvalue machinery behind the curvature constants.

The production path is power iteration on the feature Gram matrix
sum_i f_i f_i^T using the O(ND) matvec x -> F^T (F x); the D x D
Gram matrix is never formed. A dependency-free cyclic Jacobi
eigensolver serves as the dense oracle for tests and diagnostics.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError, OracleScopeError

DENSE_ORACLE_MAX_DIM = 2048


@dataclass(frozen=True)
class GramSpectrum:
    """Dominant-eigenvalue estimate for sum_i f_i f_i^T."""

    lambda_max: float
    iterations_used: int
    converged: bool


def power_iteration_gram(features, tol=1e-10, max_iter=200):
    """Largest eigenvalue of the feature Gram matrix by power iteration.

    Each iteration costs two thin matrix-vector products, O(ND) total;
    no D x D intermediate is allocated. The returned estimate is the
    Rayleigh quotient at the last iterate; convergence means its
    relative change dropped below ``tol``. When the loop exhausts
    ``max_iter`` the caller decides what to do (the step-size module
    falls back to the trace bound N).
    """
    if tol <= 0:
        raise InputError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise InputError(f"max_iter must be >= 1, got {max_iter}")
    f = features.data
    # Start from the mean feature row: nonzero with probability 1 and
    # already correlated with the dominant direction.
    x = f.mean(axis=0)
    norm = np.linalg.norm(x)
    if norm < 1e-12:
        x = np.zeros(features.dim)
        x[0] = 1.0
    else:
        x = x / norm

    rayleigh = 0.0
    for iteration in range(1, max_iter + 1):
        z = f.T @ (f @ x)
        new_rayleigh = float(x @ z)
        z_norm = np.linalg.norm(z)
        if z_norm < 1e-300:
            # Gram annihilates the iterate; the matrix is (numerically)
            # zero on this subspace.
            return GramSpectrum(0.0, iteration, True)
        x = z / z_norm
        if abs(new_rayleigh - rayleigh) <= tol * max(abs(new_rayleigh), 1e-300):
            return GramSpectrum(new_rayleigh, iteration, True)
        rayleigh = new_rayleigh
    return GramSpectrum(rayleigh, max_iter, False)


def jacobi_eigenvalues(matrix, max_sweeps=64):
    """All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Plain threshold-free cyclic sweeps with the standard stable
    rotation; adequate for the oracle sizes this package needs.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, float(np.abs(a).max()))):
        raise InputError("matrix must be symmetric")
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0]])

    scale = max(float(np.abs(a).max()), 1e-300)
    for _ in range(max_sweeps):
        # cancellation can leave a tiny negative; clamp before the sqrt
        off_sq = float(np.sum(np.square(a)) - np.sum(np.square(np.diag(a))))
        off = np.sqrt(max(off_sq, 0.0))
        if off <= 1e-15 * scale * n:
            break
        # Rotations below this size cannot move the off-diagonal mass
        # meaningfully this sweep.
        threshold = off / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0 or abs(apq) <= threshold * 1e-3:
                    continue
                delta = a[q, q] - a[p, p]
                if abs(delta) > 1e14 * abs(apq):
                    # asymptotic small-angle root; avoids overflow in theta
                    t = apq / delta
                else:
                    theta = delta / (2.0 * apq)
                    if theta == 0.0:
                        t = 1.0
                    else:
                        t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.diag(a).copy()


def dense_gram_eigs(features):
    """All eigenvalues of sum_i f_i f_i^T, descending (test oracle).

    Materializes the D x D Gram matrix, so it is guarded to
    D <= 2048; production code must use power_iteration_gram.
    """
    if features.dim > DENSE_ORACLE_MAX_DIM:
        raise OracleScopeError(
            f"dense oracle supports D <= {DENSE_ORACLE_MAX_DIM}, "
            f"got D = {features.dim}"
        )
    gram = features.data.T @ features.data
    eigs = jacobi_eigenvalues(gram)
    return np.sort(eigs)[::-1]


def gershgorin_check(p_row):
    """Eigenvalue extremes of diag(p) - p p^T for a simplex vector p.

    The contract being verified elsewhere: the spectrum lies inside
    [0, 1/2] for any probability vector.
    """
    p = np.asarray(p_row, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise InputError("p_row must be a non-empty vector")
    if np.any(p < -1e-9) or abs(p.sum() - 1.0) > 1e-9:
        raise InputError("p_row must lie on the probability simplex within 1e-9")
    m = np.diag(p) - np.outer(p, p)
    eigs = jacobi_eigenvalues(m)
    return float(eigs.min()), float(eigs.max())


def hessian_alpha_diag(support, text, cache, sim=None):
    """Diagonal of the alpha-block Hessian approximation.

    Entry k is (1/N) sum_i (p_ik - p_ik^2)(f_i . t_k)^2, which is
    bounded above by (1/(4N)) sum_i (f_i . t_k)^2.
    """
    if sim is None:
        sim = support.features.data @ text.data.T
    p = cache.p
    if p.shape != sim.shape:
        raise InputError("softmax cache does not match the support/text pair")
    return ((p - p * p) * sim * sim).sum(axis=0) / support.n
