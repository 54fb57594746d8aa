"""Euclidean projection onto the cone of graph Laplacians.

Every Laplacian is ``L(a) = sum_{i<j} a_ij (e_i - e_j)(e_i - e_j)^T`` with
``a >= 0``, so the closest Laplacian to a symmetric ``S`` solves the
nonnegative least-squares problem

    minimise  ||S - L(a)||_F^2 = ||S||^2 - 2 c^T a + a^T Q a,   a >= 0,

with ``c_ij = S_ii + S_jj - 2 S_ij`` and ``Q = 2 I + B^T B`` where ``B`` is the
node-by-pair incidence matrix. ``Q`` is positive definite, so the minimiser
is unique. We solve it with a Lawson-Hanson active-set method; each
subproblem on a passive set ``P`` reduces through the Woodbury identity to
an ``m x m`` positive definite system, so the cost per step does not grow
with the number of pairs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConvergenceError, DataError
from .laplacian import laplacian_from_weights
from .spectral import _as_config, inverse_power_map
from .tangent import from_tangent

__all__ = ["ProjectionResult", "project_to_laplacian", "pipeline_to_laplacian"]

DEFAULT_TOL = 1e-8
# Inputs whose asymmetry is below this (relative) are silently symmetrised.
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class ProjectionResult:
    laplacian: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float


def _pairs(m):
    return np.triu_indices(m, 1)


def _linear_term(S, iu, ju):
    d = np.diag(S)
    return d[iu] + d[ju] - 2.0 * S[iu, ju]


def _node_sums(values, iu, ju, m):
    out = np.zeros(m)
    np.add.at(out, iu, values)
    np.add.at(out, ju, values)
    return out


def _half_neg_gradient(a, c, iu, ju, m):
    # c - Q a, where (Q a)_ij = 2 a_ij + deg_i + deg_j
    deg = _node_sums(a, iu, ju, m)
    return c - 2.0 * a - deg[iu] - deg[ju]


def _solve_passive(c, passive, iu, ju, m):
    """Unconstrained minimiser restricted to the pairs in ``passive``."""
    z = np.zeros_like(c)
    idx = np.flatnonzero(passive)
    if idx.size == 0:
        return z
    pi, pj = iu[idx], ju[idx]
    M = 2.0 * np.eye(m)
    np.add.at(M, (pi, pj), 1.0)
    np.add.at(M, (pj, pi), 1.0)
    deg = np.bincount(pi, minlength=m) + np.bincount(pj, minlength=m)
    M[np.diag_indices(m)] += deg
    r = _node_sums(c[idx], pi, pj, m)
    y = cho_solve(cho_factor(M), r)
    z[idx] = 0.5 * (c[idx] - y[pi] - y[pj])
    return z


def _kkt_residual(a, c, iu, ju, m):
    grad = -2.0 * _half_neg_gradient(a, c, iu, ju, m)
    pos = a > 0
    res = 0.0
    if pos.any():
        res = max(res, float(np.max(np.abs(grad[pos]))))
    if (~pos).any():
        res = max(res, float(np.max(-grad[~pos])))
    return max(res, 0.0)


def _symmetrize(S):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DataError(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise DataError("matrix has non-finite entries")
    asym = float(np.max(np.abs(S - S.T))) if S.size else 0.0
    if asym > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(S)))):
        raise DataError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return 0.5 * (S + S.T)


def project_to_laplacian(S, tol=DEFAULT_TOL, max_iter=None):
    """Closest graph Laplacian to ``S`` in Frobenius norm.

    Returns a :class:`ProjectionResult`. ``tol`` bounds the KKT residual of
    the edge-weight problem (gradient of the squared distance). Raises
    :class:`ConvergenceError` after ``max_iter`` active-set steps (default
    ``50 m^2``).
    """
    S = _symmetrize(S)
    m = S.shape[0]
    if max_iter is None:
        max_iter = 50 * m * m
    iu, ju = _pairs(m)
    if m < 2:
        L = np.zeros_like(S)
        return ProjectionResult(L, float(np.sum(S**2)), 0, 0.0)

    a0 = np.maximum(-S[iu, ju], 0.0)
    L0 = laplacian_from_weights(_weights(a0, iu, ju, m))
    if np.array_equal(L0, S):
        return ProjectionResult(L0, 0.0, 0, 0.0)

    c = _linear_term(S, iu, ju)
    thresh = 0.5 * tol

    # Warm start: support of the minimiser over all pairs, shrunk until the
    # restricted solution is strictly positive (a feasible point).
    passive = np.ones(c.size, dtype=bool)
    while True:
        z = _solve_passive(c, passive, iu, ju, m)
        bad = passive & (z <= 0)
        if not bad.any():
            break
        passive &= ~bad
    a = np.where(passive, z, 0.0)

    iterations = 0
    barred = np.zeros_like(passive)
    while True:
        w = _half_neg_gradient(a, c, iu, ju, m)
        cand = ~passive & ~barred & (w > thresh)
        if not cand.any():
            break
        if iterations >= max_iter:
            L = laplacian_from_weights(_weights(a, iu, ju, m))
            res = _kkt_residual(a, c, iu, ju, m)
            raise ConvergenceError(
                f"projection did not converge in {max_iter} iterations (KKT residual {res:.3g})",
                best=L, residual=res, iterations=iterations)
        j = np.flatnonzero(cand)[np.argmax(w[cand])]
        passive[j] = True
        iterations += 1
        z = _solve_passive(c, passive, iu, ju, m)
        if z[j] <= 0:
            # Entering variable cannot leave zero: roundoff-level gradient.
            passive[j] = False
            barred[j] = True
            continue
        while True:
            neg = passive & (z <= 0)
            if not neg.any():
                a = z
                break
            iterations += 1
            step = np.min(a[neg] / (a[neg] - z[neg]))
            a = a + step * (z - a)
            passive &= a > 0
            a = np.where(passive, a, 0.0)
            z = _solve_passive(c, passive, iu, ju, m)
        barred[:] = False

    L = laplacian_from_weights(_weights(a, iu, ju, m))
    res = _kkt_residual(a, c, iu, ju, m)
    if res > tol:
        raise ConvergenceError(
            f"projection stalled with KKT residual {res:.3g} > {tol:.3g}",
            best=L, residual=res, iterations=iterations)
    return ProjectionResult(L, float(np.sum((S - L) ** 2)), iterations, res)


def _weights(a, iu, ju, m):
    W = np.zeros((m, m))
    W[iu, ju] = a
    W[ju, iu] = a
    return W


def pipeline_to_laplacian(v, cfg=None, tol=DEFAULT_TOL, max_iter=None, m=None):
    """Map tangent coordinates back to a graph Laplacian.

    Undo the vectorisation, reverse the power with :func:`inverse_power_map`
    and project onto the Laplacian cone. ``cfg`` defaults to the power stored
    on a :class:`~graphnw.tangent.TangentVector`.
    """
    if cfg is None and hasattr(v, "alpha"):
        cfg = v.alpha
    cfg = _as_config(cfg)
    S = inverse_power_map(from_tangent(v, m), cfg)
    return project_to_laplacian(S, tol=tol, max_iter=max_iter).laplacian
