"""Trend and anomaly diagnostics for time-ordered network data."""

from dataclasses import dataclass
import math

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DataError
from .spectral import _as_config, power_distance
from .tangent import tangent_stack

__all__ = [
    "DistanceSeries",
    "AnomalyRanking",
    "PcaModel",
    "Ar1Model",
    "MdsResult",
    "consecutive_distances",
    "residual_distances",
    "rank_anomalies",
    "pca_fit",
    "pca_project",
    "rho_ls_ratio",
    "estimate_rho_ls",
    "estimate_rho_pc1",
    "mahalanobis_factors",
    "mahalanobis_distance_matrix",
    "classical_mds",
    "DEFAULT_RHO_GRID",
]

RHO_EPS = 1e-6
DEFAULT_RHO_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))


@dataclass(frozen=True)
class DistanceSeries:
    labels: tuple
    values: np.ndarray

    def __len__(self):
        return len(self.values)


def _responses(data):
    return getattr(data, "responses", data)


def _labels(data, n):
    labels = getattr(data, "labels", None)
    return tuple(labels) if labels is not None else tuple(str(i + 1) for i in range(n))


def consecutive_distances(dataset, power=None):
    """``d_alpha(L_i, L_{i+1})`` along the dataset order, labelled ``"a-b"``."""
    L = _responses(dataset)
    n = len(L)
    if n < 2:
        raise DataError("consecutive distances need at least two observations")
    labels = _labels(dataset, n)
    values = np.array([power_distance(L[i], L[i + 1], power) for i in range(n - 1)])
    return DistanceSeries(tuple(f"{labels[i]}-{labels[i + 1]}" for i in range(n - 1)), values)


def residual_distances(dataset, fit, power=None):
    """``d_alpha(fitted(x_i), L_i)`` for a fit evaluated at the observed covariates."""
    q = np.asarray(fit.query_points, dtype=float)
    if q.shape != dataset.covariates.shape or not np.allclose(q, dataset.covariates, rtol=0, atol=1e-12):
        raise DataError("fit must be evaluated at the observed covariates")
    if power is None:
        power = fit.alpha
    values = np.array([power_distance(Lh, L, power) for Lh, L in zip(fit.fitted, dataset.responses)])
    return DistanceSeries(dataset.labels, values)


@dataclass(frozen=True)
class AnomalyRanking:
    labels: tuple
    scores: np.ndarray
    positions: np.ndarray  # 0-based positions in the input series
    threshold: float
    flagged: tuple


def rank_anomalies(series, k=None):
    """Top-``k`` entries of a distance series, largest first.

    Ties go to the earlier entry. ``threshold`` is ``median + 3 * MAD`` of the
    whole series and ``flagged`` lists every label above it, in series order.
    """
    values = np.asarray(series.values, dtype=float)
    n = values.size
    if n == 0:
        raise DataError("cannot rank an empty series")
    k = n if k is None else int(k)
    if not 0 <= k <= n:
        raise DataError(f"k={k} outside 0..{n}")
    order = np.lexsort((np.arange(n), -values))[:k]
    med = float(np.median(values))
    mad = float(np.median(np.abs(values - med)))
    threshold = med + 3.0 * mad
    flagged = tuple(series.labels[i] for i in range(n) if values[i] > threshold)
    return AnomalyRanking(tuple(series.labels[i] for i in order), values[order], order,
                          threshold, flagged)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # rows, orthonormal
    explained_variance: np.ndarray

    @property
    def explained_ratio(self):
        total = self.explained_variance.sum()
        return self.explained_variance / total if total > 0 else np.zeros_like(self.explained_variance)


def pca_fit(vectors):
    """Principal components of tangent coordinates (rows of ``vectors``).

    Variances use the ``n - 1`` normalisation. Component signs are fixed so
    the largest-magnitude loading of each component is positive.
    """
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("PCA needs at least two observations")
    n = X.shape[0]
    mean = X.mean(axis=0)
    _, s, Vt = np.linalg.svd(X - mean, full_matrices=False)
    pivot = np.argmax(np.abs(Vt), axis=1)
    signs = np.sign(Vt[np.arange(Vt.shape[0]), pivot])
    signs[signs == 0] = 1.0
    return PcaModel(mean, Vt * signs[:, None], s**2 / (n - 1))


def pca_project(model, items, k=2):
    """Scores of ``items`` on the first ``k`` components."""
    X = np.atleast_2d(np.asarray(items, dtype=float))
    if X.shape[1] != model.mean.size:
        raise DataError(f"items have dimension {X.shape[1]}, model has {model.mean.size}")
    if k > model.components.shape[0]:
        raise DataError(f"k={k} exceeds the {model.components.shape[0]} available components")
    return (X - model.mean) @ model.components[:k].T


@dataclass(frozen=True)
class Ar1Model:
    rho: float
    sigma: float = 1.0
    raw: float = None
    clamped: bool = False

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise DataError(f"rho must lie in (0, 1), got {self.rho!r}")


def rho_ls_ratio(vectors):
    """Least-squares AR(1) coefficient ``sum y_k.v_k / sum v_k.v_k`` (unclamped)."""
    V = np.asarray(vectors, dtype=float)
    if V.ndim != 2 or V.shape[0] < 2:
        raise DataError("rho estimation needs at least two observations")
    prev, cur = V[:-1], V[1:]
    den = float(np.sum(prev * prev))
    if den == 0:
        raise DataError("rho estimation failed: all lagged tangent vectors are zero")
    return float(np.sum(cur * prev)) / den


def estimate_rho_ls(vectors):
    """Least-squares AR(1) coefficient, clamped into ``[1e-6, 1 - 1e-6]``."""
    return _ar1_from_ratio(rho_ls_ratio(vectors)).rho


def _ar1_from_ratio(raw):
    rho = min(max(raw, RHO_EPS), 1.0 - RHO_EPS)
    return Ar1Model(rho, 1.0, raw, rho != raw)


def mahalanobis_factors(n, rho):
    """``sqrt((1 - rho) / rho**|k - l|)`` for every pair of time indices."""
    if not 0 < rho < 1:
        raise DataError(f"rho must lie in (0, 1), got {rho!r}")
    lag = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return np.sqrt((1.0 - rho) / rho**lag)


def _distance_matrix(data, power):
    L = _responses(data)
    if getattr(data, "tangents", None) is not None:
        T = data.tangents(power)
    else:
        T = tangent_stack(L, power)
    return squareform(pdist(T))


def power_distance_matrix(data, power=None):
    """Pairwise ``d_alpha`` between all observations (via tangent coordinates)."""
    return _distance_matrix(data, _as_config(power))


def mahalanobis_distance_matrix(data, rho, power=None):
    """AR(1) Mahalanobis distances ``sqrt((1-rho)/rho^|k-l|) d_alpha(L_k, L_l)``.

    ``data`` is a time-ordered :class:`~graphnw.regression.NetworkDataset` or
    a stack of Laplacians.
    """
    D = power_distance_matrix(data, power)
    return mahalanobis_factors(D.shape[0], rho) * D


@dataclass(frozen=True)
class MdsResult:
    coords: np.ndarray
    eigenvalues: np.ndarray  # all of them, descending
    truncated: bool  # fewer than k positive eigenvalues were available

    @property
    def axis1_fraction(self):
        pos = self.eigenvalues[self.eigenvalues > 0]
        return float(pos[0] / pos.sum()) if pos.size else 0.0


def classical_mds(D, k=2):
    """Classical (Torgerson) scaling of a distance matrix.

    Keeps at most ``k`` axes with positive eigenvalues of the double-centred
    ``-D**2 / 2``; ``eigenvalues`` reports the full spectrum, negative values
    included. Axis signs are fixed so each column's largest-magnitude entry
    is positive.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if D.ndim != 2 or D.shape != (n, n):
        raise DataError(f"distance matrix must be square, got {D.shape}")
    if not np.all(np.isfinite(D)):
        raise DataError("distance matrix has non-finite entries")
    if np.any(D < 0) or np.any(np.diag(D) != 0):
        raise DataError("distance matrix must be nonnegative with zero diagonal")
    if not np.allclose(D, D.T, rtol=1e-12, atol=0):
        raise DataError("distance matrix must be symmetric")
    D = 0.5 * (D + D.T)
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D * D) @ J
    B = 0.5 * (B + B.T)
    evals, evecs = np.linalg.eigh(B)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    scale = max(float(np.max(np.abs(evals))), np.finfo(float).tiny)
    positive = np.flatnonzero(evals > n * np.finfo(float).eps * scale)
    keep = positive[:k]
    V = evecs[:, keep]
    if V.size:
        pivot = np.argmax(np.abs(V), axis=0)
        signs = np.sign(V[pivot, np.arange(V.shape[1])])
        V = V * signs
    coords = V * np.sqrt(evals[keep])
    return MdsResult(coords, evals.copy(), keep.size < k)


def estimate_rho_pc1(data, grid=DEFAULT_RHO_GRID, power=None):
    """The ``rho`` whose Mahalanobis MDS puts the largest variance share on axis 1.

    The share is the first eigenvalue over the sum of positive eigenvalues of
    the double-centred configuration. Ties go to the smaller ``rho``.
    """
    grid = [float(r) for r in grid]
    if not grid:
        raise DataError("empty rho grid")
    for r in grid:
        if not 0 < r < 1:
            raise DataError(f"rho grid values must lie in (0, 1), got {r!r}")
    D = power_distance_matrix(data, power)
    best, best_share = None, -math.inf
    for rho in sorted(grid):
        M = mahalanobis_factors(D.shape[0], rho) * D
        if not np.all(np.isfinite(M)):
            continue
        share = classical_mds(M, 1).axis1_fraction
        if share > best_share:
            best, best_share = rho, share
    if best is None or best_share <= 0:
        raise DataError("every rho in the grid gives a degenerate MDS configuration")
    return best
