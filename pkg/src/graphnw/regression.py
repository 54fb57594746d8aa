"""Nadaraya-Watson regression with graph Laplacian responses."""

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from .errors import DataError, SupportError
from .laplacian import validate_laplacian
from .projection import DEFAULT_TOL, pipeline_to_laplacian
from .spectral import _as_config, power_distance
from .tangent import tangent_stack

__all__ = [
    "KernelConfig",
    "NetworkDataset",
    "CurveFit",
    "CVResult",
    "kernel_eval",
    "nw_weights",
    "nw_estimate_euclidean",
    "nw_estimate_power",
    "fit_curve",
    "loocv_bandwidth",
    "reverse_nw",
    "DEFAULT_TRUNCATION",
]

DEFAULT_TRUNCATION = 10.0
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian kernel with bandwidth ``h``, truncated at radius ``truncation_multiple * h``."""

    h: float
    truncation_multiple: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise DataError(f"bandwidth must be positive, got {self.h!r}")
        if not self.truncation_multiple > 0:
            raise DataError(f"truncation_multiple must be positive, got {self.truncation_multiple!r}")

    @property
    def radius(self):
        return self.truncation_multiple * self.h


def _kernel_of_norm(r, cfg):
    r = np.asarray(r, dtype=float)
    k = (INV_SQRT_2PI / cfg.h) * np.exp(-(r * r) / (2.0 * cfg.h * cfg.h))
    return np.where(r <= cfg.radius, k, 0.0)


def kernel_eval(u, cfg):
    """Truncated Gaussian kernel ``K_h(u)`` for a covariate difference ``u``."""
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(u, dtype=float))))
    return float(_kernel_of_norm(r, cfg))


def _as_covariates(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1)
    return x


@dataclass(frozen=True, eq=False)
class NetworkDataset:
    """Paired covariates ``x_i`` (rows of an ``(n, p)`` array) and Laplacians ``L_i``.

    A 1-d ``covariates`` argument is read as ``n`` scalar covariates. Labels
    default to ``"1", ..., "n"``; ``node_labels`` optionally names the
    Laplacian rows.
    """

    covariates: np.ndarray
    responses: np.ndarray
    labels: tuple = None
    node_labels: tuple = None
    _tangents: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        x = _as_covariates(self.covariates).copy()
        L = np.array(self.responses, dtype=float)
        if L.ndim == 2:
            L = L[None]
        if L.ndim != 3 or L.shape[1] != L.shape[2]:
            raise DataError(f"responses must be a stack of square matrices, got shape {L.shape}")
        n = L.shape[0]
        if n < 1:
            raise DataError("dataset must contain at least one observation")
        if x.shape[0] != n:
            raise DataError(f"{x.shape[0]} covariates for {n} responses")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(L))):
            raise DataError("dataset contains non-finite values")
        labels = self.labels
        labels = tuple(str(i + 1) for i in range(n)) if labels is None else tuple(map(str, labels))
        if len(labels) != n:
            raise DataError(f"{len(labels)} labels for {n} observations")
        x.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "responses", L)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.responses.shape[0]

    @property
    def m(self):
        return self.responses.shape[1]

    @property
    def p(self):
        return self.covariates.shape[1]

    def __len__(self):
        return self.n

    @cached_property
    def order(self):
        """Canonical observation order used for every weighted sum.

        Sorting by covariate (ties by response bytes) makes estimates
        independent of how the observations were listed.
        """
        keys = [(tuple(self.covariates[i]), self.responses[i].tobytes()) for i in range(self.n)]
        return np.array(sorted(range(self.n), key=keys.__getitem__), dtype=int)

    def tangents(self, cfg=None):
        """Tangent coordinates of every response, cached per power."""
        alpha = _as_config(cfg).alpha
        if alpha not in self._tangents:
            T = tangent_stack(self.responses, alpha)
            T.setflags(write=False)
            self._tangents[alpha] = T
        return self._tangents[alpha]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return NetworkDataset(self.covariates[idx], self.responses[idx],
                              tuple(self.labels[i] for i in idx), self.node_labels)

    def with_covariates(self, covariates):
        return NetworkDataset(covariates, self.responses, self.labels, self.node_labels)


def _weights_over(x, covariates, order, cfg, mask=None):
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
    if x.size != covariates.shape[1]:
        raise DataError(f"query has dimension {x.size}, covariates have {covariates.shape[1]}")
    r = np.linalg.norm(covariates - x, axis=1)
    k = _kernel_of_norm(r, cfg)
    if mask is not None:
        k = np.where(mask, k, 0.0)
    total = float(np.sum(k[order]))
    if not total > 0:
        raise SupportError(
            f"query {x.tolist()} is outside the kernel support (radius {cfg.radius:g})", query=x)
    return k / total


def nw_weights(x, covariates, cfg):
    """Normalised kernel weights ``W_hi(x)`` for each observation.

    ``covariates`` may be a :class:`NetworkDataset` or an array of
    covariates. Raises :class:`SupportError` when no observation lies within
    the truncation radius of ``x``.
    """
    if isinstance(covariates, NetworkDataset):
        cov, order = covariates.covariates, covariates.order
    else:
        cov = _as_covariates(covariates)
        order = np.lexsort(cov.T[::-1])
    return _weights_over(x, cov, order, cfg)


def _weighted_sum(w, items, order):
    # Offsets from a reference item: identical items reproduce it exactly.
    idx = order[w[order] > 0]
    ref = items[idx[0]]
    return ref + np.tensordot(w[idx], items[idx] - ref, axes=1)


def nw_estimate_euclidean(x, dataset, cfg):
    """Kernel-weighted average of the response Laplacians at ``x``.

    A convex combination of Laplacians, so the result is a Laplacian without
    any projection.
    """
    w = nw_weights(x, dataset, cfg)
    return _weighted_sum(w, dataset.responses, dataset.order)


def _power_estimate(w, dataset, power, tol, max_iter):
    v = _weighted_sum(w, dataset.tangents(power), dataset.order)
    return pipeline_to_laplacian(v, power, tol=tol, max_iter=max_iter, m=dataset.m)


def nw_estimate_power(x, dataset, cfg, power=None, tol=DEFAULT_TOL, max_iter=None):
    """Power Euclidean Nadaraya-Watson estimate at ``x``.

    Averages the tangent coordinates of ``F_alpha(L_i)`` with the kernel
    weights and maps the average back to the Laplacian cone. With
    ``alpha = 1`` this agrees with :func:`nw_estimate_euclidean`.
    """
    power = _as_config(power)
    w = nw_weights(x, dataset, cfg)
    return _power_estimate(w, dataset, power, tol, max_iter)


@dataclass(frozen=True)
class CurveFit:
    query_points: np.ndarray  # (g, p)
    fitted: np.ndarray  # (g, m, m)
    alpha: float
    h: float

    def __len__(self):
        return self.fitted.shape[0]


def fit_curve(query, dataset, cfg, power=None, tol=DEFAULT_TOL, max_iter=None):
    """Estimates at every query point, returned as a :class:`CurveFit`."""
    power = _as_config(power)
    q = _as_covariates(query)
    if q.shape[1] != dataset.p:
        q = q.reshape(-1, dataset.p)
    fitted = []
    for x in q:
        try:
            L = nw_estimate_power(x, dataset, cfg, power, tol=tol, max_iter=max_iter)
        except SupportError as exc:
            raise SupportError(f"grid point {x.tolist()}: {exc}", query=x) from exc
        fitted.append(L)
    fitted = np.array(fitted).reshape(len(q), dataset.m, dataset.m)
    for x, L in zip(q, fitted):
        check = validate_laplacian(L, 1e-8)
        if not check:
            raise DataError(f"fitted value at {x.tolist()} is not a Laplacian: {check.violations}")
    return CurveFit(q, fitted, power.alpha, cfg.h)


@dataclass(frozen=True)
class CVResult:
    bandwidths: np.ndarray
    criteria: np.ndarray
    best: float

    def table(self):
        return list(zip(self.bandwidths.tolist(), self.criteria.tolist()))


def loocv_criterion(dataset, h, power=None, truncation_multiple=DEFAULT_TRUNCATION,
                    tol=DEFAULT_TOL, max_iter=None):
    """Leave-one-out criterion ``sum_i d_alpha(L_i, L_{-i}(x_i; h))^2``.

    Returns ``inf`` when the estimate is undefined for any held-out point.
    """
    power = _as_config(power)
    cfg = KernelConfig(h, truncation_multiple)
    n = dataset.n
    total = 0.0
    for i in range(n):
        mask = np.ones(n, dtype=bool)
        mask[i] = False
        try:
            w = _weights_over(dataset.covariates[i], dataset.covariates, dataset.order, cfg, mask)
        except SupportError:
            return math.inf
        Lhat = _power_estimate(w, dataset, power, tol, max_iter)
        total += power_distance(dataset.responses[i], Lhat, power) ** 2
    return total


def loocv_bandwidth(dataset, candidates, power=None, truncation_multiple=DEFAULT_TRUNCATION,
                    tol=DEFAULT_TOL, max_iter=None):
    """Select a bandwidth by leave-one-out cross validation.

    The smallest bandwidth wins ties. Raises :class:`DataError` when every
    candidate leaves some held-out point without kernel support.
    """
    if dataset.n < 2:
        raise DataError("cross validation needs at least two observations")
    hs = np.asarray(list(candidates), dtype=float)
    if hs.size == 0:
        raise DataError("no candidate bandwidths")
    crit = np.array([loocv_criterion(dataset, h, power, truncation_multiple, tol, max_iter)
                     for h in hs])
    if not np.any(np.isfinite(crit)):
        raise DataError("no feasible bandwidth: every candidate leaves a point outside the kernel support")
    best = min(np.flatnonzero(crit == np.min(crit)), key=lambda k: hs[k])
    return CVResult(hs, crit, float(hs[best]))


def reverse_nw(L, dataset, cfg, power=None):
    """Predict a covariate from a Laplacian by kernel-weighting on distance.

    ``dataset.covariates`` play the role of the responses ``t_i``; weights are
    ``K_h(d_alpha(L, L_i))``.
    """
    power = _as_config(power)
    L = np.asarray(L, dtype=float)
    d = np.array([power_distance(L, Li, power) for Li in dataset.responses])
    k = _kernel_of_norm(d, cfg)
    order = dataset.order
    total = float(np.sum(k[order]))
    if not total > 0:
        raise SupportError(f"no observation within distance {cfg.radius:g} of the query network")
    return _weighted_sum(k / total, dataset.covariates, order)
