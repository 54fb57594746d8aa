"""Tangent coordinates at the origin of the embedding space.

A power-embedded Laplacian ``F_alpha(L)`` annihilates the all-ones vector,
so conjugating with the Helmert sub-matrix removes that constraint without
losing information. The remaining ``(m-1) x (m-1)`` symmetric block is
half-vectorised with off-diagonal entries scaled by ``sqrt(2)``, which makes
Euclidean distances between coordinate vectors equal to Frobenius distances
between the embedded matrices.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DataError
from .spectral import _as_config, power_map

__all__ = [
    "TangentVector",
    "helmert_submatrix",
    "to_tangent",
    "from_tangent",
    "tangent_dim",
    "size_from_dim",
]

SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=32)
def _helmert(m):
    H = np.zeros((m - 1, m))
    for j in range(1, m):
        h = -1.0 / np.sqrt(j * (j + 1))
        H[j - 1, :j] = h
        H[j - 1, j] = -j * h
    H.setflags(write=False)
    return H


def helmert_submatrix(m):
    """The ``(m-1) x m`` Helmert sub-matrix.

    Row ``j`` (1-based) is ``(h_j, ..., h_j, -j*h_j, 0, ..., 0)`` with ``j``
    leading entries ``h_j = -1/sqrt(j(j+1))``. Rows are orthonormal and
    orthogonal to the all-ones vector. The returned array is read-only and
    shared between calls.
    """
    m = int(m)
    if m < 2:
        raise DataError(f"Helmert sub-matrix needs m >= 2, got {m}")
    return _helmert(m)


def tangent_dim(m):
    return m * (m - 1) // 2


def size_from_dim(d):
    """Node count ``m`` with ``m(m-1)/2 == d``; raises if ``d`` is not triangular."""
    m = int(round((1 + np.sqrt(1 + 8 * d)) / 2))
    if d < 1 or tangent_dim(m) != d:
        raise DataError(f"length {d} is not m(m-1)/2 for any m >= 2")
    return m


@lru_cache(maxsize=32)
def _vech_index(k):
    iu, ju = np.triu_indices(k)
    scale = np.where(iu == ju, 1.0, SQRT2)
    return iu, ju, scale


@dataclass(frozen=True)
class TangentVector:
    coords: np.ndarray
    m: int
    alpha: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(-1)
        if c.size != tangent_dim(self.m):
            raise DataError(f"expected {tangent_dim(self.m)} coordinates for m={self.m}, got {c.size}")
        object.__setattr__(self, "coords", c)

    def __len__(self):
        return self.coords.size


def _vech(B):
    iu, ju, scale = _vech_index(B.shape[0])
    return B[iu, ju] * scale


def _unvech(v, k):
    iu, ju, scale = _vech_index(k)
    B = np.zeros((k, k))
    vals = v / scale
    B[iu, ju] = vals
    B[ju, iu] = vals
    return B


def embed(S):
    """Tangent coordinates of an already-embedded (centered) symmetric matrix."""
    S = np.asarray(S, dtype=float)
    H = helmert_submatrix(S.shape[0])
    return _vech(H @ S @ H.T)


def to_tangent(L, cfg=None):
    """Tangent coordinates ``vech(H F_alpha(L) H^T)`` of a graph Laplacian."""
    cfg = _as_config(cfg)
    L = np.asarray(L, dtype=float)
    return TangentVector(embed(power_map(L, cfg)), L.shape[0], cfg.alpha)


def from_tangent(v, m=None):
    """Symmetric matrix ``H^T B H`` from tangent coordinates.

    Accepts a :class:`TangentVector` or a raw coordinate array; for raw
    arrays ``m`` is inferred from the length when not given.
    """
    if isinstance(v, TangentVector):
        coords, m = v.coords, v.m
    else:
        coords = np.asarray(v, dtype=float).reshape(-1)
        if m is None:
            m = size_from_dim(coords.size)
        elif coords.size != tangent_dim(m):
            raise DataError(f"expected {tangent_dim(m)} coordinates for m={m}, got {coords.size}")
    if not np.all(np.isfinite(coords)):
        raise DataError("tangent coordinates must be finite")
    H = helmert_submatrix(m)
    B = _unvech(coords, m - 1)
    S = H.T @ B @ H
    return 0.5 * (S + S.T)


def tangent_stack(laplacians, cfg=None):
    """Rows of tangent coordinates for a stack of Laplacians."""
    cfg = _as_config(cfg)
    return np.array([embed(power_map(L, cfg)) for L in laplacians])

