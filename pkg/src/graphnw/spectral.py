"""Matrix powers of graph Laplacians and the power Euclidean distance."""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .laplacian import check_same_shape

__all__ = [
    "PowerConfig",
    "SpectralDecomposition",
    "spectral_decompose",
    "power_map",
    "inverse_power_map",
    "power_distance",
]

# Eigenvalues below -PSD_TOL * ||L|| mean the input is not a Laplacian.
PSD_TOL = 1e-6


@dataclass(frozen=True)
class PowerConfig:
    """Embedding power ``alpha`` and the eigenvalue floor used by the inverse map."""

    alpha: float = 1.0
    eigenvalue_floor: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise DataError(f"alpha must be positive, got {self.alpha!r}")
        if not self.eigenvalue_floor >= 0:
            raise DataError(f"eigenvalue_floor must be >= 0, got {self.eigenvalue_floor!r}")


def _as_config(cfg):
    if cfg is None:
        return PowerConfig()
    if isinstance(cfg, PowerConfig):
        return cfg
    return PowerConfig(alpha=float(cfg))


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self, values=None):
        xi = self.eigenvalues if values is None else values
        U = self.eigenvectors
        out = (U * xi) @ U.T
        return 0.5 * (out + out.T)


def spectral_decompose(mat):
    """Eigendecomposition of a symmetric matrix, eigenvalues in descending order."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DataError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DataError("matrix has non-finite entries")
    xi, U = np.linalg.eigh(0.5 * (mat + mat.T))
    return SpectralDecomposition(xi[::-1].copy(), U[:, ::-1].copy())


def _roundoff_cutoff(xi):
    # Eigenvalues this small relative to the spectrum are numerically zero;
    # fractional powers would otherwise inflate them.
    top = float(np.max(np.abs(xi))) if xi.size else 0.0
    return xi.size * np.finfo(float).eps * top


def power_map(L, cfg=None):
    """``F_alpha(L) = U diag(xi**alpha) U^T`` for a graph Laplacian ``L``.

    Small negative eigenvalues from roundoff are set to zero before powering;
    an eigenvalue below ``-1e-6 * ||L||`` raises :class:`DataError`.
    """
    cfg = _as_config(cfg)
    L = np.asarray(L, dtype=float)
    if cfg.alpha == 1.0:
        spectral_decompose(L)  # shape/finiteness checks only
        return 0.5 * (L + L.T)
    dec = spectral_decompose(L)
    xi = dec.eigenvalues
    norm = float(np.linalg.norm(L))
    if xi.size and xi[-1] < -PSD_TOL * max(norm, np.finfo(float).tiny):
        raise DataError(f"input not positive semi-definite (eigenvalue {xi[-1]:.3g})")
    xi = np.where(xi > _roundoff_cutoff(xi), xi, 0.0)
    return dec.reconstruct(xi**cfg.alpha)


def inverse_power_map(S, cfg=None):
    """Reverse :func:`power_map` on an arbitrary symmetric matrix.

    Eigenvalues below ``cfg.eigenvalue_floor`` (and roundoff-sized ones) are
    clamped to zero, the rest raised to ``1/alpha``. The result is always
    positive semi-definite.
    """
    cfg = _as_config(cfg)
    dec = spectral_decompose(S)
    xi = dec.eigenvalues
    cut = max(cfg.eigenvalue_floor, _roundoff_cutoff(xi))
    keep = xi > cut
    xi = np.where(keep, xi, 0.0)
    if cfg.alpha != 1.0:
        xi = np.where(keep, np.abs(xi) ** (1.0 / cfg.alpha), 0.0)
    return dec.reconstruct(xi)


def power_distance(L1, L2, cfg=None):
    """Power Euclidean distance ``||F_alpha(L1) - F_alpha(L2)||``."""
    L1 = np.asarray(L1, dtype=float)
    L2 = np.asarray(L2, dtype=float)
    check_same_shape(L1, L2)
    return float(np.linalg.norm(power_map(L1, cfg) - power_map(L2, cfg)))
