"""Graph Laplacian construction, validation and normalisation.

Laplacians are plain dense ``numpy`` arrays. A matrix ``L`` is a graph
Laplacian when it is symmetric, has non-positive off-diagonal entries and
zero row sums; positive semi-definiteness follows from these.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = [
    "WeightedNetwork",
    "Validation",
    "laplacian_from_network",
    "laplacian_from_weights",
    "validate_laplacian",
    "trace_normalize",
    "euclidean_distance",
    "check_same_shape",
]


@dataclass(frozen=True)
class WeightedNetwork:
    """Undirected, loop-free network with nonnegative edge weights.

    ``weights`` is stored as a read-only symmetric ``(m, m)`` array whose
    row/column order follows ``node_labels``.
    """

    node_labels: tuple
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = tuple(str(s) for s in self.node_labels)
        if len(set(labels)) != len(labels):
            raise DataError("node labels must be distinct")
        w = np.array(self.weights, dtype=float)
        m = len(labels)
        if w.shape != (m, m):
            raise DataError(f"weights must be {m}x{m}, got {w.shape}")
        if not np.all(np.isfinite(w)):
            i, j = np.argwhere(~np.isfinite(w))[0]
            raise DataError(f"non-finite weight at ({labels[i]}, {labels[j]})")
        diag = np.flatnonzero(np.diag(w) != 0)
        if diag.size:
            i = diag[0]
            raise DataError(f"self-loop at node {labels[i]!r} (weight {w[i, i]!r})")
        asym = np.argwhere(w != w.T)
        if asym.size:
            i, j = asym[0]
            raise DataError(
                f"asymmetric weights: w[{labels[i]},{labels[j]}]={w[i, j]!r} "
                f"but w[{labels[j]},{labels[i]}]={w[j, i]!r}"
            )
        neg = np.argwhere(w < 0)
        if neg.size:
            i, j = neg[0]
            raise DataError(f"negative weight {w[i, j]!r} on edge ({labels[i]}, {labels[j]})")
        w.setflags(write=False)
        object.__setattr__(self, "node_labels", labels)
        object.__setattr__(self, "weights", w)

    @property
    def m(self):
        return len(self.node_labels)

    def edges(self):
        """Yield ``(label_a, label_b, weight)`` for each positive-weight edge, i < j."""
        iu, ju = np.triu_indices(self.m, 1)
        for i, j in zip(iu, ju):
            if self.weights[i, j] > 0:
                yield self.node_labels[i], self.node_labels[j], float(self.weights[i, j])

    def __eq__(self, other):
        if not isinstance(other, WeightedNetwork):
            return NotImplemented
        return self.node_labels == other.node_labels and np.array_equal(self.weights, other.weights)

    __hash__ = None


def laplacian_from_weights(weights):
    """Return ``D - A`` for a symmetric nonnegative weight matrix (no checks)."""
    A = np.asarray(weights, dtype=float).copy()
    np.fill_diagonal(A, 0.0)
    L = -A
    np.fill_diagonal(L, A.sum(axis=1))
    return L


def laplacian_from_network(net):
    """Graph Laplacian ``L = D - A`` of a :class:`WeightedNetwork`."""
    return laplacian_from_weights(net.weights)


@dataclass(frozen=True)
class Validation:
    ok: bool
    violations: tuple = ()

    def __bool__(self):
        return self.ok


def validate_laplacian(mat, tol=1e-12):
    """Check the defining constraints of a graph Laplacian.

    ``tol`` is relative: violations are measured against
    ``tol * max(1, max|mat|)``. Returns a :class:`Validation` that is truthy
    when every constraint holds; otherwise ``violations`` names each failed
    constraint together with its worst offender.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        return Validation(False, (f"shape: matrix must be square, got {mat.shape}",))
    if not np.all(np.isfinite(mat)):
        return Validation(False, ("finite: matrix has non-finite entries",))
    m = mat.shape[0]
    scale = tol * max(1.0, float(np.max(np.abs(mat))) if mat.size else 1.0)
    problems = []

    asym = np.abs(mat - mat.T)
    if asym.size and asym.max() > scale:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        problems.append(f"symmetry: |l[{i},{j}] - l[{j},{i}]| = {asym[i, j]:.3g}")

    off = mat.copy()
    off[np.diag_indices(m)] = -np.inf
    if m > 1 and off.max() > scale:
        i, j = np.unravel_index(np.argmax(off), off.shape)
        problems.append(f"off-diagonal sign: l[{i},{j}] = {mat[i, j]:.3g} > 0")

    rows = np.abs(mat.sum(axis=1))
    if rows.size and rows.max() > scale:
        i = int(np.argmax(rows))
        problems.append(f"row sum: row {i} sums to {mat[i].sum():.3g}")

    return Validation(not problems, tuple(problems))


def trace_normalize(L):
    """Scale ``L`` to unit trace."""
    L = np.asarray(L, dtype=float)
    tr = np.trace(L)
    if not tr > 0:
        raise DataError(f"cannot trace-normalise a Laplacian with trace {tr!r}")
    return L / tr


def check_same_shape(A, B):
    if A.shape != B.shape:
        raise DataError(f"dimension mismatch: {A.shape} vs {B.shape}")


def euclidean_distance(L1, L2):
    """Frobenius distance ``||L1 - L2||``."""
    L1 = np.asarray(L1, dtype=float)
    L2 = np.asarray(L2, dtype=float)
    check_same_shape(L1, L2)
    return float(np.linalg.norm(L1 - L2))
