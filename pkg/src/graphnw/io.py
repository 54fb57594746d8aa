"""Reading and writing networks, manifests and delimited outputs.

Edge-list files::

    # comment
    nodes: a,b,c
    a b 1.0
    b c 0.25

Every node appears in the ``nodes:`` header, so isolated nodes are kept.
Each undirected edge may be listed once.

Manifest files are comma-separated with a header ``path,label,x1[,x2,...]``;
relative paths resolve against the manifest's directory.
"""

import csv
from dataclasses import dataclass
import hashlib
import io
import os

import numpy as np

from .errors import DataError
from .laplacian import WeightedNetwork, laplacian_from_network, trace_normalize, validate_laplacian
from .regression import NetworkDataset

__all__ = [
    "load_network",
    "write_network",
    "DatasetManifest",
    "read_manifest",
    "load_dataset",
    "fmt",
    "write_table",
    "write_matrix",
    "read_matrix",
    "file_digest",
]

NORMALIZATIONS = ("trace", "none")
# Relative tolerance for Laplacians built from file data.
FILE_TOL = 1e-9


def fmt(x):
    """Fixed 17-significant-digit rendering used in every output file."""
    x = float(x)
    if x == 0:
        return "0"
    return format(x, ".17g")


def _parse_float(tok, where):
    try:
        return float(tok)
    except ValueError:
        raise DataError(f"{where}: cannot parse number {tok!r}") from None


def load_network(path):
    """Parse an edge-list file into a :class:`WeightedNetwork`."""
    labels = None
    index = {}
    weights = None
    seen = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            if labels is None:
                if not line.startswith("nodes:"):
                    raise DataError(f"{where}: expected 'nodes:' header before edges")
                labels = [s.strip() for s in line[len("nodes:"):].split(",")]
                if any(not s or any(c.isspace() for c in s) for s in labels):
                    raise DataError(f"{where}: node labels must be non-empty and contain no whitespace")
                if len(set(labels)) != len(labels):
                    raise DataError(f"{where}: duplicate node label in header")
                index = {s: i for i, s in enumerate(labels)}
                weights = np.zeros((len(labels), len(labels)))
                continue
            parts = line.split()
            if len(parts) != 3:
                raise DataError(f"{where}: expected '<label_a> <label_b> <weight>'")
            a, b, tok = parts
            for lab in (a, b):
                if lab not in index:
                    raise DataError(f"{where}: unknown node label {lab!r}")
            if a == b:
                raise DataError(f"{where}: self-loop on node {a!r}")
            w = _parse_float(tok, where)
            if not np.isfinite(w):
                raise DataError(f"{where}: non-finite weight {tok!r}")
            if w < 0:
                raise DataError(f"{where}: negative weight {w!r} on edge ({a}, {b})")
            key = (a, b) if index[a] < index[b] else (b, a)
            if key in seen:
                raise DataError(f"{where}: duplicate edge ({a}, {b}), first given on line {seen[key]}")
            seen[key] = lineno
            i, j = index[a], index[b]
            weights[i, j] = weights[j, i] = w
    if labels is None:
        raise DataError(f"{path}: missing 'nodes:' header")
    return WeightedNetwork(tuple(labels), weights)


def write_network(net, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("nodes: " + ",".join(net.node_labels) + "\n")
        for a, b, w in net.edges():
            fh.write(f"{a} {b} {fmt(w)}\n")


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple  # (path, covariate tuple, label)
    normalization: str = "trace"

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise DataError(f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}")
        labels = [e[2] for e in self.entries]
        if len(set(labels)) != len(labels):
            raise DataError("manifest labels must be unique")
        if len({len(e[1]) for e in self.entries}) > 1:
            raise DataError("manifest covariates must all have the same dimension")


def read_manifest(path, normalization="trace"):
    base = os.path.dirname(os.path.abspath(path))
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DataError(f"{path}: empty manifest")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["path", "label"] or len(header) < 3:
        raise DataError(f"{path}: header must be 'path,label,x1[,x2,...]', got {','.join(header)}")
    entries = []
    for lineno, row in enumerate(rows[1:], 2):
        row = [c.strip() for c in row]
        if len(row) != len(header):
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        p = row[0] if os.path.isabs(row[0]) else os.path.join(base, row[0])
        x = tuple(_parse_float(t, f"{path}: row {lineno}") for t in row[2:])
        entries.append((p, x, row[1]))
    if not entries:
        raise DataError(f"{path}: manifest lists no networks")
    return DatasetManifest(tuple(entries), normalization)


def load_dataset(manifest, normalization="trace"):
    """Load every network in a manifest into a :class:`NetworkDataset`.

    ``manifest`` is a path or a :class:`DatasetManifest`. Observations are
    ordered by covariate (stable for ties); all networks must declare the
    same node labels in the same order.
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = read_manifest(manifest, normalization)
    entries = sorted(manifest.entries, key=lambda e: e[1])
    labels = None
    Ls = []
    for path, _, name in entries:
        try:
            net = load_network(path)
        except OSError as exc:
            raise DataError(f"entry {name!r}: cannot read {path}: {exc}") from exc
        if labels is None:
            labels = net.node_labels
        elif net.node_labels != labels:
            raise DataError(f"entry {name!r}: node labels differ from the first network")
        L = laplacian_from_network(net)
        if manifest.normalization == "trace":
            try:
                L = trace_normalize(L)
            except DataError as exc:
                raise DataError(f"entry {name!r}: {exc}") from exc
        check = validate_laplacian(L, FILE_TOL)
        if not check:
            raise DataError(f"entry {name!r}: {'; '.join(check.violations)}")
        Ls.append(L)
    return NetworkDataset(np.array([e[1] for e in entries]), np.array(Ls),
                          tuple(e[2] for e in entries), labels)


def _emit(target, text):
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def write_table(target, header, rows):
    """Comma-separated table to a path or text stream; floats rendered with :func:`fmt`."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    _emit(target, buf.getvalue())


def write_matrix(target, mat):
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    _emit(target, "".join(",".join(fmt(v) for v in row) + "\n" for row in mat))


def read_matrix(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def file_digest(paths):
    """SHA-256 over the given files' bytes, in order."""
    h = hashlib.sha256()
    for p in paths:
        with open(p, "rb") as fh:
            h.update(os.path.basename(p).encode() + b"\0")
            h.update(fh.read())
    return h.hexdigest()
