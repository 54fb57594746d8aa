import numpy as np
import pytest

from graphnw.laplacian import laplacian_from_weights

ACCEPTANCE_LINES = []


def random_weights(rng, m, density=0.6, scale=1.0):
    W = rng.exponential(scale, size=(m, m)) * (rng.random((m, m)) < density)
    W = np.triu(W, 1)
    return W + W.T


def random_laplacian(rng, m, density=0.6, normalize=False):
    L = laplacian_from_weights(random_weights(rng, m, density))
    if normalize and np.trace(L) > 0:
        L = L / np.trace(L)
    return L


def random_symmetric(rng, m):
    A = rng.normal(size=(m, m))
    return 0.5 * (A + A.T)


def write_dataset(directory, weights, covariates, labels=None, node_labels=None):
    """Write one edge-list file per weight matrix plus a manifest; return the manifest path."""
    directory.mkdir(parents=True, exist_ok=True)
    n = len(weights)
    labels = labels or [f"t{i + 1}" for i in range(n)]
    covariates = np.asarray(covariates, dtype=float).reshape(n, -1)
    p = covariates.shape[1]
    rows = ["path,label," + ",".join(f"x{k + 1}" for k in range(p))]
    for W, x, lab in zip(weights, covariates, labels):
        m = len(W)
        nodes = node_labels or [f"v{i}" for i in range(m)]
        lines = ["nodes: " + ",".join(nodes)]
        for i in range(m):
            for j in range(i + 1, m):
                if W[i][j] > 0:
                    lines.append(f"{nodes[i]} {nodes[j]} {float(W[i][j])!r}")
        (directory / f"{lab}.txt").write_text("\n".join(lines) + "\n")
        rows.append(f"{lab}.txt,{lab}," + ",".join(repr(float(v)) for v in x))
    manifest = directory / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n")
    return manifest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def report():
    """Record a one-line pass/fail verdict for an acceptance criterion."""

    def _report(name, ok, detail=""):
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"[{status}] {name}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
