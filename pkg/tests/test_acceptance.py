"""Acceptance criteria, one printed PASS/FAIL/SKIP line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines inline; they
are also collected in the terminal summary.
"""

import itertools
import os
import time

import numpy as np
import pytest
from scipy.optimize import nnls

from graphnw import (
    KernelConfig,
    NetworkDataset,
    classical_mds,
    estimate_rho_ls,
    loocv_bandwidth,
    mahalanobis_distance_matrix,
    nw_estimate_euclidean,
    nw_estimate_power,
    pipeline_to_laplacian,
    power_distance,
    project_to_laplacian,
    reverse_nw,
    to_tangent,
    validate_laplacian,
)
from graphnw.io import load_dataset
from graphnw.trend import residual_distances, rank_anomalies
from graphnw.regression import fit_curve

from conftest import random_laplacian, random_symmetric
from test_projection import brute_force_projection


def _random_dataset(rng, n_max=30, m_max=8):
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(2, m_max + 1))
    x = rng.random(n)
    Ls = [random_laplacian(rng, m, normalize=True) for _ in range(n)]
    return NetworkDataset(x, Ls)


def _jittered_query(rng, ds, h):
    return float(ds.covariates[rng.integers(ds.n), 0] + rng.uniform(-h, h))


def test_cone_membership(report):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst_euc, worst_pow = 0, 0
    failures = 0
    for _ in range(200):
        ds = _random_dataset(rng)
        h = float(rng.uniform(0.02, 0.5))
        cfg = KernelConfig(h)
        x = _jittered_query(rng, ds, h)
        E = nw_estimate_euclidean(x, ds, cfg)
        failures += not validate_laplacian(E, 1e-10)
        for alpha in (0.5, 2.0):
            P = nw_estimate_power(x, ds, cfg, alpha)
            failures += not validate_laplacian(P, 1e-8)
            worst_pow = max(worst_pow, float(np.abs(P.sum(axis=1)).max()))
        worst_euc = max(worst_euc, float(np.abs(E.sum(axis=1)).max()))
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 60
    report("AC1 cone membership", ok,
           f"{failures} failures over 200 datasets, max |row sum| euclidean {worst_euc:.1e} "
           f"power {worst_pow:.1e}, {elapsed:.1f}s")
    assert ok


def test_alpha_one_equivalence(report):
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        ds = _random_dataset(rng)
        h = float(rng.uniform(0.02, 0.5))
        x = _jittered_query(rng, ds, h)
        cfg = KernelConfig(h)
        diff = np.abs(nw_estimate_power(x, ds, cfg, 1.0) - nw_estimate_euclidean(x, ds, cfg)).max()
        worst = max(worst, float(diff))
    ok = worst <= 1e-8
    report("AC2 alpha=1 equivalence", ok, f"max entrywise difference {worst:.1e} (tol 1e-8)")
    assert ok


def test_projection_correctness(report):
    rng = np.random.default_rng(103)
    t0 = time.perf_counter()
    worst_err = worst_kkt = worst_idem = 0.0
    for _ in range(500):
        S = random_symmetric(rng, 3) * rng.uniform(0.1, 10)
        res = project_to_laplacian(S)
        expected, _ = brute_force_projection(S)
        worst_err = max(worst_err, float(np.abs(res.laplacian - expected).max()))
        worst_kkt = max(worst_kkt, res.kkt_residual)
        again = project_to_laplacian(res.laplacian).laplacian
        worst_idem = max(worst_idem, float(np.abs(again - res.laplacian).max()))
    elapsed = time.perf_counter() - t0
    ok = worst_err <= 1e-6 and worst_kkt <= 1e-8 and worst_idem <= 1e-9 and elapsed < 60
    report("AC3 projection correctness", ok,
           f"oracle error {worst_err:.1e} (tol 1e-6), KKT {worst_kkt:.1e} (tol 1e-8), "
           f"idempotence {worst_idem:.1e} (tol 1e-9), {elapsed:.1f}s")
    assert ok


def test_tangent_isometry_and_round_trip(report):
    rng = np.random.default_rng(104)
    worst_iso = worst_rt = 0.0
    for _ in range(200):
        m = int(rng.integers(2, 11))
        A, B = random_laplacian(rng, m), random_laplacian(rng, m)
        for alpha in (0.5, 1.0):
            va, vb = to_tangent(A, alpha), to_tangent(B, alpha)
            iso = abs(np.linalg.norm(va.coords - vb.coords) - power_distance(A, B, alpha))
            rt = np.abs(pipeline_to_laplacian(va) - A).max()
            worst_iso, worst_rt = max(worst_iso, iso), max(worst_rt, float(rt))
    ok = worst_iso <= 1e-9 and worst_rt <= 1e-7
    report("AC4 tangent isometry and round trip", ok,
           f"isometry {worst_iso:.1e} (tol 1e-9), round trip {worst_rt:.1e} (tol 1e-7)")
    assert ok


# smooth truth on 4 nodes: every edge weight is 1 + 0.5 sin(2 pi x + phase)
_PAIRS = list(itertools.combinations(range(4), 2))
_PHASES = np.linspace(0, np.pi, len(_PAIRS), endpoint=False)


def _truth(x):
    W = np.zeros((4, 4))
    for (i, j), phi in zip(_PAIRS, _PHASES):
        W[i, j] = W[j, i] = 1 + 0.5 * np.sin(2 * np.pi * x + phi)
    return np.diag(W.sum(1)) - W


def _simulate(rng, n):
    x = rng.random(n)
    Ls = []
    for xi in x:
        W = -_truth(xi)
        np.fill_diagonal(W, 0)
        # mean-one multiplicative noise, truncated to keep weights positive
        eps = np.clip(rng.normal(0, 0.2, len(_PAIRS)), -0.5, 0.5)
        for (i, j), e in zip(_PAIRS, eps):
            W[i, j] = W[j, i] = W[i, j] * (1 + e)
        Ls.append(np.diag(W.sum(1)) - W)
    return NetworkDataset(x, Ls)


def test_desk_scale_consistency(report):
    rng = np.random.default_rng(105)
    grid = np.linspace(0.05, 0.95, 31)
    truth = [_truth(g) for g in grid]
    sizes = (25, 100, 400)
    t0 = time.perf_counter()
    mise = {1.0: [], 0.5: []}
    for n in sizes:
        cfg = KernelConfig(n ** (-1 / 5))
        acc = {1.0: 0.0, 0.5: 0.0}
        for _ in range(20):
            ds = _simulate(rng, n)
            for alpha in acc:
                fit = fit_curve(grid, ds, cfg, alpha)
                err = [power_distance(F, T, alpha) ** 2 for F, T in zip(fit.fitted, truth)]
                acc[alpha] += np.mean(err) / 20
        for alpha in acc:
            mise[alpha].append(acc[alpha])
    elapsed = time.perf_counter() - t0
    decreasing = {a: all(np.diff(v) < 0) for a, v in mise.items()}
    ok = all(decreasing.values()) and elapsed < 300
    detail = "; ".join(f"alpha={a:g} MISE " + ", ".join(f"{v:.3e}" for v in mise[a])
                       for a in mise)
    report("AC5 desk-scale consistency", ok, f"{detail} at n={sizes}, {elapsed:.1f}s")
    assert ok


def _oracle_power(L, alpha):
    lam, U = np.linalg.eigh(0.5 * (L + L.T))
    return (U * np.clip(lam, 0, None) ** alpha) @ U.T


def _oracle_project(S):
    m = S.shape[0]
    cols = []
    for i, j in itertools.combinations(range(m), 2):
        E = np.zeros((m, m))
        E[i, i] = E[j, j] = 1.0
        E[i, j] = E[j, i] = -1.0
        cols.append(E.ravel())
    M = np.array(cols).T
    a, _ = nnls(M, S.ravel())
    return (M @ a).reshape(m, m)


def _oracle_criterion(x, Ls, h, alpha):
    total = 0.0
    n = len(x)
    for i in range(n):
        keep = [j for j in range(n) if j != i]
        u = (x[i] - x[keep]) / h
        k = np.where(np.abs(u) <= 10, np.exp(-0.5 * u**2), 0.0)
        if k.sum() == 0:
            return np.inf
        w = k / k.sum()
        F = sum(wj * _oracle_power(Ls[j], alpha) for wj, j in zip(w, keep))
        Lhat = _oracle_project(_oracle_power(F, 1 / alpha))
        total += np.sum((_oracle_power(Ls[i], alpha) - _oracle_power(Lhat, alpha)) ** 2)
    return total


def test_cv_criterion_fidelity(report):
    rng = np.random.default_rng(106)
    worst = 0.0
    ties_ok = True
    for _ in range(6):
        n, m = int(rng.integers(4, 12)), int(rng.integers(3, 6))
        x = np.sort(rng.random(n) * 4)
        Ls = [random_laplacian(rng, m, density=0.8, normalize=True) for _ in range(n)]
        ds = NetworkDataset(x, Ls)
        for alpha in (1.0, 0.5):
            hs = [0.05, 0.3, 1.0, 3.0]
            cv = loocv_bandwidth(ds, hs, alpha)
            for h, c in zip(hs, cv.criteria):
                ref = _oracle_criterion(x, Ls, h, alpha)
                if np.isinf(ref) or np.isinf(c):
                    ties_ok &= bool(np.isinf(ref) and np.isinf(c))
                else:
                    worst = max(worst, abs(c - ref))
    L = random_laplacian(rng, 4, normalize=True)
    same = NetworkDataset(np.arange(5.0), [L] * 5)
    cv = loocv_bandwidth(same, [4.0, 1.0, 2.0], 0.5)
    ties_ok &= cv.best == 1.0
    ok = worst <= 1e-10 and ties_ok
    report("AC6 CV criterion fidelity", ok,
           f"max |criterion - recomputation| {worst:.1e} (tol 1e-10), tie rule {'ok' if ties_ok else 'broken'}")
    assert ok


def test_mahalanobis_and_mds(report):
    rng = np.random.default_rng(107)
    worst_factor = 0.0
    for _ in range(20):
        n, m = int(rng.integers(2, 15)), int(rng.integers(2, 8))
        Ls = [random_laplacian(rng, m) for _ in range(n)]
        rho = float(rng.uniform(0.05, 0.95))
        alpha = float(rng.choice([0.5, 1.0]))
        M = mahalanobis_distance_matrix(Ls, rho, alpha)
        for k in range(n):
            for l in range(n):
                d = power_distance(Ls[k], Ls[l], alpha)
                expected = np.sqrt((1 - rho) / rho ** abs(k - l)) * d
                worst_factor = max(worst_factor, abs(M[k, l] - expected) / max(1.0, expected))
    worst_mds = 0.0
    for _ in range(50):
        n = int(rng.integers(3, 30))
        P = rng.normal(size=(n, 2)) * rng.uniform(0.1, 5)
        D = np.linalg.norm(P[:, None] - P[None], axis=2)
        X = classical_mds(D, 2).coords
        R = np.linalg.norm(X[:, None] - X[None], axis=2)
        worst_mds = max(worst_mds, float(np.abs(R - D).max()))
    ok = worst_factor <= 1e-12 and worst_mds <= 1e-8
    report("AC7 Mahalanobis factor and MDS recovery", ok,
           f"factor error {worst_factor:.1e} (tol 1e-12), MDS distance error {worst_mds:.1e} (tol 1e-8)")
    assert ok


def test_rho_estimators(report):
    rng = np.random.default_rng(108)
    L = random_laplacian(rng, 5)
    constant = np.array([to_tangent(L, 0.5).coords] * 10)
    clamp_ok = estimate_rho_ls(constant) == 1 - 1e-6
    hits = 0
    for _ in range(50):
        V = np.zeros((200, 10))
        V[0] = rng.normal(size=10) / np.sqrt(1 - 0.49)
        for t in range(1, 200):
            V[t] = 0.7 * V[t - 1] + rng.normal(size=10)
        hits += abs(estimate_rho_ls(V) - 0.7) <= 0.1
    ok = clamp_ok and hits >= 48
    report("AC8 rho estimators", ok,
           f"constant sequence clamps to 1-1e-6: {clamp_ok}; AR(1) recovery {hits}/50 within 0.1 (need 48)")
    assert ok


def test_enron_smoke(report):
    path = os.environ.get("GRAPHNW_ENRON_MANIFEST")
    if not path:
        report("AC9 Enron-shaped reproduction", None,
               "set GRAPHNW_ENRON_MANIFEST to a manifest of the 36 monthly networks")
        pytest.skip("Enron networks not supplied")
    ds = load_dataset(path, "trace")
    t0 = time.perf_counter()
    cv = loocv_bandwidth(ds, [0.5, 1, 2, 4, 8], 0.5)
    fit = fit_curve(ds.covariates, ds, KernelConfig(cv.best), 0.5)
    top = rank_anomalies(residual_distances(ds, fit), 5)
    months = {int(round(ds.covariates[p, 0])) for p in top.positions}
    found = {7, 34, 35} & months
    ok = found == {7, 34, 35}
    report("AC9 Enron-shaped reproduction", ok,
           f"h={cv.best:g}, top-5 months {sorted(months)}, expected 7, 34, 35 "
           f"({time.perf_counter() - t0:.0f}s, smoke test)")


def test_reverse_nw(report):
    rng = np.random.default_rng(110)
    Ls = [random_laplacian(rng, 4) for _ in range(6)]
    exact = reverse_nw(Ls[2], NetworkDataset([3.25] * 6, Ls), KernelConfig(100.0), 0.5)
    exact_ok = bool(np.all(exact == 3.25))
    worst = 0.0
    for _ in range(20):
        n, m = int(rng.integers(2, 15)), int(rng.integers(2, 8))
        alpha = float(rng.choice([0.5, 1.0]))
        # full density keeps the networks distinct; duplicates make t_k unidentifiable
        Ls = [random_laplacian(rng, m, density=1.0) for _ in range(n)]
        ds = NetworkDataset(rng.random(n) * 10, Ls)
        d = [power_distance(A, B, alpha) for A, B in itertools.combinations(Ls, 2)]
        h = min(v for v in d if v > 0) / 10
        for k in range(n):
            t = reverse_nw(Ls[k], ds, KernelConfig(h), alpha)
            worst = max(worst, float(abs(t[0] - ds.covariates[k, 0])))
    ok = exact_ok and worst <= 1e-9
    report("AC10 reverse NW", ok, f"equal-covariate case exact: {exact_ok}; "
           f"max |prediction - t_k| {worst:.1e} (tol 1e-9)")
    assert ok
