"""Command-line interface.

Exit status is 0 on success, 1 for data errors and 2 when a numerical
solver fails to converge.
"""

import argparse
import contextlib
import logging
import os
import sys

import numpy as np

from . import __version__
from .errors import ConvergenceError, GraphNWError
from .io import fmt, load_dataset, load_network, read_manifest, write_matrix, write_table
from .laplacian import laplacian_from_network, trace_normalize, validate_laplacian
from .pipeline import (
    RunConfig,
    StageError,
    resolve_query_grid,
    working_dataset,
    run_pipeline,
    select_bandwidth,
)
from .regression import KernelConfig, fit_curve, loocv_bandwidth, nw_estimate_power, reverse_nw
from .spectral import PowerConfig
from .tangent import tangent_stack
from .trend import (
    classical_mds,
    consecutive_distances,
    estimate_rho_ls,
    estimate_rho_pc1,
    mahalanobis_distance_matrix,
    pca_fit,
    pca_project,
    power_distance_matrix,
    rank_anomalies,
    residual_distances,
)

EXIT_DATA = 1
EXIT_CONVERGENCE = 2


def _floats(text):
    return [float(t) for t in text.replace(" ", "").split(",") if t]


def _bandwidth(text):
    return text if text == "cv" else float(text)


def _grid(text):
    return text if text == "auto" else _floats(text)


def _common(p):
    p.add_argument("manifest", help="dataset manifest (path,label,x1[,x2,...])")
    p.add_argument("--alpha", type=float, default=1.0, help="embedding power (default 1)")
    p.add_argument("--normalization", choices=("trace", "none"), default="trace")
    p.add_argument("--truncation-multiple", type=float, default=10.0,
                   help="kernel support radius in bandwidths (default 10)")
    p.add_argument("--tol", type=float, default=1e-8, help="projection KKT tolerance")
    p.add_argument("--standardize", action="store_true", help="standardise covariates before fitting")


def _bw(p, default="cv"):
    p.add_argument("--bandwidth", type=_bandwidth, default=default,
                   help="kernel bandwidth, or 'cv' for leave-one-out selection")
    p.add_argument("--cv-grid", type=_floats, default=None,
                   help="comma-separated candidate bandwidths (default 0.5,1,2,4,8 times covariate sd)")


def _out(p, kind="file"):
    p.add_argument("--out", "-o", default=None,
                   help=f"output {kind} (default: stdout)" if kind == "file" else "output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="graphnw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check every network in a manifest")
    p.add_argument("manifest")
    p.add_argument("--normalization", choices=("trace", "none"), default="trace")

    p = sub.add_parser("distances", help="distances between consecutive (or all) observations")
    _common(p)
    p.add_argument("--pairwise", action="store_true", help="write the full distance matrix")
    _out(p)

    p = sub.add_parser("cv", help="leave-one-out bandwidth selection")
    _common(p)
    p.add_argument("--cv-grid", type=_floats, default=None)
    _out(p)

    p = sub.add_parser("fit", help="fitted curve on a query grid")
    _common(p)
    _bw(p)
    p.add_argument("--query-grid", type=_grid, default="auto")
    _out(p, "dir")

    p = sub.add_parser("predict", help="estimate the Laplacian at one covariate value")
    _common(p)
    _bw(p)
    p.add_argument("--at", type=_floats, required=True, help="covariate value(s), comma-separated")
    _out(p)

    p = sub.add_parser("reverse-predict", help="predict the covariate of a new network")
    _common(p)
    p.add_argument("network", help="edge-list file of the query network")
    p.add_argument("--bandwidth", type=float, required=True, help="bandwidth on the distance scale")
    _out(p)

    p = sub.add_parser("pca", help="PCA scores of observations and fitted curve")
    _common(p)
    _bw(p)
    p.add_argument("--query-grid", type=_grid, default="auto")
    _out(p, "dir")

    p = sub.add_parser("mds", help="Mahalanobis AR(1) multidimensional scaling")
    _common(p)
    p.add_argument("--rho-method", choices=("ls", "pc1grid", "fixed"), default="ls")
    p.add_argument("--rho-fixed", type=float, default=None)
    p.add_argument("--rho-grid", type=_floats, default=None)
    p.add_argument("--dims", type=int, default=2)
    _out(p)

    p = sub.add_parser("residuals", help="residual distances and anomaly ranking")
    _common(p)
    _bw(p)
    p.add_argument("--top-k", type=int, default=5)
    _out(p)

    p = sub.add_parser("run", help="full pipeline into an output directory")
    _common(p)
    _bw(p)
    p.add_argument("--query-grid", type=_grid, default="auto")
    p.add_argument("--rho-method", choices=("ls", "pc1grid", "fixed"), default="ls")
    p.add_argument("--rho-fixed", type=float, default=None)
    p.add_argument("--rho-grid", type=_floats, default=None)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--out", "-o", default="graphnw-out", help="output directory")
    return parser


def _config(args, **extra):
    kw = dict(alpha=args.alpha, normalization=args.normalization,
              truncation_multiple=args.truncation_multiple, tol=args.tol,
              standardize=getattr(args, "standardize", False))
    for name in ("bandwidth", "cv_grid", "query_grid", "rho_method", "rho_fixed", "top_k"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    if getattr(args, "rho_grid", None):
        kw["rho_grid"] = args.rho_grid
    kw.update(extra)
    return RunConfig(**kw)


def _stream(args):
    if args.out:
        return open(args.out, "w", encoding="utf-8", newline="")
    return contextlib.nullcontext(sys.stdout)


def _to_work(x, std):
    return x if std is None else (x - std[0]) / std[1]


def cmd_validate(args):
    manifest = read_manifest(args.manifest, args.normalization)
    failures = 0
    labels = None
    rows = []
    for path, x, name in manifest.entries:
        try:
            net = load_network(path)
            if labels is None:
                labels = net.node_labels
            elif net.node_labels != labels:
                raise GraphNWError("node labels differ from the first network")
            L = laplacian_from_network(net)
            if manifest.normalization == "trace":
                L = trace_normalize(L)
            check = validate_laplacian(L, 1e-9)
            if not check:
                raise GraphNWError("; ".join(check.violations))
            rows.append([name, "ok", net.m, int(sum(1 for _ in net.edges())), ""])
        except (GraphNWError, OSError) as exc:
            failures += 1
            rows.append([name, "error", "", "", str(exc)])
    write_table(sys.stdout, ["label", "status", "nodes", "edges", "message"], rows)
    return EXIT_DATA if failures else 0


def cmd_distances(args):
    cfg = _config(args)
    ds = load_dataset(args.manifest, cfg.normalization)
    power = PowerConfig(cfg.alpha)
    with _stream(args) as fh:
        if args.pairwise:
            write_matrix(fh, power_distance_matrix(ds, power))
        else:
            s = consecutive_distances(ds, power)
            write_table(fh, ["pair", "distance"], zip(s.labels, map(float, s.values)))
    return 0


def cmd_cv(args):
    cfg = _config(args, bandwidth="cv")
    ds, _ = working_dataset(cfg, load_dataset(args.manifest, cfg.normalization))
    _, cv = select_bandwidth(cfg, ds)
    with _stream(args) as fh:
        write_table(fh, ["h", "criterion", "selected"],
                    [[float(h), float(c), int(h == cv.best)] for h, c in cv.table()])
    return 0


def _fit_setup(args):
    cfg = _config(args)
    ds = load_dataset(args.manifest, cfg.normalization)
    work, std = working_dataset(cfg, ds)
    h, _ = select_bandwidth(cfg, work)
    return cfg, ds, work, std, KernelConfig(h, cfg.truncation_multiple)


def cmd_fit(args):
    cfg, ds, work, std, kernel = _fit_setup(args)
    grid = resolve_query_grid(cfg, ds)
    curve = fit_curve(_to_work(grid, std), work, kernel, cfg.alpha, tol=cfg.tol)
    out = args.out or "graphnw-fit"
    os.makedirs(out, exist_ok=True)
    cols = [f"x{i + 1}" for i in range(ds.p)]
    write_table(os.path.join(out, "query_points.csv"), ["index", "file", "h"] + cols,
                [[i, f"L_{i:04d}.csv", float(kernel.h)] + list(map(float, x)) for i, x in enumerate(grid)])
    for i, L in enumerate(curve.fitted):
        write_matrix(os.path.join(out, f"L_{i:04d}.csv"), L)
    return 0


def cmd_predict(args):
    cfg, ds, work, std, kernel = _fit_setup(args)
    x = _to_work(np.asarray(args.at, dtype=float), std)
    L = nw_estimate_power(x, work, kernel, cfg.alpha, tol=cfg.tol)
    with _stream(args) as fh:
        write_matrix(fh, L)
    return 0


def cmd_reverse(args):
    cfg = _config(args)
    ds = load_dataset(args.manifest, cfg.normalization)
    net = load_network(args.network)
    if ds.node_labels is not None and net.node_labels != ds.node_labels:
        raise GraphNWError("query network node labels differ from the dataset's")
    L = laplacian_from_network(net)
    if cfg.normalization == "trace":
        L = trace_normalize(L)
    t = reverse_nw(L, ds, KernelConfig(args.bandwidth, cfg.truncation_multiple), cfg.alpha)
    with _stream(args) as fh:
        write_table(fh, [f"x{i + 1}" for i in range(ds.p)], [list(map(float, t))])
    return 0


def cmd_pca(args):
    cfg, ds, work, std, kernel = _fit_setup(args)
    grid = resolve_query_grid(cfg, ds)
    curve = fit_curve(_to_work(grid, std), work, kernel, cfg.alpha, tol=cfg.tol)
    T = ds.tangents(cfg.alpha)
    model = pca_fit(T)
    k = min(2, model.components.shape[0])
    pcs = [f"pc{i + 1}" for i in range(k)]
    cols = [f"x{i + 1}" for i in range(ds.p)]
    out = args.out or "graphnw-pca"
    os.makedirs(out, exist_ok=True)
    write_table(os.path.join(out, "observations.csv"), ["label"] + cols + pcs,
                [[lab] + list(map(float, x)) + list(map(float, s)) for lab, x, s
                 in zip(ds.labels, ds.covariates, pca_project(model, T, k))])
    write_table(os.path.join(out, "curve.csv"), ["index"] + cols + pcs,
                [[i] + list(map(float, x)) + list(map(float, s)) for i, (x, s)
                 in enumerate(zip(grid, pca_project(model, tangent_stack(curve.fitted, cfg.alpha), k)))])
    write_table(os.path.join(out, "explained_variance.csv"), ["component", "variance", "ratio"],
                [[i + 1, float(v), float(r)] for i, (v, r)
                 in enumerate(zip(model.explained_variance, model.explained_ratio))])
    return 0


def cmd_mds(args):
    cfg = _config(args)
    ds = load_dataset(args.manifest, cfg.normalization)
    power = PowerConfig(cfg.alpha)
    if cfg.rho_method == "fixed":
        rho = cfg.rho_fixed
    elif cfg.rho_method == "ls":
        rho = estimate_rho_ls(ds.tangents(power))
    else:
        rho = estimate_rho_pc1(ds, cfg.rho_grid, power)
    res = classical_mds(mahalanobis_distance_matrix(ds, rho, power), args.dims)
    if res.truncated:
        logging.warning("only %d positive eigenvalues; fewer than %d dimensions returned",
                        res.coords.shape[1], args.dims)
    dims = [f"dim{i + 1}" for i in range(res.coords.shape[1])]
    with _stream(args) as fh:
        fh.write(f"# rho={fmt(rho)} method={cfg.rho_method}\n")
        write_table(fh, ["label"] + dims,
                    [[lab] + list(map(float, c)) for lab, c in zip(ds.labels, res.coords)])
    return 0


def cmd_residuals(args):
    cfg, ds, work, std, kernel = _fit_setup(args)
    fit = fit_curve(work.covariates, work, kernel, cfg.alpha, tol=cfg.tol)
    res = residual_distances(work, fit, cfg.alpha)
    ranking = rank_anomalies(res, ds.n)
    rank = {int(pos): i + 1 for i, pos in enumerate(ranking.positions)}
    flagged = set(ranking.flagged)
    with _stream(args) as fh:
        write_table(fh, ["label"] + [f"x{i + 1}" for i in range(ds.p)] + ["residual", "rank", "flagged"],
                    [[lab] + list(map(float, x)) + [float(r), rank[i], int(lab in flagged)]
                     for i, (lab, x, r) in enumerate(zip(ds.labels, ds.covariates, res.values))])
    top = ", ".join(ranking.labels[: args.top_k])
    logging.info("h=%s; top %d residuals: %s", fmt(kernel.h), args.top_k, top)
    return 0


def cmd_run(args):
    cfg = _config(args, output_dir=args.out)
    meta = run_pipeline(cfg, args.manifest, args.out)
    print(f"wrote {args.out} (h={fmt(meta['bandwidth']['h'])}, "
          f"top anomalies: {', '.join(meta['anomalies_flagged']) or 'none flagged'})")
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "distances": cmd_distances,
    "cv": cmd_cv,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "reverse-predict": cmd_reverse,
    "pca": cmd_pca,
    "mds": cmd_mds,
    "residuals": cmd_residuals,
    "run": cmd_run,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConvergenceError, StageError) as exc:
        cause = exc.cause if isinstance(exc, StageError) else exc
        print(f"graphnw: error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE if isinstance(cause, ConvergenceError) else EXIT_DATA
    except (GraphNWError, OSError) as exc:
        print(f"graphnw: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
