"""End-to-end analysis run: fit, cross-validate, diagnose, write files."""

from dataclasses import asdict, dataclass, field
import json
import logging
import os

import numpy as np

from . import __version__
from .errors import DataError, GraphNWError
from .io import file_digest, load_dataset, read_manifest, write_matrix, write_table
from .projection import DEFAULT_TOL
from .regression import DEFAULT_TRUNCATION, KernelConfig, fit_curve, loocv_bandwidth
from .spectral import PowerConfig
from .tangent import tangent_stack
from .trend import (
    DEFAULT_RHO_GRID,
    _ar1_from_ratio,
    classical_mds,
    consecutive_distances,
    estimate_rho_pc1,
    mahalanobis_distance_matrix,
    pca_fit,
    pca_project,
    rank_anomalies,
    residual_distances,
    rho_ls_ratio,
)

log = logging.getLogger(__name__)

BASE_CV_GRID = (0.5, 1.0, 2.0, 4.0, 8.0)
AUTO_GRID_POINTS = 20
RHO_METHODS = ("ls", "pc1grid", "fixed")


class StageError(GraphNWError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


@dataclass
class RunConfig:
    alpha: float = 1.0
    bandwidth: object = "cv"  # float or "cv"
    cv_grid: list = None  # None: BASE_CV_GRID scaled by the covariate sd
    truncation_multiple: float = DEFAULT_TRUNCATION
    query_grid: object = "auto"  # "auto" or list of covariate values
    rho_method: str = "ls"
    rho_fixed: float = None
    rho_grid: list = field(default_factory=lambda: list(DEFAULT_RHO_GRID))
    normalization: str = "trace"
    standardize: bool = False
    top_k: int = 5
    tol: float = DEFAULT_TOL
    output_dir: str = "graphnw-out"

    def __post_init__(self):
        PowerConfig(self.alpha)
        if self.bandwidth != "cv":
            try:
                self.bandwidth = float(self.bandwidth)
            except (TypeError, ValueError):
                raise DataError(f"bandwidth must be a number or 'cv', got {self.bandwidth!r}") from None
            KernelConfig(self.bandwidth, self.truncation_multiple)
        if self.cv_grid is not None:
            self.cv_grid = [float(h) for h in self.cv_grid]
            if self.bandwidth == "cv" and not self.cv_grid:
                raise DataError("bandwidth 'cv' needs a non-empty cv_grid")
        if self.rho_method not in RHO_METHODS:
            raise DataError(f"rho_method must be one of {RHO_METHODS}, got {self.rho_method!r}")
        if self.rho_method == "fixed":
            if self.rho_fixed is None or not 0 < float(self.rho_fixed) < 1:
                raise DataError(f"rho_method 'fixed' needs rho_fixed in (0, 1), got {self.rho_fixed!r}")
            self.rho_fixed = float(self.rho_fixed)
        if self.query_grid != "auto":
            self.query_grid = [float(x) for x in self.query_grid]
        self.rho_grid = [float(r) for r in self.rho_grid]

    def to_dict(self):
        d = asdict(self)
        d.pop("output_dir")
        return d

    @classmethod
    def from_dict(cls, d, **overrides):
        d = dict(d)
        d.update(overrides)
        return cls(**d)


def resolve_cv_grid(cfg, dataset):
    if cfg.cv_grid is not None:
        return list(cfg.cv_grid)
    sd = float(np.sqrt(np.mean(np.var(dataset.covariates, axis=0, ddof=1)))) if dataset.n > 1 else 1.0
    sd = sd if sd > 0 else 1.0
    return [h * sd for h in BASE_CV_GRID]


def resolve_query_grid(cfg, dataset):
    if cfg.query_grid != "auto":
        q = np.asarray(cfg.query_grid, dtype=float)
        if q.size == 0:
            raise DataError("query grid is empty")
        return q.reshape(-1, dataset.p)
    if dataset.p != 1:
        raise DataError("the 'auto' query grid needs scalar covariates; pass an explicit grid")
    lo, hi = float(dataset.covariates.min()), float(dataset.covariates.max())
    return np.linspace(lo, hi, AUTO_GRID_POINTS).reshape(-1, 1)


def working_dataset(cfg, dataset):
    """Dataset with covariates standardised if configured, plus ``(mean, sd)`` or None."""
    if not cfg.standardize:
        return dataset, None
    mu = dataset.covariates.mean(axis=0)
    sd = dataset.covariates.std(axis=0, ddof=1) if dataset.n > 1 else np.ones(dataset.p)
    sd = np.where(sd > 0, sd, 1.0)
    return dataset.with_covariates((dataset.covariates - mu) / sd), (mu, sd)


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)

    def __exit__(self, typ, exc, tb):
        if exc is not None and isinstance(exc, GraphNWError) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def select_bandwidth(cfg, dataset):
    """Return ``(h, cv_result_or_None)`` for the configured bandwidth rule."""
    if cfg.bandwidth != "cv":
        return cfg.bandwidth, None
    cv = loocv_bandwidth(dataset, resolve_cv_grid(cfg, dataset), cfg.alpha,
                         cfg.truncation_multiple, tol=cfg.tol)
    return cv.best, cv


def run_pipeline(cfg, manifest_path, output_dir=None):
    """Run the full analysis and write its artifacts under ``output_dir``.

    Returns the metadata dictionary that is also written to ``metadata.json``.
    """
    out = output_dir or cfg.output_dir
    with _Stage("load"):
        manifest = read_manifest(manifest_path, cfg.normalization)
        dataset = load_dataset(manifest)
        digest = file_digest([manifest_path] + [e[0] for e in sorted(manifest.entries, key=lambda e: e[1])])
    power = PowerConfig(cfg.alpha)

    work, std = working_dataset(cfg, dataset)
    with _Stage("query-grid"):
        grid = resolve_query_grid(cfg, dataset)
    work_grid = grid if std is None else (grid - std[0]) / std[1]

    with _Stage("bandwidth"):
        h, cv = select_bandwidth(cfg, work)
    kernel = KernelConfig(h, cfg.truncation_multiple)

    with _Stage("fit"):
        curve = fit_curve(work_grid, work, kernel, power, tol=cfg.tol)
        at_obs = fit_curve(work.covariates, work, kernel, power, tol=cfg.tol)

    with _Stage("distances"):
        consecutive = consecutive_distances(dataset, power) if dataset.n > 1 else None
        residuals = residual_distances(work, at_obs, power)
        ranking = rank_anomalies(residuals, min(cfg.top_k, dataset.n))

    T = dataset.tangents(power)
    pca = scores = curve_scores = None
    if dataset.n >= 2:
        with _Stage("pca"):
            pca = pca_fit(T)
            k = min(2, pca.components.shape[0])
            scores = pca_project(pca, T, k)
            curve_scores = pca_project(pca, tangent_stack(curve.fitted, power), k)

    rhos = {}
    mds = {}
    if dataset.n >= 2:
        with _Stage("rho"):
            try:
                raw = rho_ls_ratio(T)
                ar1 = _ar1_from_ratio(raw)
                rhos["ls"] = {"value": ar1.rho, "raw": raw, "clamped": ar1.clamped}
            except DataError as exc:
                rhos["ls"] = {"error": str(exc)}
            try:
                rhos["pc1grid"] = {"value": estimate_rho_pc1(dataset, cfg.rho_grid, power)}
            except DataError as exc:
                rhos["pc1grid"] = {"error": str(exc)}
            if cfg.rho_method == "fixed":
                rhos["fixed"] = {"value": cfg.rho_fixed}
        with _Stage("mds"):
            for name, info in rhos.items():
                if "value" in info:
                    M = mahalanobis_distance_matrix(dataset, info["value"], power)
                    mds[name] = classical_mds(M, 2)

    meta = {
        "version": __version__,
        "config": cfg.to_dict(),
        "input": {"manifest": os.path.basename(manifest_path), "sha256": digest,
                  "n": dataset.n, "m": dataset.m, "p": dataset.p},
        "bandwidth": {"h": h, "selected_by": "cv" if cv is not None else "fixed",
                      "cv_table": cv.table() if cv is not None else None},
        "standardization": None if std is None else {"mean": std[0].tolist(), "sd": std[1].tolist()},
        "rho": rhos,
        "rho_selected": rhos.get(cfg.rho_method, {}).get("value"),
        "anomaly_threshold": ranking.threshold,
        "anomalies_flagged": list(ranking.flagged),
        "tolerances": {"projection_kkt": cfg.tol, "file_validation": 1e-9,
                       "fit_validation": 1e-8},
        "mds_truncated": {k: v.truncated for k, v in mds.items()},
    }

    with _Stage("write"):
        _write_outputs(out, dataset, grid, curve, cv, consecutive, residuals, ranking,
                       pca, scores, curve_scores, mds, meta)
    return meta


def _xcols(p):
    return [f"x{i + 1}" for i in range(p)]


def _write_outputs(out, dataset, grid, curve, cv, consecutive, residuals, ranking,
                   pca, scores, curve_scores, mds, meta):
    os.makedirs(os.path.join(out, "curve"), exist_ok=True)
    p = dataset.p
    write_table(os.path.join(out, "curve", "query_points.csv"), ["index", "file"] + _xcols(p),
                [[i, f"L_{i:04d}.csv"] + list(map(float, x)) for i, x in enumerate(grid)])
    for i, L in enumerate(curve.fitted):
        write_matrix(os.path.join(out, "curve", f"L_{i:04d}.csv"), L)

    if cv is not None:
        write_table(os.path.join(out, "cv.csv"), ["h", "criterion", "selected"],
                    [[float(h), float(c), int(h == cv.best)] for h, c in cv.table()])

    if consecutive is not None:
        write_table(os.path.join(out, "consecutive_distances.csv"), ["pair", "distance"],
                    zip(consecutive.labels, map(float, consecutive.values)))
    write_table(os.path.join(out, "residuals.csv"), ["label"] + _xcols(p) + ["residual"],
                [[lab] + list(map(float, x)) + [float(r)]
                 for lab, x, r in zip(dataset.labels, dataset.covariates, residuals.values)])
    flagged = set(ranking.flagged)
    write_table(os.path.join(out, "anomalies.csv"), ["rank", "label", "residual", "flagged"],
                [[i + 1, lab, float(s), int(lab in flagged)]
                 for i, (lab, s) in enumerate(zip(ranking.labels, ranking.scores))])

    if pca is not None:
        os.makedirs(os.path.join(out, "pca"), exist_ok=True)
        k = scores.shape[1]
        pcs = [f"pc{i + 1}" for i in range(k)]
        write_table(os.path.join(out, "pca", "explained_variance.csv"),
                    ["component", "variance", "ratio"],
                    [[i + 1, float(v), float(r)] for i, (v, r)
                     in enumerate(zip(pca.explained_variance, pca.explained_ratio))])
        write_table(os.path.join(out, "pca", "observations.csv"), ["label"] + _xcols(p) + pcs,
                    [[lab] + list(map(float, x)) + list(map(float, s))
                     for lab, x, s in zip(dataset.labels, dataset.covariates, scores)])
        write_table(os.path.join(out, "pca", "curve.csv"), ["index"] + _xcols(p) + pcs,
                    [[i] + list(map(float, x)) + list(map(float, s))
                     for i, (x, s) in enumerate(zip(grid, curve_scores))])

    if mds:
        os.makedirs(os.path.join(out, "mds"), exist_ok=True)
    for name, res in mds.items():
        dims = [f"dim{i + 1}" for i in range(res.coords.shape[1])]
        write_table(os.path.join(out, "mds", f"coords_{name}.csv"), ["label"] + dims,
                    [[lab] + list(map(float, c)) for lab, c in zip(dataset.labels, res.coords)])
        write_table(os.path.join(out, "mds", f"eigenvalues_{name}.csv"), ["index", "eigenvalue"],
                    [[i + 1, float(v)] for i, v in enumerate(res.eigenvalues)])

    with open(os.path.join(out, "metadata.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj
