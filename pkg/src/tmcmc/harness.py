"""Experiment orchestration: the dimension x scale x kernel table, speed curves,
the per-iteration timing benchmark and the diffusion-limit study.

Seeding: chain j of cell i runs with ``split_seed(master_seed, i, j)``; the shared
starting point of cell i is drawn from ``split_seed(master_seed, i, INIT_KEY)``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import diagnostics as dg
from . import kernels as kn
from . import scaling as sc
from . import sde
from . import targets as tg

log = logging.getLogger(__name__)

INIT_KEY = 2**32
OUT_ENV = "TMCMC_OUT"

# Published reference values: (dimension, scale, kernel) ->
# (acceptance, IACT, IPACT, AJS, average K-S).  Acceptance given as a fraction.
REFERENCE_TABLE = {
    (2, 2.4, "rwm"): (0.349, 6.08, 2.46, 0.93, 0.1651),
    (2, 2.4, "tmcmc"): (0.446, 7.04, 2.55, 0.74, 0.1657),
    (2, 6.0, "rwm"): (0.1866, 7.08, 2.52, 0.79, 0.1659),
    (2, 6.0, "tmcmc"): (0.2915, 8.08, 2.56, 0.62, 0.1655),
    (5, 2.4, "rwm"): (0.286, 9.98, 2.67, 1.15, 0.1659),
    (5, 2.4, "tmcmc"): (0.4412, 12.45, 2.77, 0.79, 0.1664),
    (5, 6.0, "rwm"): (0.0277, 15.6, 2.77, 0.39, 0.1693),
    (5, 6.0, "tmcmc"): (0.2020, 14.11, 2.81, 0.48, 0.1674),
    (10, 2.4, "rwm"): (0.256, 15.16, 2.77, 1.22, 0.1667),
    (10, 2.4, "tmcmc"): (0.4418, 18.26, 2.88, 0.73, 0.1677),
    (10, 6.0, "rwm"): (0.0137, 17.55, 2.91, 0.25, 0.1800),
    (10, 6.0, "tmcmc"): (0.2034, 16.31, 2.86, 0.49, 0.1688),
    (100, 2.4, "rwm"): (0.233, 18.14, 2.88, 1.34, 0.1794),
    (100, 2.4, "tmcmc"): (0.441, 18.46, 2.89, 0.73, 0.1671),
    (100, 6.0, "rwm"): (0.0032, 18.62, 2.89, 0.26, 0.1787),
    (100, 6.0, "tmcmc"): (0.206, 18.25, 2.88, 0.69, 0.1684),
    (200, 2.4, "rwm"): (0.234, 18.4, 2.88, 1.3, 0.1813),
    (200, 2.4, "tmcmc"): (0.442, 18.67, 2.89, 0.92, 0.1735),
    (200, 6.0, "rwm"): (0.0033, 18.86, 2.89, 0.09, 0.1832),
    (200, 6.0, "tmcmc"): (0.207, 18.74, 2.89, 0.54, 0.1755),
}

TABLE_COLUMNS = [
    "dimension", "scaling", "kernel", "acc", "iact", "ipact", "ajs", "avg_ks",
    "iact_unwindowed", "ipact_unwindowed", "n_chains", "seed", "wall_clock_ns", "status",
]


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def resolve_output_dir(out: Optional[str]) -> Path:
    path = Path(out or os.environ.get(OUT_ENV) or "results")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str = field(default_factory=version)
    started: str = field(default_factory=_now)
    finished: str = ""
    runs: list = field(default_factory=list)  # per-run seeds and wall-clock
    files: list = field(default_factory=list)

    def write(self, out_dir: Path, name: str = "manifest.json") -> Path:
        self.finished = _now()
        path = Path(out_dir) / name
        listed = {p.name for p in Path(out_dir).iterdir() if p.is_file()} | {name}
        self.files = sorted(listed)
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, default=str)
        return path


def write_rows(path, rows: Sequence[dict], columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# --------------------------------------------------------------------------- table


@dataclass
class ExperimentConfig:
    target: str = "std-normal"
    kernels: Sequence[str] = ("rwm", "tmcmc")
    dims: Sequence[int] = (2, 5, 10, 100, 200)
    scales: Sequence[float] = (2.4, 6.0)
    n_iters: int = 100_000
    n_chains: int = 1
    burn_in_frac: float = dg.DEFAULT_BURN_IN
    master_seed: int = 20240601
    output_dir: Optional[str] = None
    record_coords: tuple = (0,)
    gibbs_c: float = 1.0
    threads: int = 1
    n_lags: int = dg.DEFAULT_LAGS

    def __post_init__(self):
        for k in self.kernels:
            if k not in kn.KINDS:
                raise ValueError(f"unknown kernel {k!r}")
        if any(d < 1 for d in self.dims) or any(s <= 0 for s in self.scales):
            raise ValueError("dims must be >= 1 and scales positive")
        if self.n_iters < 1 or self.n_chains < 1:
            raise ValueError("n_iters and n_chains must be >= 1")
        if not 0 <= self.burn_in_frac < 1:
            raise ValueError("burn_in_frac must lie in [0, 1)")

    def cells(self) -> list[tuple[int, float, str]]:
        return [(d, float(s), k) for d in self.dims for s in self.scales for k in self.kernels]


def resolve_target(spec: str, d: int) -> tg.TargetModel:
    """A model from a config-file path, ``gaussian-measure``, or a builtin marginal name (iid)."""
    if os.path.exists(spec):
        model = tg.load_model_config(spec)
        if model.d != d:
            raise ValueError(f"{spec} declares d={model.d}, requested d={d}")
        return model
    if spec in ("gaussian-measure", "dependent"):
        return tg.GaussianMeasure(tg.power_lambdas(d))
    return tg.IidProduct(tg.marginal_from_name(spec), d)


def run_cell(cfg: ExperimentConfig, index: int, d: int, ell: float, kind: str) -> dict:
    model = resolve_target(cfg.target, d)
    kcfg = kn.KernelConfig(kind, ell, d, cfg.gibbs_c)
    init_rng = np.random.default_rng(kn.split_seed(cfg.master_seed, index, INIT_KEY))
    init = init_rng.uniform(-2.0, 2.0, d)
    seeds = [kn.split_seed(cfg.master_seed, index, j) for j in range(cfg.n_chains)]
    record = kn.RecordPolicy(coords=tuple(cfg.record_coords))
    ens = kn.run_ensemble(model, kcfg, init, cfg.n_iters, seeds, record, cfg.threads)
    lead = ens[0]
    cdf = tg.first_marginal_cdf(model) if cfg.n_chains >= 2 else None
    rep = dg.diagnose(lead, 0, cfg.burn_in_frac, cfg.n_lags, "parzen", ens if cdf else None, cdf)
    start = dg._burn_index(lead.n_iters, cfg.burn_in_frac)
    series = lead.coordinate(0)[start:]
    return {
        "dimension": d, "scaling": ell, "kernel": kind,
        "acc": rep.acceptance_rate, "iact": rep.iact, "ipact": rep.ipact, "ajs": rep.ajs, "avg_ks": rep.avg_ks,
        "iact_unwindowed": dg.iact(series, cfg.n_lags), "ipact_unwindowed": dg.ipact(series, cfg.n_lags),
        "n_chains": cfg.n_chains, "seed": seeds[0], "wall_clock_ns": sum(t.wall_clock_ns for t in ens),
        "status": "ok", "seeds": seeds,
    }


def reproduce_table1(cfg: ExperimentConfig, write: bool = True) -> tuple[list[dict], int]:
    """Run every (dimension, scale, kernel) cell; returns (rows, exit_code).

    A failing cell is recorded with status ``failed: ...`` and the rest still run.
    """
    rows, failed = [], False
    manifest = RunManifest("table1", asdict(cfg))
    for i, (d, ell, kind) in enumerate(cfg.cells()):
        try:
            row = run_cell(cfg, i, d, ell, kind)
        except Exception as exc:  # noqa: BLE001 - one bad cell must not sink the table
            log.exception("cell d=%s ell=%s %s failed", d, ell, kind)
            failed = True
            row = {"dimension": d, "scaling": ell, "kernel": kind, "status": f"failed: {exc}", "seeds": []}
        log.info("cell %d d=%d ell=%g %s acc=%s", i, d, ell, kind, row.get("acc"))
        manifest.runs.append({"cell": i, "dimension": d, "scaling": ell, "kernel": kind,
                              "seeds": row.pop("seeds"), "wall_clock_ns": row.get("wall_clock_ns"),
                              "status": row["status"]})
        rows.append(row)
    if write:
        out = resolve_output_dir(cfg.output_dir)
        write_rows(out / "table1.csv", rows, TABLE_COLUMNS)
        manifest.write(out)
    return rows, 2 if failed else 0


# --------------------------------------------------------------------------- curves

CURVE_COLUMNS = ["kind", "ell", "speed", "acceptance", "is_argmax"]


def speed_curves(kinds: Sequence[str], fam: sc.ScalingFamily, ell_grid: Sequence[float],
                 path=None) -> list[dict]:
    rows = []
    for k in kinds:
        rows.extend(sc.speed_curve(k, fam, ell_grid))
    if path is not None:
        write_rows(path, rows, CURVE_COLUMNS)
    return rows


def robustness_ratio(kind: str, fam: sc.ScalingFamily, factor: float = 2.5) -> float:
    """speed(factor * ell_opt) / speed(ell_opt)."""
    rep = sc.optimal_scale(kind, fam)
    return sc.speed(kind, fam, factor * rep.ell_opt) / rep.speed_at_opt


# --------------------------------------------------------------------------- timing

TIMING_COLUMNS = ["dimension", "kernel", "rep", "n_iters", "wall_clock_ns", "ns_per_iter"]


def timing_benchmark(dims: Sequence[int], n_iters: int, n_reps: int, seed: int = 7,
                     path=None) -> tuple[list[dict], list[dict]]:
    """Wall-clock of n_iters iterations on the iid standard-normal target, no recording.

    Returns (per-rep rows, per-(dimension, kernel) means).  Kernels alternate
    order between repetitions so drift in machine load hits both equally.
    """
    rows = []
    for d in dims:
        model = tg.IidProduct(tg.std_normal(), d)
        init = np.zeros(d)
        for kind in kn.KINDS:  # compile + warm caches outside the measurement
            kn.run_chain(model, kn.KernelConfig(kind, 2.4, d), init, 10, seed, kn.NO_RECORD)
        for r in range(n_reps):
            order = kn.KINDS if r % 2 == 0 else kn.KINDS[::-1]
            for kind in order:
                tr = kn.run_chain(model, kn.KernelConfig(kind, 2.4, d), init, n_iters,
                                  kn.split_seed(seed, d, r), kn.NO_RECORD)
                rows.append({"dimension": d, "kernel": kind, "rep": r, "n_iters": n_iters,
                             "wall_clock_ns": tr.wall_clock_ns, "ns_per_iter": tr.wall_clock_ns / n_iters})
    means = []
    for d in dims:
        for kind in kn.KINDS:
            vals = [r["ns_per_iter"] for r in rows if r["dimension"] == d and r["kernel"] == kind]
            means.append({"dimension": d, "kernel": kind, "rep": "mean", "n_iters": n_iters,
                          "wall_clock_ns": float(np.mean(vals)) * n_iters, "ns_per_iter": float(np.mean(vals))})
    if path is not None:
        write_rows(path, rows + means, TIMING_COLUMNS)
    return rows, means


def linear_fit_r2(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    return float(1.0 - resid @ resid / np.sum((y - y.mean()) ** 2))


# --------------------------------------------------------------------------- limit study


@dataclass
class LimitStudyConfig:
    dims: Sequence[int] = (5, 20, 200)
    ell: Optional[float] = None  # default: optimal TMCMC scale for I = 1
    n_chains: int = 100
    n_sde_paths: int = 100
    t_grid: Sequence[float] = tuple(round(0.05 * k, 10) for k in range(1, 11))
    dt: float = 1e-3
    replicates: int = 10
    master_seed: int = 4242
    output_dir: Optional[str] = None
    self_compare: bool = False

    def validate(self) -> None:
        if self.n_chains != self.n_sde_paths:
            raise ValueError(f"ensemble sizes differ: {self.n_chains} chains vs {self.n_sde_paths} SDE paths")
        if self.n_chains < 2 or self.replicates < 1:
            raise ValueError("need n_chains >= 2 and replicates >= 1")
        if not self.dt > 0 or any(t <= 0 for t in self.t_grid):
            raise ValueError("dt and t_grid must be positive")


def run_limit_study(cfg: LimitStudyConfig, write: bool = True) -> dict:
    """TMCMC on the iid standard-normal target vs its Langevin limit, for each dimension.

    Returns {d: [LimitReport per replicate]}; the summary statistic per d is the
    median K-S over all (replicate, t) pairs.
    """
    cfg.validate()
    fam = sc.ScalingFamily(sc.Variant.IID)
    ell = cfg.ell if cfg.ell is not None else sc.optimal_scale(sc.TMCMC, fam).ell_opt
    spec = sde.LangevinSpec1D(sc.tmcmc_speed(fam, ell), lambda u: -u, lambda rng: rng.standard_normal())
    t_grid = np.asarray(cfg.t_grid, dtype=float)
    out = resolve_output_dir(cfg.output_dir) if write else None
    manifest = RunManifest("limit", asdict(cfg))
    reports: dict[int, list] = {}
    summary = []
    for d in cfg.dims:
        model = tg.IidProduct(tg.std_normal(), d)
        kcfg = kn.KernelConfig(kn.TMCMC, ell, d)
        n_iters = int(math.floor(d * t_grid.max() + 1e-9)) + 2
        reports[d] = []
        for r in range(cfg.replicates):
            init_rng = np.random.default_rng(kn.split_seed(cfg.master_seed, d, r, INIT_KEY))
            inits = tg.exact_sample(model, init_rng, cfg.n_chains)
            seeds = [kn.split_seed(cfg.master_seed, d, r, j) for j in range(cfg.n_chains)]
            ens = kn.run_ensemble(model, kcfg, inits, n_iters, seeds, kn.RecordPolicy(coords=(0,)))
            if cfg.self_compare:
                vals = np.array([sde.sped_up_coordinate(tr, d, t_grid) for tr in ens])
                starts = inits[:, 0]
                rep = sde.compare_ensembles(vals, vals, t_grid, "increment", 5, starts, starts)
            else:
                rep = sde.limit_check(ens, spec, t_grid, d, cfg.dt, kn.split_seed(cfg.master_seed, d, r, 1),
                                      sde_paths=cfg.n_sde_paths)
            reports[d].append(rep)
            manifest.runs.append({"dimension": d, "replicate": r, "seeds": seeds})
            if out is not None:
                rep.to_csv(out / f"limit_d{d}_r{r}.csv")
        med = float(np.median(np.concatenate([rep.ks for rep in reports[d]])))
        summary.append({"dimension": d, "ell": ell, "speed": spec.speed, "median_ks": med,
                        "replicates": cfg.replicates, "n_chains": cfg.n_chains})
        log.info("limit study d=%d median K-S %.4f", d, med)
    if out is not None:
        write_rows(out / "limit_summary.csv", summary, ["dimension", "ell", "speed", "median_ks", "replicates", "n_chains"])
        manifest.write(out)
    return {"reports": reports, "summary": summary}


def median_ks_by_dim(result: dict) -> dict:
    return {row["dimension"]: row["median_ks"] for row in result["summary"]}
