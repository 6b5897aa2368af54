"""Command-line entry point: ``tmcmc {table1,curves,timing,limit,chain}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import harness as hs
from . import kernels as kn
from . import scaling as sc
from . import targets as tg


def _dims(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=20240601, help="master seed")
    p.add_argument("--out", default=None, help=f"output directory (default ${hs.OUT_ENV} or ./results)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tmcmc", description="TMCMC vs RWM experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table1", help="acceptance / IACT / IPACT / AJS / K-S across dimensions and scales")
    t.add_argument("--dim", type=_dims, default=[2, 5, 10, 100, 200], help="comma-separated dimensions")
    t.add_argument("--scale", type=_floats, default=[2.4, 6.0], help="comma-separated ell values")
    t.add_argument("--kernel", choices=["tmcmc", "rwm", "both"], default="both")
    t.add_argument("--gibbs-c", type=float, default=1.0)
    t.add_argument("--target", default="std-normal", help="marginal name, 'gaussian-measure', or INI path")
    t.add_argument("--iters", type=int, default=100_000)
    t.add_argument("--burn-in-frac", type=float, default=0.25)
    t.add_argument("--chains", type=int, default=1, help="chains per cell (>= 2 enables average K-S)")
    t.add_argument("--threads", type=int, default=1)
    _common(t)

    c = sub.add_parser("curves", help="theoretical speed and acceptance against ell")
    c.add_argument("--variant", choices=[v.value for v in sc.Variant], default="iid")
    c.add_argument("--information", type=float, default=1.0)
    c.add_argument("--gibbs-c", type=float, default=1.0)
    c.add_argument("--xi", type=float, default=1.0)
    c.add_argument("--ell-max", type=float, default=8.0)
    c.add_argument("--points", type=int, default=160)
    _common(c)

    m = sub.add_parser("timing", help="wall-clock per iteration, TMCMC vs RWM")
    m.add_argument("--dim", type=_dims, default=[2, 5, 10, 20, 50, 100, 200])
    m.add_argument("--iters", type=int, default=1_000_000)
    m.add_argument("--reps", type=int, default=5)
    _common(m)

    lim = sub.add_parser("limit", help="chain vs Langevin-limit comparison across dimensions")
    lim.add_argument("--dim", type=_dims, default=[5, 20, 200])
    lim.add_argument("--chains", type=int, default=100)
    lim.add_argument("--sde-paths", type=int, default=None, help="defaults to --chains; must match it")
    lim.add_argument("--replicates", type=int, default=10)
    lim.add_argument("--dt", type=float, default=1e-3)
    lim.add_argument("--self-compare", action="store_true", help="compare the chain ensemble with itself")
    _common(lim)

    ch = sub.add_parser("chain", help="run a single chain and write its trace")
    ch.add_argument("--dim", type=int, default=10)
    ch.add_argument("--scale", type=float, default=2.4)
    ch.add_argument("--kernel", choices=list(kn.KINDS), default="tmcmc")
    ch.add_argument("--gibbs-c", type=float, default=1.0)
    ch.add_argument("--target", default="std-normal")
    ch.add_argument("--precondition", action="store_true", help="scale steps by the target's lambdas")
    ch.add_argument("--iters", type=int, default=100_000)
    ch.add_argument("--burn-in-frac", type=float, default=0.25)
    ch.add_argument("--record", default="1", help="1-based coordinates to store, or 'all'")
    _common(ch)
    return ap


def _table1(a) -> int:
    kinds = ("rwm", "tmcmc") if a.kernel == "both" else (a.kernel,)
    cfg = hs.ExperimentConfig(target=a.target, kernels=kinds, dims=a.dim, scales=a.scale, n_iters=a.iters,
                              n_chains=a.chains, burn_in_frac=a.burn_in_frac, master_seed=a.seed,
                              output_dir=a.out, gibbs_c=a.gibbs_c, threads=a.threads)
    rows, code = hs.reproduce_table1(cfg)
    for r in rows:
        print(f"d={r['dimension']:>4} ell={r['scaling']:<4g} {r['kernel']:<6} "
              f"acc={r.get('acc', float('nan')):.4f} iact={r.get('iact', float('nan')):.2f} "
              f"ipact={r.get('ipact', float('nan')):.2f} ajs={r.get('ajs', float('nan')):.3f} {r['status']}")
    return code


def _curves(a) -> int:
    fam = sc.ScalingFamily(sc.Variant(a.variant), a.information, a.gibbs_c, a.xi)
    grid = np.linspace(a.ell_max / a.points, a.ell_max, a.points)
    out = hs.resolve_output_dir(a.out)
    hs.speed_curves(kn.KINDS, fam, grid, out / "speed_curves.csv")
    man = hs.RunManifest("curves", vars(a).copy())
    for kind in kn.KINDS:
        rep = sc.optimal_scale(kind, fam)
        man.runs.append({"kind": kind, "ell_opt": rep.ell_opt, "speed": rep.speed_at_opt,
                         "acceptance": rep.acceptance_at_opt})
        print(f"{kind:<6} ell_opt={rep.ell_opt:.4f} speed={rep.speed_at_opt:.4f} "
              f"acceptance={rep.acceptance_at_opt:.4f}")
    man.write(out)
    return 0


def _timing(a) -> int:
    out = hs.resolve_output_dir(a.out)
    _, means = hs.timing_benchmark(a.dim, a.iters, a.reps, a.seed, out / "timing.csv")
    man = hs.RunManifest("timing", vars(a).copy())
    man.runs = means
    man.write(out)
    for r in means:
        print(f"d={r['dimension']:>4} {r['kernel']:<6} {r['ns_per_iter']:.1f} ns/iter")
    return 0


def _limit(a) -> int:
    cfg = hs.LimitStudyConfig(dims=a.dim, n_chains=a.chains,
                              n_sde_paths=a.chains if a.sde_paths is None else a.sde_paths,
                              dt=a.dt, replicates=a.replicates, master_seed=a.seed, output_dir=a.out,
                              self_compare=a.self_compare)
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    res = hs.run_limit_study(cfg)
    for row in res["summary"]:
        print(f"d={row['dimension']:>4} median K-S={row['median_ks']:.4f}")
    return 0


def _chain(a) -> int:
    model = hs.resolve_target(a.target, a.dim)
    pre = model.lambdas if a.precondition and isinstance(model, tg.GaussianMeasure) else None
    cfg = kn.KernelConfig(a.kernel, a.scale, a.dim, a.gibbs_c, pre)
    coords = None if a.record == "all" else tuple(int(v) - 1 for v in a.record.split(","))
    init = np.random.default_rng(kn.split_seed(a.seed, hs.INIT_KEY)).uniform(-2, 2, a.dim)
    seed = kn.split_seed(a.seed, 0)
    trace = kn.run_chain(model, cfg, init, a.iters, seed, kn.RecordPolicy(coords))
    out = hs.resolve_output_dir(a.out)
    trace.to_csv(out / "trace.csv")
    from . import diagnostics as dg

    summary = trace.summary()
    if 0 in trace.coords:
        summary["diagnostics"] = json.loads(dg.diagnose(trace, 0, a.burn_in_frac).to_json())
    with open(out / "trace.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    man = hs.RunManifest("chain", vars(a).copy())
    man.runs.append({"seed": seed, "wall_clock_ns": trace.wall_clock_ns})
    man.write(out)
    print(json.dumps(summary, indent=2))
    return 0


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    handler = {"table1": _table1, "curves": _curves, "timing": _timing, "limit": _limit, "chain": _chain}
    try:
        return handler[a.command](a)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
