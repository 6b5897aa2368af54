"""Speed and acceptance curves for every variant, plus the 2.5 x ell_opt robustness ratios.

    python scripts/speed_curves.py [--out DIR]
"""
import argparse
import sys

import numpy as np

from tmcmc import harness as hs
from tmcmc import scaling as sc

SETTINGS = {
    sc.Variant.IID: {},
    sc.Variant.IID_GIBBS: {"c": 0.5},
    sc.Variant.NONIID: {"xi": 0.5},
    sc.Variant.NONIID_GIBBS: {"c": 0.5, "xi": 0.5},
    sc.Variant.DEPENDENT: {},
    sc.Variant.DEPENDENT_GIBBS: {"c": 0.5},
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=None)
    ap.add_argument("--points", type=int, default=200)
    a = ap.parse_args(argv)
    out = hs.resolve_output_dir(a.out)
    man = hs.RunManifest("speed_curves", {"points": a.points, "settings": {v.value: s for v, s in SETTINGS.items()}})
    for v, kw in SETTINGS.items():
        fam = sc.ScalingFamily(v, **kw)
        top = 4.0 * max(sc.optimal_scale(k, fam).ell_opt for k in (sc.TMCMC, sc.RWM))
        grid = np.linspace(top / a.points, top, a.points)
        hs.speed_curves((sc.TMCMC, sc.RWM), fam, grid, out / f"speed_{v.value}.csv")
        ratios = {k: hs.robustness_ratio(k, fam) for k in (sc.TMCMC, sc.RWM)}
        man.runs.append({"variant": v.value, "ratio_at_2.5x": ratios})
        print(f"{v.value:<16} speed(2.5 ell_opt)/peak  tmcmc={ratios['tmcmc']:.3f}  rwm={ratios['rwm']:.3f}")
    man.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
