"""Diffusion speeds, theoretical acceptance rates and optimal scales for TMCMC and RWM.

Every variant reduces to one effective rate ``kappa`` and a prefactor ``p``:

    TMCMC speed  p * 4 ell^2 int_0^inf u^2 Phi(-kappa ell u) phi(u) du
    TMCMC accept     4       int_0^inf     Phi(-kappa ell u) phi(u) du
    RWM speed    p * 2 ell^2 Phi(-kappa ell)
    RWM accept       2       Phi(-kappa ell)

with (p, kappa) = (1, sqrt(I)/2) for iid, (c, sqrt(cI)/2) within Gibbs, an extra
factor xi in kappa for scaled products, and (1, 1/sqrt 2), (c, 1/(c sqrt 2))
for the Gaussian-measure family.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

TMCMC = "tmcmc"
RWM = "rwm"


class Variant(enum.Enum):
    IID = "iid"
    IID_GIBBS = "iid-gibbs"
    NONIID = "noniid"
    NONIID_GIBBS = "noniid-gibbs"
    DEPENDENT = "dependent"
    DEPENDENT_GIBBS = "dependent-gibbs"

    @property
    def gibbs(self) -> bool:
        return self.value.endswith("gibbs")


@dataclass(frozen=True)
class ScalingFamily:
    variant: Variant
    information: float = 1.0
    c: float = 1.0
    xi: float = 1.0

    def __post_init__(self):
        if not self.information > 0:
            raise ValueError("information constant must be positive")
        if not 0 < self.c <= 1:
            raise ValueError("c must lie in (0, 1]")
        if not self.xi > 0:
            raise ValueError("xi must be positive")

    @property
    def prefactor(self) -> float:
        return self.c if self.variant.gibbs else 1.0

    @property
    def kappa(self) -> float:
        c = self.c if self.variant.gibbs else 1.0
        v = self.variant
        if v in (Variant.IID, Variant.IID_GIBBS):
            return math.sqrt(c * self.information) / 2
        if v in (Variant.NONIID, Variant.NONIID_GIBBS):
            return self.xi * math.sqrt(c * self.information) / 2
        return 1.0 / (c * math.sqrt(2.0))


@dataclass(frozen=True)
class ScalingReport:
    ell_opt: float
    speed_at_opt: float
    acceptance_at_opt: float


# Gauss-Legendre on [0, U_MAX]; the tail beyond carries < phi(10) ~ 8e-23 weight.
# Integrands carrying Phi(-a u) are cut at 12/a instead when that is shorter
# (Phi(-12) ~ 2e-33), so large a keeps the nodes inside the boundary layer.
U_MAX = 10.0
N_NODES = 200
PHI_CUT = 12.0


@lru_cache(maxsize=None)
def _legendre():
    return np.polynomial.legendre.leggauss(N_NODES)


def _half_line_rule(upper: float = U_MAX):
    x, w = _legendre()
    u = 0.5 * upper * (x + 1.0)
    return u, 0.5 * upper * w * np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def half_line_integral(weight: Callable[[np.ndarray], np.ndarray], upper: float = U_MAX) -> float:
    """int_0^upper weight(u) phi(u) du (upper defaults to the full half-line cut)."""
    u, w = _half_line_rule(min(upper, U_MAX))
    return float(np.dot(w, weight(u)))


def _phi_cut(a: float) -> float:
    return U_MAX if a <= 0 else min(U_MAX, PHI_CUT / a)


def expected_min_exp_normal(mu: float, sigma: float) -> float:
    """E[min(1, e^X)] for X ~ N(mu, sigma^2)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    first = special.ndtr(mu / sigma)
    # e^{mu + sigma^2/2} Phi(-sigma - mu/sigma) formed in log space
    second = math.exp(mu + 0.5 * sigma * sigma + special.log_ndtr(-sigma - mu / sigma))
    return float(first + second)


def tmcmc_speed(fam: ScalingFamily, ell: float) -> float:
    a = fam.kappa * ell
    j2 = half_line_integral(lambda u: u * u * special.ndtr(-a * u), _phi_cut(a))
    return fam.prefactor * 4.0 * ell * ell * j2


def rwm_speed(fam: ScalingFamily, ell: float) -> float:
    return fam.prefactor * 2.0 * ell * ell * float(special.ndtr(-fam.kappa * ell))


def theoretical_acceptance(kind: str, fam: ScalingFamily, ell: float) -> float:
    a = fam.kappa * ell
    if kind == TMCMC:
        return 4.0 * half_line_integral(lambda u: special.ndtr(-a * u), _phi_cut(a))
    if kind == RWM:
        return 2.0 * float(special.ndtr(-a))
    raise ValueError(f"unknown kernel kind {kind!r}")


def speed(kind: str, fam: ScalingFamily, ell: float) -> float:
    if kind == TMCMC:
        return tmcmc_speed(fam, ell)
    if kind == RWM:
        return rwm_speed(fam, ell)
    raise ValueError(f"unknown kernel kind {kind!r}")


INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-4) -> float:
    """Maximizer of a unimodal f on [lo, hi], to interval width ``tol``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def optimal_scale(kind: str, fam: ScalingFamily, n_grid: int = 400, tol: float = 1e-4) -> ScalingReport:
    """Bracket the speed maximum on a grid over (0, 20/kappa], then refine by golden section."""
    f = lambda ell: speed(kind, fam, ell)
    grid = np.linspace(20.0 / fam.kappa / n_grid, 20.0 / fam.kappa, n_grid)
    vals = np.array([f(g) for g in grid])
    i = int(np.argmax(vals))
    lo = float(grid[i - 1]) if i > 0 else 0.0
    hi = float(grid[min(i + 1, n_grid - 1)])
    ell = float(golden_section_max(f, lo, hi, tol))
    return ScalingReport(ell, f(ell), theoretical_acceptance(kind, fam, ell))


def speed_curve(kind: str, fam: ScalingFamily, ell_grid: Iterable[float]) -> list[dict]:
    """Rows (kind, ell, speed, acceptance, is_argmax) over a grid; the grid argmax is flagged."""
    ells = [float(e) for e in ell_grid]
    if any(e <= 0 for e in ells):
        raise ValueError("ell grid must be positive")
    rows = [
        {"kind": kind, "ell": e, "speed": speed(kind, fam, e), "acceptance": theoretical_acceptance(kind, fam, e)}
        for e in ells
    ]
    best = max(range(len(rows)), key=lambda i: rows[i]["speed"]) if rows else None
    for i, r in enumerate(rows):
        r["is_argmax"] = int(i == best)
    return rows


def variant_grid(informations: Sequence[float] = (0.25, 1.0, 4.0), cs: Sequence[float] = (0.3, 0.7, 1.0),
                 xis: Sequence[float] = (1.0, 10.0)) -> list[ScalingFamily]:
    """All variants crossed with a (I, c, xi) grid; irrelevant parameters collapse."""
    seen, out = set(), []
    for v in Variant:
        for I in informations:
            for c in cs:
                for xi in xis:
                    key = (
                        v,
                        I if v not in (Variant.DEPENDENT, Variant.DEPENDENT_GIBBS) else 1.0,
                        c if v.gibbs else 1.0,
                        xi if v in (Variant.NONIID, Variant.NONIID_GIBBS) else 1.0,
                    )
                    if key not in seen:
                        seen.add(key)
                        out.append(ScalingFamily(*key))
    return out
