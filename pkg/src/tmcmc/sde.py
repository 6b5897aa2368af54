"""Euler-Maruyama simulation of the limiting Langevin diffusions and chain-vs-limit comparison."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import diagnostics as dg
from .kernels import ChainTrace


@dataclass(frozen=True)
class LangevinSpec1D:
    """dU = sqrt(g) dB + (g/2) (log f)'(U) dt."""

    speed: float
    dlog_f: Callable[[float], float]
    u0_sampler: Callable[[np.random.Generator], float]

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError("speed must be positive")


@dataclass(frozen=True)
class LangevinSpecHilbert:
    """dz = -g (z + Sigma grad Psi(z)) dt + sqrt(2g) dW,  Cov(W) = diag(lambda^2)."""

    speed: float
    lambdas: np.ndarray
    grad_psi: Callable[[np.ndarray], np.ndarray]
    z0_sampler: Callable[[np.random.Generator], np.ndarray]

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be non-negative")
        lam = np.asarray(self.lambdas, dtype=float)
        if np.any(lam <= 0):
            raise ValueError("lambdas must be positive")
        object.__setattr__(self, "lambdas", lam)


def euler_langevin_1d(spec: LangevinSpec1D, dt: float, n_steps: int, seed: int,
                      noise: Optional[np.ndarray] = None, u0: Optional[float] = None) -> np.ndarray:
    """Path U_0..U_n of the Euler-Maruyama scheme.

    ``noise`` (n_steps standard normals) and ``u0`` override the seeded draws;
    the generator draws u0 first, then the n_steps increments.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(seed)
    u = float(spec.u0_sampler(rng)) if u0 is None else float(u0)
    z = rng.standard_normal(n_steps) if noise is None else np.asarray(noise, dtype=float)
    if z.shape != (n_steps,):
        raise ValueError("noise must have n_steps entries")
    g = spec.speed
    half_g_dt = 0.5 * g * dt
    sd = math.sqrt(g * dt)
    out = np.empty(n_steps + 1)
    out[0] = u
    dlog_f = spec.dlog_f
    for k in range(n_steps):
        drift = float(dlog_f(u))
        if not math.isfinite(drift):
            raise FloatingPointError(f"non-finite drift at step {k} (U={u})")
        u = u + half_g_dt * drift + sd * z[k]
        out[k + 1] = u
    return out


def euler_langevin_hilbert(spec: LangevinSpecHilbert, dt: float, n_steps: int, seed: int,
                           noise: Optional[np.ndarray] = None, z0: Optional[np.ndarray] = None) -> np.ndarray:
    """(n_steps + 1, d) path of z^{k+1} = z^k - g (z^k + lambda^2 grad Psi(z^k)) dt + sqrt(2 g dt) lambda w."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(seed)
    lam = spec.lambdas
    d = lam.size
    z = np.asarray(spec.z0_sampler(rng) if z0 is None else z0, dtype=float).copy()
    w = rng.standard_normal((n_steps, d)) if noise is None else np.asarray(noise, dtype=float)
    if z.shape != (d,) or w.shape != (n_steps, d):
        raise ValueError("initial state / noise shapes do not match lambdas")
    g = spec.speed
    sd = math.sqrt(2.0 * g * dt) * lam
    lam2 = lam * lam
    out = np.empty((n_steps + 1, d))
    out[0] = z
    for k in range(n_steps):
        drift = z + lam2 * spec.grad_psi(z)
        if not np.all(np.isfinite(drift)):
            raise FloatingPointError(f"non-finite drift at step {k}")
        z = z - g * drift * dt + sd * w[k]
        out[k + 1] = z
    return out


def sped_up_coordinate(trace: ChainTrace, d: float, t_grid: Sequence[float], coordinate: int = 0,
                       interpolate: bool = False) -> np.ndarray:
    """Chain coordinate seen on the diffusion time scale.

    With X_0 the starting point, returns X_[d t] (``interpolate=False``) or the
    piecewise-linear interpolant (d t - k) X_{k+1} + (k + 1 - d t) X_k.
    """
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    path = trace.path(coordinate)
    s = d * t
    k = np.floor(s + 1e-9).astype(np.int64)
    if t.size and int(k.max()) + 1 > trace.n_iters:
        raise ValueError(f"trace of {trace.n_iters} iterations too short for d*t = {s.max():g}")
    if not interpolate:
        return path[k]
    frac = np.clip(s - k, 0.0, 1.0)
    return frac * path[k + 1] + (1.0 - frac) * path[k]


@dataclass
class LimitReport:
    t: np.ndarray
    ks: np.ndarray
    acf_delta: np.ndarray  # (len(t), n_lags); NaN where t_{i+k} is off the grid
    statistic: str = "increment"

    @property
    def median_ks(self) -> float:
        return float(np.median(self.ks))

    def to_csv(self, path) -> None:
        n_lags = self.acf_delta.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "ks_stat"] + [f"acf_delta_lag{k}" for k in range(1, n_lags + 1)])
            for i, t in enumerate(self.t):
                w.writerow([repr(float(t)), repr(float(self.ks[i]))] + [repr(float(v)) for v in self.acf_delta[i]])


def _ensemble_corr(values: np.ndarray, lag: int) -> np.ndarray:
    n_t = values.shape[1]
    out = np.full(n_t, np.nan)
    for i in range(n_t - lag):
        a, b = values[:, i], values[:, i + lag]
        sa, sb = a.std(), b.std()
        if sa > 0 and sb > 0:
            out[i] = float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))
    return out


def compare_ensembles(chain_values: np.ndarray, sde_values: np.ndarray, t_grid: Sequence[float],
                      statistic: str = "increment", n_lags: int = 5,
                      start_chain: Optional[np.ndarray] = None, start_sde: Optional[np.ndarray] = None) -> LimitReport:
    """Per-time two-sample K-S and ensemble lag-correlation differences.

    ``chain_values`` and ``sde_values`` are (n_members, len(t_grid)).  With
    ``statistic="increment"`` the K-S compares U_t - U_0 (needs the start values);
    ``"level"`` compares U_t itself.
    """
    chain_values = np.asarray(chain_values, dtype=float)
    sde_values = np.asarray(sde_values, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if chain_values.shape != sde_values.shape:
        raise ValueError(f"mismatched ensembles: {chain_values.shape} vs {sde_values.shape}")
    if chain_values.shape[1] != t.size:
        raise ValueError("ensemble columns must match t_grid")
    if statistic == "increment":
        if start_chain is None or start_sde is None:
            raise ValueError("increment statistic needs the starting values")
        a = chain_values - np.asarray(start_chain, dtype=float)[:, None]
        b = sde_values - np.asarray(start_sde, dtype=float)[:, None]
    elif statistic == "level":
        a, b = chain_values, sde_values
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    ks = np.array([dg.ks_two_sample(a[:, i], b[:, i]) for i in range(t.size)])
    acf = np.column_stack(
        [_ensemble_corr(chain_values, k) - _ensemble_corr(sde_values, k) for k in range(1, n_lags + 1)]
    )
    return LimitReport(t, ks, acf, statistic)


def simulate_sde_ensemble(spec: LangevinSpec1D, n_paths: int, t_grid: Sequence[float], dt: float,
                          seeds: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """(starts, values at t_grid) for ``n_paths`` independent Euler paths."""
    t = np.asarray(t_grid, dtype=float)
    idx = np.rint(t / dt).astype(np.int64)
    if np.any(np.abs(idx * dt - t) > 1e-9 * max(1.0, float(t.max(initial=1.0)))):
        raise ValueError("t_grid must lie on multiples of dt")
    n_steps = int(idx.max())
    starts = np.empty(n_paths)
    values = np.empty((n_paths, t.size))
    for j in range(n_paths):
        path = euler_langevin_1d(spec, dt, n_steps, seeds[j])
        starts[j] = path[0]
        values[j] = path[idx]
    return starts, values


def limit_check(chain_ensemble: Sequence[ChainTrace], spec: LangevinSpec1D, t_grid: Sequence[float],
                d: float, dt: float = 1e-3, seed: int = 0, coordinate: int = 0,
                statistic: str = "increment", interpolate: bool = False,
                sde_paths: Optional[int] = None) -> LimitReport:
    """Compare sped-up chain coordinates against Euler-Langevin paths at each grid time.

    Both sides should start from the stationary law.  ``sde_paths`` defaults to
    the ensemble size; any other value is rejected.
    """
    n = len(chain_ensemble)
    if sde_paths is not None and sde_paths != n:
        raise ValueError(f"ensemble sizes differ: {n} chains vs {sde_paths} SDE paths")
    if n < 2:
        raise ValueError("need at least 2 chains")
    from .kernels import split_seed

    chain_vals = np.array([sped_up_coordinate(tr, d, t_grid, coordinate, interpolate) for tr in chain_ensemble])
    chain_start = np.array([tr.init[coordinate] for tr in chain_ensemble])
    seeds = [split_seed(seed, j) for j in range(n)]
    sde_start, sde_vals = simulate_sde_ensemble(spec, n, t_grid, dt, seeds)
    return compare_ensembles(chain_vals, sde_vals, t_grid, statistic, 5, chain_start, sde_start)
