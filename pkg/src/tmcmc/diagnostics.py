"""Chain performance measures: acceptance rate, AJS, IACT, IPACT, K-S distances."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .kernels import ChainTrace

DEFAULT_BURN_IN = 0.25
DEFAULT_LAGS = 25


def _burn_index(n: int, burn_in_frac: float) -> int:
    if not 0 <= burn_in_frac < 1:
        raise ValueError("burn_in_frac must lie in [0, 1)")
    start = int(math.floor(n * burn_in_frac))
    if start >= n:
        raise ValueError("empty post-burn-in window")
    return start


def acceptance_rate(trace: ChainTrace, burn_in_frac: float = DEFAULT_BURN_IN) -> float:
    start = _burn_index(trace.n_iters, burn_in_frac)
    return float(np.mean(trace.accepted[start:]))


def average_jump_size(trace: ChainTrace, burn_in_frac: float = DEFAULT_BURN_IN) -> float:
    """Mean Euclidean jump per post-burn-in iteration; rejections count as zero."""
    start = _burn_index(trace.n_iters, burn_in_frac)
    return float(np.mean(trace.jump_norms[start:]))


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """rho_0..rho_max_lag from the biased (1/n) autocovariance estimator."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n <= max_lag:
        raise ValueError(f"series length {n} must exceed max_lag {max_lag}")
    x = x - x.mean()
    c0 = float(np.dot(x, x)) / n
    if c0 == 0.0:
        raise ValueError("zero-variance series")
    rho = np.empty(max_lag + 1)
    rho[0] = 1.0
    for k in range(1, max_lag + 1):
        rho[k] = float(np.dot(x[:-k], x[k:])) / n / c0
    return rho


def parzen_weights(max_lag: int) -> np.ndarray:
    """Parzen lag window w(k/M), k = 1..M."""
    u = np.arange(1, max_lag + 1) / max_lag
    return np.where(u <= 0.5, 1 - 6 * u**2 + 6 * u**3, 2 * (1 - u) ** 3)


def _lag_weights(max_lag: int, window: Optional[str]) -> np.ndarray:
    if window is None or window == "none":
        return np.ones(max_lag)
    if window == "parzen":
        return parzen_weights(max_lag)
    raise ValueError(f"unknown lag window {window!r}")


def iact(series, max_lag: int = DEFAULT_LAGS, window: Optional[str] = None) -> float:
    """1 + 2 sum_{k=1}^{max_lag} w_k rho_k; w_k = 1 unless a lag window is named.

    ``window="parzen"`` is the convention that reproduces published IACT tables
    computed with a 25-lag truncation.
    """
    rho = autocorrelation(series, max_lag)
    return float(1.0 + 2.0 * np.dot(_lag_weights(max_lag, window), rho[1:]))


def partial_autocorrelation(rho: Sequence[float]) -> np.ndarray:
    """Durbin-Levinson recursion: pi_1..pi_K from rho_0..rho_K."""
    rho = np.asarray(rho, dtype=float)
    K = rho.size - 1
    pacf = np.empty(K)
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, K + 1):
        num = rho[k] - np.dot(phi, rho[k - 1 : 0 : -1])
        a = num / v
        if not abs(a) < 1 or not math.isfinite(a):
            raise ArithmeticError(f"Durbin-Levinson breakdown at lag {k} (pi_k = {a})")
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1 - a * a
        pacf[k - 1] = a
    return pacf


def ipact(series, max_lag: int = DEFAULT_LAGS, window: Optional[str] = None) -> float:
    rho = autocorrelation(series, max_lag)
    return float(1.0 + 2.0 * np.dot(_lag_weights(max_lag, window), partial_autocorrelation(rho)))


def ks_statistic(sample, cdf: Callable) -> float:
    """Exact one-sample statistic sup |F_n - F|."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_statistic_rows(samples: np.ndarray, cdf: Callable) -> np.ndarray:
    """One-sample statistic for every row of a (n_rows, n) array."""
    x = np.sort(np.asarray(samples, dtype=float), axis=1)
    n = x.shape[1]
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return np.maximum(np.max(i / n - F, axis=1), np.max(F - (i - 1) / n, axis=1))


def ks_two_sample(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)| for two empirical distributions."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    pts = np.concatenate([a, b])
    Fa = np.searchsorted(a, pts, side="right") / a.size
    Fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


def ensemble_matrix(ensemble: Sequence[ChainTrace], coordinate: int) -> np.ndarray:
    """(n_iters, n_chains) values of one coordinate across an ensemble."""
    if len(ensemble) < 2:
        raise ValueError("ensemble needs at least 2 chains")
    lengths = {tr.n_iters for tr in ensemble}
    if len(lengths) != 1:
        raise ValueError(f"ragged ensemble: lengths {sorted(lengths)}")
    return np.column_stack([tr.coordinate(coordinate) for tr in ensemble])


def average_ks(ensemble: Sequence[ChainTrace], coordinate: int, cdf: Callable,
               burn_in_frac: float = DEFAULT_BURN_IN, block: int = 4096) -> float:
    """Mean over post-burn-in iterations of the across-chain K-S distance to ``cdf``."""
    values = ensemble_matrix(ensemble, coordinate)
    start = _burn_index(values.shape[0], burn_in_frac)
    total, count = 0.0, 0
    for s in range(start, values.shape[0], block):
        ks = ks_statistic_rows(values[s : s + block], cdf)
        total += float(ks.sum())
        count += ks.size
    return total / count


@dataclass
class DiagnosticsReport:
    acceptance_rate: float
    ajs: float
    iact: float
    ipact: float
    avg_ks: float
    burn_in_frac: float
    n_lags: int
    window: str = "none"

    def to_json(self, path=None) -> str:
        text = json.dumps(asdict(self), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def diagnose(trace: ChainTrace, coordinate: int = 0, burn_in_frac: float = DEFAULT_BURN_IN,
             n_lags: int = DEFAULT_LAGS, window: Optional[str] = None,
             ensemble: Optional[Sequence[ChainTrace]] = None, cdf: Optional[Callable] = None) -> DiagnosticsReport:
    """All measures for one chain; avg_ks needs an ensemble and a cdf (NaN otherwise)."""
    start = _burn_index(trace.n_iters, burn_in_frac)
    series = trace.coordinate(coordinate)[start:]
    ks = float("nan")
    if ensemble is not None and cdf is not None and len(ensemble) >= 2:
        ks = average_ks(ensemble, coordinate, cdf, burn_in_frac)
    return DiagnosticsReport(
        acceptance_rate=acceptance_rate(trace, burn_in_frac),
        ajs=average_jump_size(trace, burn_in_frac),
        iact=iact(series, n_lags, window),
        ipact=ipact(series, n_lags, window),
        avg_ks=ks,
        burn_in_frac=burn_in_frac,
        n_lags=n_lags,
        window=window or "none",
    )
