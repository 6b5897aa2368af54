"""Additive TMCMC and random-walk Metropolis kernels, chain runner and traces.

Per-step generator consumption order (fixed, shared by the Python and the
compiled path):

1. TMCMC: one standard normal z, epsilon = |z| * scale; then ceil(d/53) uniforms,
   each contributing the 53 bits of its mantissa as sign bits (bit 1 -> +1).
   RWM: d standard normals.
2. If gibbs_c < 1: d uniforms, coordinate i is updated iff u_i < gibbs_c.
   Skipped entirely when gibbs_c == 1.
3. One uniform u; accept iff u < exp(min(0, log pi(y) - log pi(x))).
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import targets as tg

TMCMC = "tmcmc"
RWM = "rwm"
KINDS = (TMCMC, RWM)
_BITS_PER_DRAW = 53
_TWO53 = float(2**53)


@dataclass(frozen=True, eq=False)
class KernelConfig:
    """Proposal settings.

    Without a preconditioner the per-coordinate scale is ell / d^(alpha/2).
    With one (the Gaussian-measure convention) it is sqrt(2 ell^2 / d) * lambda_i.
    """

    kind: str
    ell: float
    d: int
    gibbs_c: float = 1.0
    preconditioner: Optional[np.ndarray] = None
    variance_exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.ell > 0:
            raise ValueError("ell must be positive")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0 < self.gibbs_c <= 1:
            raise ValueError("gibbs_c must lie in (0, 1]")
        if self.preconditioner is not None:
            p = np.asarray(self.preconditioner, dtype=float)
            if p.shape != (self.d,) or np.any(p <= 0):
                raise ValueError("preconditioner must hold d positive reals")
            object.__setattr__(self, "preconditioner", p)

    @property
    def steps(self) -> np.ndarray:
        """Per-coordinate multiplier of the epsilon / normal draw."""
        if self.preconditioner is None:
            return np.full(self.d, self.ell / self.d ** (self.variance_exponent / 2))
        return math.sqrt(2.0 * self.ell**2 / self.d) * self.preconditioner

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ell": self.ell,
            "d": self.d,
            "gibbs_c": self.gibbs_c,
            "preconditioned": self.preconditioner is not None,
            "variance_exponent": self.variance_exponent,
        }


@dataclass
class StepResult:
    next: np.ndarray
    accepted: bool
    log_alpha: float
    jump_norm: float


@dataclass(frozen=True)
class RecordPolicy:
    """Which coordinates to store per iteration (None = all, () = none)."""

    coords: Optional[tuple] = None
    jumps: bool = True

    def indices(self, d: int) -> np.ndarray:
        if self.coords is None:
            return np.arange(d, dtype=np.int64)
        idx = np.asarray(self.coords, dtype=np.int64)
        if np.any((idx < 0) | (idx >= d)):
            raise ValueError(f"record coordinates {self.coords} out of range for d={d}")
        return idx


NO_RECORD = RecordPolicy(coords=(), jumps=False)


@dataclass
class ChainTrace:
    """States after each iteration; row t is the state after iteration t+1.

    ``init`` holds the full starting point.  Rejections appear as repeated states.
    """

    states: np.ndarray
    coords: np.ndarray
    accepted: np.ndarray
    jump_norms: np.ndarray
    n_iters: int
    seed: int
    wall_clock_ns: int
    init: np.ndarray
    config: Optional[KernelConfig] = field(default=None, repr=False)

    def coordinate(self, j: int) -> np.ndarray:
        """Recorded path of coordinate j (without the starting value)."""
        hits = np.flatnonzero(self.coords == j)
        if hits.size == 0:
            raise KeyError(f"coordinate {j} was not recorded")
        return self.states[:, hits[0]]

    def path(self, j: int) -> np.ndarray:
        """Coordinate j including the starting value: length n_iters + 1."""
        return np.concatenate([[self.init[j]], self.coordinate(j)])

    def summary(self) -> dict:
        return {
            "config": None if self.config is None else self.config.to_dict(),
            "n_iters": self.n_iters,
            "seed": self.seed,
            "acceptance_rate": float(np.mean(self.accepted)),
            "wall_clock_ns": self.wall_clock_ns,
        }

    def to_csv(self, path) -> None:
        cols = ["iter", "accepted", "jump_norm"] + [f"x{j + 1}" for j in self.coords]
        data = np.column_stack(
            [np.arange(1, self.n_iters + 1), self.accepted.astype(int), self.jump_norms, self.states]
        )
        fmt = ["%d", "%d", "%.17g"] + ["%.17g"] * len(self.coords)
        np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt=fmt)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)


def split_seed(master_seed: int, *keys: int) -> int:
    """Counter-based child seed: SeedSequence(master, spawn_key=keys) -> one uint64."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_half_normal(scale: float, rng: np.random.Generator) -> float:
    """|z| * scale with z standard normal (zero-truncated centred normal)."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    return abs(rng.standard_normal()) * scale


def _sign_bits(d: int, rng: np.random.Generator) -> np.ndarray:
    n_words = -(-d // _BITS_PER_DRAW)
    words = (rng.random(n_words) * _TWO53).astype(np.uint64)
    bits = (words[:, None] >> np.arange(_BITS_PER_DRAW, dtype=np.uint64)) & np.uint64(1)
    return bits.ravel()[:d].astype(bool)


def propose(config: KernelConfig, x, rng: np.random.Generator):
    """Return (y, mask); mask[i] is False where coordinate i was left unchanged."""
    x = np.asarray(x, dtype=float)
    if x.shape != (config.d,):
        raise ValueError(f"state has shape {x.shape}, kernel dimension is {config.d}")
    steps = config.steps
    if config.kind == TMCMC:
        e = sample_half_normal(1.0, rng)
        signs = np.where(_sign_bits(config.d, rng), 1.0, -1.0)
        y = x + signs * (e * steps)
    else:
        y = x + steps * rng.standard_normal(config.d)
    if config.gibbs_c < 1.0:
        mask = rng.random(config.d) < config.gibbs_c
        y = np.where(mask, y, x)
    else:
        mask = np.ones(config.d, dtype=bool)
    return y, mask


def step(model: tg.TargetModel, config: KernelConfig, x, rng: np.random.Generator) -> StepResult:
    x = np.asarray(x, dtype=float)
    y, _ = propose(config, x, rng)
    lr = tg.log_ratio(model, x, y)
    u = rng.random()
    if u < math.exp(min(0.0, lr)):
        return StepResult(y, True, lr, float(np.linalg.norm(y - x)))
    return StepResult(x.copy(), False, lr, 0.0)


def _compiled_args(model: tg.TargetModel):
    """Numeric description of a builtin model for the compiled loop, or None."""
    empty = np.ones(1)
    if isinstance(model, (tg.IidProduct, tg.ScaledProduct)):
        m = model.marginal
        if m.code == tg.MARGINAL_CUSTOM:
            return None
        thetas = model.thetas if isinstance(model, tg.ScaledProduct) else np.ones(model.d)
        return (0, m.code, float(m.param), thetas, empty, 0, 0.0)
    if isinstance(model, tg.GaussianMeasure):
        if model.psi.code == tg.PSI_CUSTOM:
            return None
        return (1, 0, 0.0, empty, model.lambdas, model.psi.code, float(model.psi.param))
    return None


def run_chain(
    model: tg.TargetModel,
    config: KernelConfig,
    init,
    n_iters: int,
    seed: int,
    record: RecordPolicy = RecordPolicy(),
    backend: str = "auto",
) -> ChainTrace:
    """Run one chain of ``n_iters`` proposals, deterministic in (seed, config, model, init).

    ``backend`` is "compiled" (builtin models only), "python", or "auto".
    Both backends consume the generator identically.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    if config.d != model.d:
        raise ValueError(f"kernel dimension {config.d} != model dimension {model.d}")
    x0 = np.array(init, dtype=float)
    tg.log_density(model, x0)  # validates shape / NaN
    idx = record.indices(model.d)
    states = np.empty((n_iters, idx.size))
    accepted = np.zeros(n_iters, dtype=bool)
    jumps = np.zeros(n_iters)
    rng = np.random.default_rng(seed)

    args = _compiled_args(model) if backend in ("auto", "compiled") else None
    if backend == "compiled" and args is None:
        raise ValueError("model has no compiled representation; use backend='python'")

    if args is not None:
        from ._loops import run_loop

        x = x0.copy()
        kind = 0 if config.kind == TMCMC else 1
        steps = config.steps
        t0 = time.perf_counter_ns()
        run_loop(rng, x, n_iters, kind, steps, float(config.gibbs_c), *args,
                 idx, states, accepted, jumps, record.jumps)
        wall = time.perf_counter_ns() - t0
    else:
        x = x0.copy()
        t0 = time.perf_counter_ns()
        for t in range(n_iters):
            res = step(model, config, x, rng)
            x = res.next
            accepted[t] = res.accepted
            if record.jumps:
                jumps[t] = res.jump_norm
            states[t] = x[idx]
        wall = time.perf_counter_ns() - t0
    return ChainTrace(states, idx, accepted, jumps, n_iters, int(seed), int(wall), x0, config)


def run_ensemble(
    model: tg.TargetModel,
    config: KernelConfig,
    inits: np.ndarray,
    n_iters: int,
    seeds: Sequence[int],
    record: RecordPolicy = RecordPolicy(coords=(0,)),
    threads: int = 1,
) -> list[ChainTrace]:
    """Independent chains, one per seed; ``inits`` is (d,) (shared) or (n_chains, d).

    Results are ordered by chain index regardless of completion order.
    """
    inits = np.asarray(inits, dtype=float)
    if inits.ndim == 1:
        inits = np.broadcast_to(inits, (len(seeds), inits.size))
    if inits.shape[0] != len(seeds):
        raise ValueError("need one initial state per seed")

    def one(j):
        return run_chain(model, config, inits[j], n_iters, seeds[j], record)

    if threads <= 1:
        return [one(j) for j in range(len(seeds))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(len(seeds))))
