"""Target-density families: iid products, scaled products, Gaussian-measure targets.

Log-densities are unnormalized wherever a normalizing constant is unknown;
only differences of log-densities ever feed an acceptance decision.
"""
from __future__ import annotations

import configparser
import math
import re
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate, special, stats

# Integer codes shared with the compiled chain loop (see _loops.py).
MARGINAL_CUSTOM = -1
MARGINAL_STD_NORMAL = 0
MARGINAL_NORMAL = 1
MARGINAL_LOGISTIC = 2
MARGINAL_STUDENT_T = 3
MARGINAL_LAPLACE = 4

PSI_CUSTOM = -1
PSI_ZERO = 0
PSI_QUADRATIC = 1


@dataclass(frozen=True)
class MarginalDensity:
    """One-dimensional density f, given through log f and (log f)'.

    ``cdf`` and ``sample`` are optional; they are needed for K-S diagnostics
    and for exact (stationary) chain initialisation respectively.
    """

    name: str
    log_f: Callable[[np.ndarray], np.ndarray]
    dlog_f: Callable[[np.ndarray], np.ndarray]
    cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sample: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    code: int = MARGINAL_CUSTOM
    param: float = 0.0


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def std_normal() -> MarginalDensity:
    return MarginalDensity(
        name="std-normal",
        log_f=lambda x: -_HALF_LOG_2PI - 0.5 * np.square(x),
        dlog_f=lambda x: -np.asarray(x, dtype=float),
        cdf=special.ndtr,
        sample=lambda rng, n: rng.standard_normal(n),
        code=MARGINAL_STD_NORMAL,
    )


def normal(sigma: float) -> MarginalDensity:
    if not sigma > 0:
        raise ValueError(f"normal marginal needs sigma > 0, got {sigma}")
    log_sigma = math.log(sigma)
    return MarginalDensity(
        name=f"normal({sigma:g})",
        log_f=lambda x: -_HALF_LOG_2PI - log_sigma - 0.5 * np.square(np.asarray(x) / sigma),
        dlog_f=lambda x: -np.asarray(x, dtype=float) / sigma**2,
        cdf=lambda x: special.ndtr(np.asarray(x) / sigma),
        sample=lambda rng, n: sigma * rng.standard_normal(n),
        code=MARGINAL_NORMAL,
        param=float(sigma),
    )


def logistic() -> MarginalDensity:
    # log f(x) = -|x| - 2 log(1 + e^{-|x|}), written to avoid overflow
    def log_f(x):
        a = np.abs(x)
        return -a - 2.0 * np.log1p(np.exp(-a))

    return MarginalDensity(
        name="logistic",
        log_f=log_f,
        dlog_f=lambda x: -np.tanh(np.asarray(x, dtype=float) / 2.0),
        cdf=special.expit,
        sample=lambda rng, n: rng.logistic(size=n),
        code=MARGINAL_LOGISTIC,
    )


def student_t(nu: float) -> MarginalDensity:
    if not nu > 0:
        raise ValueError(f"student-t marginal needs nu > 0, got {nu}")
    log_norm = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
    return MarginalDensity(
        name=f"student-t({nu:g})",
        log_f=lambda x: log_norm - (nu + 1) / 2 * np.log1p(np.square(x) / nu),
        dlog_f=lambda x: -(nu + 1) * np.asarray(x, dtype=float) / (nu + np.square(x)),
        cdf=lambda x: stats.t.cdf(x, nu),
        sample=lambda rng, n: rng.standard_t(nu, size=n),
        code=MARGINAL_STUDENT_T,
        param=float(nu),
    )


def laplace() -> MarginalDensity:
    """Double exponential. Usable for sampling; excluded from the scaling theory (kink at 0)."""
    return MarginalDensity(
        name="laplace",
        log_f=lambda x: -math.log(2.0) - np.abs(x),
        dlog_f=lambda x: -np.sign(x).astype(float),
        cdf=lambda x: stats.laplace.cdf(x),
        sample=lambda rng, n: rng.laplace(size=n),
        code=MARGINAL_LAPLACE,
    )


_MARGINAL_RE = re.compile(r"^\s*([a-z\-]+)\s*(?:\(\s*([0-9.eE+\-]+)\s*\))?\s*$")


def marginal_from_name(spec: str) -> MarginalDensity:
    """Parse ``std-normal``, ``normal(2)``, ``logistic``, ``student-t(10)`` or ``laplace``."""
    m = _MARGINAL_RE.match(spec.lower())
    if not m:
        raise ValueError(f"cannot parse marginal {spec!r}")
    name, arg = m.group(1), m.group(2)
    if name == "std-normal" and arg is None:
        return std_normal()
    if name == "normal" and arg is not None:
        return normal(float(arg))
    if name == "logistic" and arg is None:
        return logistic()
    if name == "student-t" and arg is not None:
        return student_t(float(arg))
    if name == "laplace" and arg is None:
        return laplace()
    raise ValueError(f"unknown marginal {spec!r}")


@dataclass(frozen=True)
class ThetaSchedule:
    """Scaling vector theta(d) for the scaled-product family.

    The first ``k`` components have 1/theta_i^2 = K_i / d^lambda_i.  The
    remaining d - k components fall into m classes; class i holds
    ``r_counts(i, d)`` components with 1/theta^2 = K_{k+i} / d^gamma_i.
    Classes are 1-indexed in ``r_counts``.
    """

    k: int
    lambdas_exp: Sequence[float]
    gammas: Sequence[float]
    Ks: Sequence[float]
    r_counts: Callable[[int, int], int]
    alpha: float = 1.0

    def __post_init__(self):
        if self.k < 0 or len(self.lambdas_exp) != self.k:
            raise ValueError("lambdas_exp must have exactly k entries")
        if len(self.Ks) != self.k + len(self.gammas):
            raise ValueError("Ks must have k + m entries")
        if any(K <= 0 for K in self.Ks):
            raise ValueError("all K_i must be positive")
        if any(np.diff(self.gammas) > 0) or any(np.diff(self.lambdas_exp) > 0):
            raise ValueError("gammas and lambdas_exp must be non-increasing")

    @property
    def m(self) -> int:
        return len(self.gammas)

    def counts(self, d: int) -> list[int]:
        r = [int(self.r_counts(i, d)) for i in range(1, self.m + 1)]
        if any(ri < 1 for ri in r) or self.k + sum(r) != d:
            raise ValueError(f"r_counts at d={d} give {r}; need r(i,d) >= 1 and k + sum r = d")
        return r

    def thetas(self, d: int) -> np.ndarray:
        """theta_1(d), ..., theta_d(d): k specials, one of each class, then the repeats."""
        r = self.counts(d)
        special_ = [math.sqrt(d**lam / K) for lam, K in zip(self.lambdas_exp, self.Ks[: self.k])]
        cls = [math.sqrt(d**g / K) for g, K in zip(self.gammas, self.Ks[self.k :])]
        out = special_ + cls
        for th, ri in zip(cls, r):
            out.extend([th] * (ri - 1))
        return np.asarray(out, dtype=float)

    def boundedness_ratios(self, d: int) -> np.ndarray:
        """d^{gamma_i} r(i,d) / d^alpha for each class i."""
        r = self.counts(d)
        return np.array([d**g * ri / d**self.alpha for g, ri in zip(self.gammas, r)])

    def check_bounded(self, d_grid: Sequence[int], max_slope: float = 0.05) -> None:
        """Numerical stand-in for the limit conditions on a geometric grid of d.

        Raises ValueError if any class ratio d^gamma r / d^alpha (or d^lambda_1 / d^alpha)
        grows with log-log slope above ``max_slope`` between the last two grid points.
        """
        grid = sorted(set(int(d) for d in d_grid))
        if self.k and self.lambdas_exp[0] > self.alpha + 1e-12:
            raise ValueError(f"d^lambda_1 / d^alpha unbounded: lambda_1={self.lambdas_exp[0]} > alpha={self.alpha}")
        if len(grid) < 2:
            return
        lo, hi = grid[-2], grid[-1]
        a, b = self.boundedness_ratios(lo), self.boundedness_ratios(hi)
        slopes = (np.log(b) - np.log(a)) / (math.log(hi) - math.log(lo))
        if np.any(slopes > max_slope):
            raise ValueError(f"schedule ratios grow with d (log-log slopes {slopes}) on grid {grid}")


@dataclass(frozen=True)
class PsiFunctional:
    """Change of measure Psi relative to the Gaussian reference; density ~ exp(-Psi)."""

    name: str
    psi: Callable[[np.ndarray], float]
    grad_psi: Callable[[np.ndarray], np.ndarray]
    code: int = PSI_CUSTOM
    param: float = 0.0


def psi_zero() -> PsiFunctional:
    return PsiFunctional("zero", lambda x: 0.0, lambda x: np.zeros_like(x, dtype=float), PSI_ZERO)


def quadratic_perturbation(eps: float) -> PsiFunctional:
    """Psi(x) = eps * sum_j x_j^2 / (1 + x_j^2); bounded below by 0 for eps >= 0."""

    def psi(x):
        x2 = np.square(x)
        return float(eps * np.sum(x2 / (1.0 + x2)))

    def grad(x):
        x = np.asarray(x, dtype=float)
        return eps * 2.0 * x / np.square(1.0 + x * x)

    return PsiFunctional(f"quadratic-perturbation({eps:g})", psi, grad, PSI_QUADRATIC, float(eps))


def psi_from_name(spec: str) -> PsiFunctional:
    s = spec.strip().lower()
    if s == "zero":
        return psi_zero()
    m = re.match(r"^quadratic-perturbation\(\s*([0-9.eE+\-]+)\s*\)$", s)
    if m:
        return quadratic_perturbation(float(m.group(1)))
    raise ValueError(f"unknown psi {spec!r}")


@dataclass(frozen=True)
class IidProduct:
    marginal: MarginalDensity
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")

    def _log_density(self, x):
        return float(np.sum(self.marginal.log_f(x)))

    def _grad(self, x):
        return np.asarray(self.marginal.dlog_f(x), dtype=float)


@dataclass(frozen=True, eq=False)
class ScaledProduct:
    marginal: MarginalDensity
    theta_schedule: ThetaSchedule
    d: int

    @cached_property
    def thetas(self) -> np.ndarray:
        th = self.theta_schedule.thetas(self.d)
        if np.any(th <= 0):
            raise ValueError("theta_j(d) must be positive")
        return th

    def _log_density(self, x):
        th = self.thetas
        return float(np.sum(np.log(th) + self.marginal.log_f(th * x)))

    def _grad(self, x):
        th = self.thetas
        return th * np.asarray(self.marginal.dlog_f(th * x), dtype=float)


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """exp(-Psi(x) - 1/2 sum_j x_j^2 / lambda_j^2) in the eigenbasis of the covariance."""

    lambdas: np.ndarray
    psi: PsiFunctional = field(default_factory=psi_zero)

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("lambdas must be a non-empty 1-d sequence")
        if np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise ValueError("lambdas must be strictly positive and non-increasing")
        object.__setattr__(self, "lambdas", lam)

    @property
    def d(self) -> int:
        return self.lambdas.size

    def _log_density(self, x):
        return -self.psi.psi(x) - 0.5 * float(np.sum(np.square(x / self.lambdas)))

    def _grad(self, x):
        return -np.asarray(self.psi.grad_psi(x), dtype=float) - x / self.lambdas**2


TargetModel = Union[IidProduct, ScaledProduct, GaussianMeasure]


def power_lambdas(d: int, kappa: float = 1.0) -> np.ndarray:
    """Default eigenvalue square roots lambda_j = j^-kappa."""
    return np.arange(1, d + 1, dtype=float) ** (-kappa)


def _check_state(model, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.d,):
        raise ValueError(f"state has shape {x.shape}, model dimension is {model.d}")
    if np.isnan(x).any():
        raise ValueError("state contains NaN")
    return x


def log_density(model: TargetModel, x) -> float:
    return model._log_density(_check_state(model, x))


def log_ratio(model: TargetModel, x, y) -> float:
    """log pi(y) - log pi(x)."""
    return log_density(model, y) - log_density(model, x)


def grad_log_density(model: TargetModel, x) -> np.ndarray:
    x = _check_state(model, x)
    if isinstance(model, (IidProduct, ScaledProduct)) and model.marginal.code == MARGINAL_LAPLACE:
        if np.any(x == 0.0):
            raise ValueError("laplace marginal is not differentiable at 0")
    g = model._grad(x)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient is not finite at this point")
    return g


def information_constant(marginal: MarginalDensity, tol: float = 1e-8) -> float:
    """I = E_f[(log f)'(X)^2] by adaptive quadrature on x = tan(t)."""

    def integrand(t):
        x = math.tan(t)
        lf = float(marginal.log_f(x))
        if lf == -math.inf:
            return 0.0
        return float(marginal.dlog_f(x)) ** 2 * math.exp(lf) / math.cos(t) ** 2

    h = math.pi / 2
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            # split at 0 so kinks there (laplace) sit on a breakpoint
            left, el = integrate.quad(integrand, -h, 0.0, epsabs=tol, epsrel=1e-10, limit=500)
            right, er = integrate.quad(integrand, 0.0, h, epsabs=tol, epsrel=1e-10, limit=500)
        except integrate.IntegrationWarning as exc:
            raise ArithmeticError(f"information integral for {marginal.name} did not converge: {exc}") from exc
    value = left + right
    if not math.isfinite(value) or value <= 0:
        raise ArithmeticError(f"information integral for {marginal.name} is not a positive finite number")
    return value


def xi_constant(schedule: ThetaSchedule, d: int) -> float:
    """Finite-d aggregate scaling xi_d = sqrt(sum_i d^gamma_i r(i,d) / (K_{k+i} d^alpha))."""
    grid = [g for g in (10**p for p in range(2, 12)) if g < d] + [d]
    schedule.check_bounded(grid)
    r = schedule.counts(d)
    Ks = schedule.Ks[schedule.k :]
    total = sum(d**g * ri / (K * d**schedule.alpha) for g, ri, K in zip(schedule.gammas, r, Ks))
    return math.sqrt(total)


def exact_sample(model: TargetModel, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Independent draws from the target (shape (d,) or (size, d))."""
    n = 1 if size is None else size
    if isinstance(model, (IidProduct, ScaledProduct)):
        if model.marginal.sample is None:
            raise ValueError(f"marginal {model.marginal.name} has no sampler")
        u = np.asarray(model.marginal.sample(rng, n * model.d), dtype=float).reshape(n, model.d)
        if isinstance(model, ScaledProduct):
            u = u / model.thetas
    elif isinstance(model, GaussianMeasure):
        if model.psi.code != PSI_ZERO:
            raise ValueError("exact sampling only available for GaussianMeasure with Psi = 0")
        u = rng.standard_normal((n, model.d)) * model.lambdas
    else:
        raise TypeError(f"unsupported model {type(model).__name__}")
    return u[0] if size is None else u


def first_marginal_cdf(model: TargetModel) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of coordinate 1 under the target, for the K-S diagnostics."""
    if isinstance(model, IidProduct):
        if model.marginal.cdf is None:
            raise ValueError(f"marginal {model.marginal.name} has no cdf")
        return model.marginal.cdf
    if isinstance(model, ScaledProduct):
        th = model.thetas[0]
        return lambda x: model.marginal.cdf(th * np.asarray(x))
    if isinstance(model, GaussianMeasure) and model.psi.code == PSI_ZERO:
        lam = model.lambdas[0]
        return lambda x: special.ndtr(np.asarray(x) / lam)
    raise ValueError("first-coordinate cdf unavailable for this model")


def model_from_mapping(cfg: dict) -> TargetModel:
    """Build a model from flat key-value settings.

    Keys: ``family`` (iid | gaussian-measure), ``d``, ``marginal`` (iid),
    ``kappa`` (gaussian-measure, default 1), ``psi`` (default zero).
    The scaled-product family needs an r(i,d) function and is built in code.
    """
    family = str(cfg.get("family", "iid")).strip().lower()
    d = int(cfg["d"])
    if family == "iid":
        return IidProduct(marginal_from_name(str(cfg.get("marginal", "std-normal"))), d)
    if family in ("gaussian-measure", "gaussian", "dependent"):
        kappa = float(cfg.get("kappa", 1.0))
        return GaussianMeasure(power_lambdas(d, kappa), psi_from_name(str(cfg.get("psi", "zero"))))
    raise ValueError(f"unknown family {family!r}")


def load_model_config(path) -> TargetModel:
    """Read a ``[model]`` section from an INI-style key-value file."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    if not parser.has_section("model"):
        raise ValueError(f"{path}: missing [model] section")
    return model_from_mapping(dict(parser["model"]))
