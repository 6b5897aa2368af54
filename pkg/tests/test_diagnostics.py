import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from tmcmc import diagnostics as dg
from tmcmc import kernels as kn
from tmcmc import targets as tg


def make_trace(values, accepted=None, jumps=None):
    v = np.asarray(values, dtype=float).reshape(-1, 1)
    n = v.shape[0]
    acc = np.ones(n, bool) if accepted is None else np.asarray(accepted, bool)
    jn = np.zeros(n) if jumps is None else np.asarray(jumps, float)
    return kn.ChainTrace(v, np.array([0]), acc, jn, n, 0, 0, np.zeros(1))


def ar1(phi, n, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / math.sqrt(1 - phi * phi)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


@pytest.fixture(scope="module")
def ar08():
    return ar1(0.8, 10**6, 1)


def test_acceptance_rate_examples():
    assert dg.acceptance_rate(make_trace(np.zeros(100))) == 1.0
    acc = np.r_[np.zeros(25, bool), np.ones(75, bool)]
    assert dg.acceptance_rate(make_trace(np.zeros(100), acc), 0.25) == 1.0
    assert dg.acceptance_rate(make_trace(np.zeros(100), acc), 0.0) == 0.75
    with pytest.raises(ValueError):
        dg.acceptance_rate(make_trace(np.zeros(10)), 1.0)


def test_acceptance_uses_only_post_burn_in_flags():
    rng = np.random.default_rng(0)
    acc = rng.random(1000) < 0.4
    tr = make_trace(np.zeros(1000), acc)
    perm = acc.copy()
    perm[250:] = rng.permutation(perm[250:])
    perm[:250] = ~perm[:250]
    assert dg.acceptance_rate(tr) == dg.acceptance_rate(make_trace(np.zeros(1000), perm)) == acc[250:].mean()


def test_ajs_zero_and_all_accept_tmcmc():
    assert dg.average_jump_size(make_trace(np.zeros(50), np.zeros(50, bool))) == 0.0
    # flat target: every proposal accepted, jump norm = eps sqrt(d) = |z| ell
    d, ell, n = 400, 2.0, 20000
    flat = tg.MarginalDensity("flat", lambda x: 0.0 * np.asarray(x), lambda x: 0.0 * np.asarray(x))
    tr = kn.run_chain(tg.IidProduct(flat, d), kn.KernelConfig("tmcmc", ell, d), np.zeros(d), n, 3)
    assert tr.accepted.all()
    sd = ell * math.sqrt(1 - 2 / math.pi)
    assert abs(dg.average_jump_size(tr, 0.0) - ell * math.sqrt(2 / math.pi)) < 4 * sd / math.sqrt(n)


def test_autocorrelation_white_noise():
    n = 10**5
    rho = dg.autocorrelation(3.0 + np.random.default_rng(2).standard_normal(n), 100)
    assert rho[0] == 1.0
    assert np.mean(np.abs(rho[1:]) <= 4 / math.sqrt(n)) >= 0.95


def test_autocorrelation_ar1(ar08):
    rho = dg.autocorrelation(ar08, 10)
    np.testing.assert_allclose(rho, 0.8 ** np.arange(11), atol=0.01)


def test_autocorrelation_errors():
    with pytest.raises(ValueError):
        dg.autocorrelation(np.ones(50), 5)
    with pytest.raises(ValueError):
        dg.autocorrelation(np.arange(5.0), 5)


def test_iact_examples(ar08):
    white = np.random.default_rng(4).standard_normal(10**6)
    assert dg.iact(white) == pytest.approx(1.0, abs=0.05)
    geometric = 1 + 2 * sum(0.8**k for k in range(1, 26))
    assert geometric == pytest.approx(8.96, abs=0.01)
    assert dg.iact(ar08) == pytest.approx(geometric, abs=0.15)


def test_ipact_examples(ar08):
    white = np.random.default_rng(5).standard_normal(10**6)
    assert dg.ipact(white) == pytest.approx(1.0, abs=0.05)
    assert dg.ipact(ar08) == pytest.approx(2.6, abs=0.1)


def test_parzen_window():
    w = dg.parzen_weights(25)
    assert w.size == 25 and w[-1] == 0.0 and np.all(np.diff(w) <= 0)
    white = np.random.default_rng(6).standard_normal(10**5)
    assert dg.iact(white, window="parzen") == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValueError):
        dg.iact(white, window="bartlett-ish")


def test_durbin_levinson_ar2_oracle():
    # AR(2): pacf = (rho1, phi2, 0, 0...)
    phi1, phi2 = 0.5, 0.3
    rho1 = phi1 / (1 - phi2)
    rho = [1.0, rho1]
    for _ in range(8):
        rho.append(phi1 * rho[-1] + phi2 * rho[-2])
    pacf = dg.partial_autocorrelation(rho)
    np.testing.assert_allclose(pacf[:2], [rho1, phi2], atol=1e-12)
    np.testing.assert_allclose(pacf[2:], 0, atol=1e-12)


def test_durbin_levinson_breakdown():
    with pytest.raises(ArithmeticError):
        dg.partial_autocorrelation([1.0, 1.0, 1.0])


def test_ks_examples():
    assert dg.ks_statistic([0.25, 0.5, 0.75], lambda x: np.clip(x, 0, 1)) == pytest.approx(0.25)
    n = 40
    q = special.ndtri((np.arange(1, n + 1) - 0.5) / n)
    assert dg.ks_statistic(q, special.ndtr) == pytest.approx(1 / (2 * n), abs=1e-12)
    with pytest.raises(ValueError):
        dg.ks_statistic([], special.ndtr)


def test_ks_critical_value_oracle():
    rng = np.random.default_rng(8)
    below = sum(dg.ks_statistic(rng.standard_normal(100), special.ndtr) < 0.163 for _ in range(100))
    assert below >= 97


@given(st.lists(st.floats(-4, 4), min_size=1, max_size=60, unique=True))
def test_ks_matches_scipy_and_transform_invariance(xs):
    x = np.array(xs)
    d = dg.ks_statistic(x, special.ndtr)
    assert d == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-12)
    assert dg.ks_statistic(np.exp(x), lambda y: special.ndtr(np.log(y))) == pytest.approx(d, abs=1e-12)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=40), st.lists(st.floats(-3, 3), min_size=1, max_size=40))
def test_two_sample_matches_scipy(a, b):
    assert dg.ks_two_sample(a, b) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)


def test_average_ks_exact_draws_oracle():
    rng = np.random.default_rng(10)
    ens = [make_trace(rng.standard_normal(2000)) for _ in range(100)]
    assert dg.average_ks(ens, 0, special.ndtr, 0.0) == pytest.approx(0.0868, abs=0.01)


def test_average_ks_degenerate_and_permutation():
    ens = [make_trace(np.full(40, 1.5)) for _ in range(10)]
    assert dg.average_ks(ens, 0, lambda x: np.full_like(np.asarray(x, float), 0.5)) == pytest.approx(0.5)
    rng = np.random.default_rng(1)
    ens = [make_trace(rng.standard_normal(300)) for _ in range(20)]
    order = rng.permutation(20)
    assert dg.average_ks(ens, 0, special.ndtr) == dg.average_ks([ens[i] for i in order], 0, special.ndtr)


def test_average_ks_errors():
    with pytest.raises(ValueError):
        dg.average_ks([make_trace(np.zeros(10))], 0, special.ndtr)
    with pytest.raises(ValueError):
        dg.average_ks([make_trace(np.zeros(10)), make_trace(np.zeros(12))], 0, special.ndtr)


def test_diagnose_report_json(tmp_path):
    x = ar1(0.5, 5000, 3)
    tr = make_trace(x, jumps=np.abs(np.diff(np.r_[0, x])))
    rep = dg.diagnose(tr, window="parzen")
    assert rep.window == "parzen" and math.isnan(rep.avg_ks)
    text = rep.to_json(tmp_path / "r.json")
    assert '"iact"' in text and (tmp_path / "r.json").exists()
    assert rep.iact == pytest.approx(dg.iact(x[1250:], window="parzen"))
