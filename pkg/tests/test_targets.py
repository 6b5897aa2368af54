import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tmcmc import targets as tg

LOG_2PI = math.log(2 * math.pi)


def test_log_density_examples():
    assert tg.log_density(tg.IidProduct(tg.std_normal(), 2), [0.0, 0.0]) == pytest.approx(-LOG_2PI, abs=1e-14)
    assert tg.log_density(tg.GaussianMeasure([1.0, 1.0]), [0.0, 0.0]) == 0.0
    assert tg.log_density(tg.IidProduct(tg.std_normal(), 1), [1.0]) == pytest.approx(-0.5 * LOG_2PI - 0.5)


def test_log_density_errors():
    m = tg.IidProduct(tg.std_normal(), 3)
    with pytest.raises(ValueError):
        tg.log_density(m, [0.0, 0.0])
    with pytest.raises(ValueError):
        tg.log_density(m, [0.0, np.nan, 1.0])


def test_log_ratio_examples():
    m1 = tg.IidProduct(tg.std_normal(), 1)
    assert tg.log_ratio(m1, [0.0], [1.0]) == pytest.approx(-0.5)
    assert tg.log_ratio(tg.GaussianMeasure([2.0]), [0.0], [2.0]) == pytest.approx(-0.5)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_log_ratio_identity_move(xs):
    for m in (tg.IidProduct(tg.logistic(), len(xs)), tg.GaussianMeasure(tg.power_lambdas(len(xs)),
                                                                         tg.quadratic_perturbation(0.3))):
        assert tg.log_ratio(m, xs, xs) == 0.0


def test_grad_closed_forms():
    x = np.array([-1.5, 0.3, 2.0])
    np.testing.assert_allclose(tg.grad_log_density(tg.IidProduct(tg.std_normal(), 3), x), -x)
    lam = np.array([1.0, 0.5, 0.25])
    np.testing.assert_allclose(tg.grad_log_density(tg.GaussianMeasure(lam), x), -x / lam**2)


MARGINALS = [tg.logistic(), tg.student_t(10), tg.student_t(3), tg.normal(0.7), tg.laplace()]


@pytest.mark.parametrize("marg", MARGINALS, ids=lambda m: m.name)
def test_grad_matches_finite_differences(marg):
    rng = np.random.default_rng(11)
    d = 6
    m = tg.IidProduct(marg, d)
    h = 1e-6
    for _ in range(5):
        x = rng.normal(0, 2, d)
        g = tg.grad_log_density(m, x)
        fd = np.array([(tg.log_density(m, x + h * e) - tg.log_density(m, x - h * e)) / (2 * h) for e in np.eye(d)])
        np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-7)


def test_grad_finite_differences_gaussian_measure():
    m = tg.GaussianMeasure(tg.power_lambdas(5), tg.quadratic_perturbation(0.8))
    x = np.random.default_rng(3).normal(size=5)
    h = 1e-6
    fd = np.array([(tg.log_density(m, x + h * e) - tg.log_density(m, x - h * e)) / (2 * h) for e in np.eye(5)])
    np.testing.assert_allclose(tg.grad_log_density(m, x), fd, rtol=1e-6, atol=1e-6)


def test_grad_laplace_kink_raises():
    with pytest.raises(ValueError):
        tg.grad_log_density(tg.IidProduct(tg.laplace(), 2), [0.0, 1.0])


@pytest.mark.parametrize("sigma", [0.3, 1.0, 2.0, 7.5])
def test_information_normal(sigma):
    assert tg.information_constant(tg.normal(sigma)) * sigma**2 == pytest.approx(1.0, abs=1e-8)


def test_information_std_normal_is_one():
    assert tg.information_constant(tg.std_normal()) == pytest.approx(1.0, abs=1e-10)


def test_information_student_t_monte_carlo():
    # 10^7 draws; (log f)'(x) = -(nu+1) x / (nu + x^2)
    rng = np.random.default_rng(2024)
    nu = 10.0
    vals = []
    for _ in range(10):
        x = rng.standard_t(nu, 10**6)
        vals.append(((nu + 1) * x / (nu + x * x)) ** 2)
    v = np.concatenate(vals)
    mc, se = v.mean(), v.std() / math.sqrt(v.size)
    got = tg.information_constant(tg.student_t(nu))
    assert abs(got - mc) < 3 * se
    assert got == pytest.approx((nu + 1) / (nu + 3), rel=1e-8)


def test_information_divergent_raises():
    heavy = tg.MarginalDensity("improper", log_f=lambda x: 0.0 * x, dlog_f=lambda x: 1.0 + 0.0 * x)
    with pytest.raises(ArithmeticError):
        tg.information_constant(heavy)


def _one_class(K):
    return tg.ThetaSchedule(0, [], [0.0], [K], lambda i, d: d, 1.0)


@pytest.mark.parametrize("d", [10, 1000, 10**5])
def test_xi_reduces_to_iid(d):
    assert tg.xi_constant(_one_class(1.0), d) == pytest.approx(1.0)
    assert tg.xi_constant(_one_class(4.0), d) == pytest.approx(0.5)


def test_xi_two_class_against_direct_sum():
    sched = tg.ThetaSchedule(0, [], [1.0, 0.0], [3.0, 1.0], lambda i, d: 5 if i == 1 else d - 5, 1.0)
    d_big = 10**6
    th = sched.thetas(d_big)
    direct = math.sqrt(float(np.sum(th**2)) / d_big**sched.alpha)
    assert tg.xi_constant(sched, 10**4) == pytest.approx(direct, rel=1e-2)


def test_xi_unbounded_schedule_raises():
    sched = tg.ThetaSchedule(0, [], [1.0, 0.0], [1.0, 1.0],
                             lambda i, d: int(math.isqrt(d)) if i == 1 else d - int(math.isqrt(d)), 1.0)
    with pytest.raises(ValueError):
        tg.xi_constant(sched, 10**6)


def test_scaled_product_exact_sample_variance():
    sched = tg.ThetaSchedule(1, [0.5], [0.0], [2.0, 1.0], lambda i, d: d - 1, 1.0)
    m = tg.ScaledProduct(tg.std_normal(), sched, 50)
    draws = tg.exact_sample(m, np.random.default_rng(0), 20000)
    np.testing.assert_allclose(draws[:, 0].var(), 1 / m.thetas[0] ** 2, rtol=0.05)


def test_gaussian_measure_validation():
    with pytest.raises(ValueError):
        tg.GaussianMeasure([1.0, 2.0])
    with pytest.raises(ValueError):
        tg.GaussianMeasure([1.0, -0.5])


def test_config_file_roundtrip(tmp_path):
    p = tmp_path / "m.ini"
    p.write_text("[model]\nfamily = gaussian-measure\nd = 4\nkappa = 1.5\npsi = quadratic-perturbation(0.2)\n")
    m = tg.load_model_config(p)
    assert isinstance(m, tg.GaussianMeasure) and m.d == 4
    np.testing.assert_allclose(m.lambdas, np.arange(1, 5) ** -1.5)
    p.write_text("[model]\nfamily = iid\nd = 3\nmarginal = student-t(5)\n")
    assert tg.load_model_config(p).marginal.name.startswith("student-t")
    p.write_text("[other]\nd = 3\n")
    with pytest.raises(ValueError):
        tg.load_model_config(p)
