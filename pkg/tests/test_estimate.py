import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bns_volume.estimate import (FailureReason, empirical_moments, estimate, estimating_function_residuals,
                                 solve)
from bns_volume.model import GridConstants, MomentSet, theoretical_moments
from bns_volume.simulate import PathSample, RngStream, simulate_gamma_ou

from conftest import random_params


def test_constant_sample_moments():
    s = PathSample(x=np.zeros(5), tau=np.full(6, 2.5), delta=0.004)
    m = empirical_moments(s)
    assert np.array_equal(m.xi, [2.5, 6.25, 6.25, 0, 0, 0, 0])
    assert np.array_equal(m.upsilon, [2.5, 6.25])
    r = estimate(s)
    assert not r.valid and r.failure_reason is FailureReason.DEGENERATE_VOLUME_VARIANCE
    assert np.array_equal(r.theta, np.zeros(7))
    with pytest.raises(ValueError):
        r.params


def test_two_point_sample():
    m = empirical_moments(PathSample(x=np.array([0.1, 0.2]), tau=np.array([1.0, 2.0, 3.0]), delta=0.004))
    assert m.xi[0] == 2.5 and m.xi[1] == 4.0 and m.upsilon[0] == 1.5
    assert m.xi[4] == pytest.approx(0.25, rel=1e-15)
    assert m.n == 2


def test_too_short_sample():
    with pytest.raises(ValueError):
        empirical_moments(PathSample(x=np.array([0.1]), tau=np.array([1.0, 2.0]), delta=0.004))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_plug_in_exactness(seed):
    p = random_params(np.random.default_rng(seed))
    g = GridConstants.for_params(p.lam)
    r = solve(theoretical_moments(p, g), g.delta)
    assert r.valid
    assert np.max(np.abs(r.theta / p.as_vector() - 1)) < 1e-8


def test_plug_in_reference(theta0, grid0):
    r = solve(theoretical_moments(theta0, grid0), grid0.delta)
    assert np.allclose(r.theta, theta0.as_vector(), rtol=1e-9, atol=0)
    assert r.zeta == pytest.approx(theta0.zeta, rel=1e-12)


def test_negative_autocovariance_fails():
    tau = np.tile([1.0, 3.0], 50)
    s = PathSample(x=np.full(99, 0.001), tau=tau, delta=0.004)
    assert estimate(s).failure_reason is FailureReason.NONPOSITIVE_AUTOCOVARIANCE


def test_explosive_volume_fails():
    tau = np.arange(1, 102, dtype=float)**2
    s = PathSample(x=np.full(100, 0.001), tau=tau, delta=0.004)
    assert estimate(s).failure_reason is FailureReason.GAMMA_OUT_OF_RANGE


def test_negative_sigma_square_fails(theta0, grid0):
    m = theoretical_moments(theta0, grid0)
    xi = m.xi.copy()
    xi[6] = 0.0  # second moment of returns below the squared mean
    r = solve(MomentSet(xi, m.upsilon), grid0.delta)
    assert not r.valid and r.failure_reason is FailureReason.NONPOSITIVE_SIGMA_SQUARE


def test_report_json_keys(theta0):
    r = estimate(simulate_gamma_ou(theta0, 2500, 1 / 250, RngStream(7)))
    d = r.as_dict()
    assert list(d) == ["nu", "alpha", "lambda", "mu", "beta", "sigma", "rho", "zeta", "eta", "valid",
                       "failure_reason", "n"]
    assert d["valid"] is True and d["failure_reason"] == "None" and d["n"] == 2500


def test_estimating_equations_vanish_at_estimate(theta0):
    for k in range(5):
        s = simulate_gamma_ou(theta0, 2500, 1 / 250, RngStream(30, k))
        r = estimate(s)
        assert r.valid
        h = estimating_function_residuals(s, r.params, GridConstants.for_params(r.params.lam))
        scale = np.abs(np.column_stack([s.tau[1:], s.tau[1:] * s.tau[:-1], s.tau[1:]**2, s.x, s.x * s.tau[:-1],
                                        s.x * s.tau[1:], s.x**2])).mean(axis=0)
        assert np.all(np.abs(h.mean(axis=0)) < 1e-8 * scale)


def test_scaling_equivariance(theta0):
    s = simulate_gamma_ou(theta0, 2500, 1 / 250, RngStream(12))
    c = 3.7
    a = estimate(s)
    b = estimate(PathSample(x=s.x, tau=c * s.tau, delta=s.delta))
    assert b.zeta == pytest.approx(c * a.zeta, rel=1e-10)
    assert b.eta == pytest.approx(c**2 * a.eta, rel=1e-10)
    ta, tb = a.params, b.params
    assert tb.sigma == pytest.approx(ta.sigma / math.sqrt(c), rel=1e-10)
    assert tb.lam == pytest.approx(ta.lam, rel=1e-10)
    assert tb.mu == pytest.approx(ta.mu, rel=1e-8)
    assert tb.beta == pytest.approx(ta.beta / c, rel=1e-8)
    assert tb.rho == pytest.approx(ta.rho / c, rel=1e-8)


def test_estimate_is_deterministic(theta0):
    s = simulate_gamma_ou(theta0, 1000, 1 / 250, RngStream(13))
    assert np.array_equal(estimate(s).theta, estimate(s).theta)


def test_admissible_event_has_high_probability(theta0):
    valid = [estimate(simulate_gamma_ou(theta0, 2500, 1 / 250, RngStream(40, k))).valid for k in range(200)]
    assert np.mean(valid) >= 0.99


def test_moments_converge_on_long_path(theta0, grid0):
    s = simulate_gamma_ou(theta0, 200_000, 1 / 250, RngStream(14))
    m = empirical_moments(s)
    lim = theoretical_moments(theta0, grid0).xi
    x, cur, prev = s.x, s.tau[1:], s.tau[:-1]
    terms = np.column_stack([cur, cur * prev, cur**2, x, x * prev, x * cur, x * x])
    batch_means = terms.reshape(100, -1, 7).mean(axis=1)
    se = batch_means.std(axis=0, ddof=1) / 10
    assert np.all(np.abs(m.xi - lim) < 5 * se)
    assert m.xi[0] - m.upsilon[0] == pytest.approx((s.tau[-1] - s.tau[0]) / s.n, abs=1e-12)
