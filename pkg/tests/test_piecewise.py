import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from jnbellman.errors import ParameterError, UnsupportedShapeError
from jnbellman.extremal import dyadic_base
from jnbellman.piecewise import (Const, DyadicStepFunction, PiecewiseFunction, Split, Staircase,
                                 bmo_norm_continuous, bmo_norm_dyadic, dyadic_digits,
                                 dyadic_worst_interval, function_from_dict, iter_dyadic, moments,
                                 sample_table)


def _quad_moments(f, lo, hi, breaks=()):
    pts = [b for b in breaks if lo < b < hi]
    kw = dict(points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-12)
    w = hi - lo
    m1 = quad(lambda t: float(f(t)), lo, hi, **kw)[0] / w
    m2 = quad(lambda t: float(f(t)) ** 2, lo, hi, **kw)[0] / w
    me = quad(lambda t: math.exp(float(f(t))), lo, hi, **kw)[0] / w
    return m1, m2, me


@pytest.mark.parametrize("a,b,gamma", [(1.0, -0.3, 0.4), (0.37, 0.2, -0.6), (0.8, 1.1, 0.9)])
def test_log_family_moments_against_quadrature(a, b, gamma):
    phi = PiecewiseFunction.log_family(a, b, gamma)
    for lo, hi in [(0.0, 1.0), (0.0, 0.2), (0.1, 0.9), (0.3, 0.5)]:
        m = moments(phi, lo, hi)
        q = _quad_moments(phi, lo, hi, breaks=(a,))
        assert m.mean == pytest.approx(q[0], rel=1e-9, abs=1e-11)
        assert m.second == pytest.approx(q[1], rel=1e-9, abs=1e-11)
        assert m.exp_mean == pytest.approx(q[2], rel=1e-8)


def test_log_family_closed_forms():
    a, b, g = 0.6, 0.25, 0.35
    m = moments(PiecewiseFunction.log_family(a, b, g))
    assert m.mean == pytest.approx(g * a + b, rel=1e-14)
    assert m.second == pytest.approx(2 * g * g * a + 2 * g * a * b + b * b, rel=1e-14)
    assert m.exp_mean == pytest.approx((1 - g + a * g) / (1 - g) * math.exp(b), rel=1e-14)


def test_exp_mean_infinite_for_steep_ramp():
    assert math.isinf(moments(PiecewiseFunction.log_family(0.5, 0.0, 1.0)).exp_mean)
    assert math.isfinite(moments(PiecewiseFunction.log_family(0.5, 0.0, -1.0)).exp_mean)


def test_piecewise_validation():
    from jnbellman.piecewise import Constant
    with pytest.raises(ParameterError):
        PiecewiseFunction((Constant(0.0, 0.5, 1.0),))
    with pytest.raises(ParameterError):
        PiecewiseFunction((Constant(0.0, 0.5, 1.0), Constant(0.6, 1.0, 0.0)))
    with pytest.raises(ParameterError):
        PiecewiseFunction.log_family(0.0, 1.0, 0.5)


def test_cumulative_matches_integrals():
    phi = PiecewiseFunction.log_family(0.7, -0.2, 0.5)
    t = np.linspace(0, 1, 37)
    f1, f2 = phi.cumulative(t)
    for ti, a, b in zip(t, f1, f2):
        if ti == 0:
            assert a == 0 and b == 0
            continue
        i1, i2, _ = phi.integrals(0.0, ti)
        assert a == pytest.approx(i1, abs=1e-14)
        assert b == pytest.approx(i2, abs=1e-14)


def test_continuous_norm_of_log_ramp():
    for g in (0.1, -0.45, 0.8):
        assert bmo_norm_continuous(PiecewiseFunction.log_family(0.6, 0.3, g)) == pytest.approx(abs(g), abs=1e-9)
    assert bmo_norm_continuous(PiecewiseFunction.constant(2.0)) == 0.0


def test_continuous_norm_two_constants():
    from jnbellman.piecewise import Constant
    phi = PiecewiseFunction((Constant(0.0, 0.3, 1.0), Constant(0.3, 1.0, -1.0)))
    # sup over windows straddling the jump is 1 (half/half split)
    assert bmo_norm_continuous(phi) == pytest.approx(1.0, abs=1e-6)


def test_dyadic_base_examples():
    eps = 0.6
    a = eps / math.sqrt(2)
    phi = dyadic_base(eps, 10)
    assert float(phi(0.75)) == pytest.approx(-a)
    for n in range(0, 15):
        m = phi.moments(0.0, 2.0 ** -n)
        assert m.mean == pytest.approx(a * n, abs=1e-12)
        assert m.second == pytest.approx(a * a * (n * n + 2), rel=1e-12)
    assert bmo_norm_dyadic(phi) == pytest.approx(eps, abs=1e-15)
    assert math.isinf(dyadic_base(1.0, 5).moments().exp_mean)


def test_staircase_exp_against_series():
    b, s = 0.1, 0.4
    series = sum(2.0 ** -(k + 1) * math.exp(b + k * s) for k in range(400))
    assert DyadicStepFunction(Staircase(b, s)).moments().exp_mean == pytest.approx(series, rel=1e-12)


def test_dyadic_moments_against_leaves(rng):
    leaves = rng.standard_normal(16)
    phi = DyadicStepFunction.from_leaves(leaves)
    for lo, hi in [(0, 1), (0.25, 0.5), (0.1, 0.83), (0.0, 0.03)]:
        t = (np.arange(200_000) + 0.5) / 200_000 * (hi - lo) + lo
        v = leaves[np.minimum((t * 16).astype(int), 15)]
        m = phi.moments(lo, hi)
        assert m.mean == pytest.approx(v.mean(), abs=1e-4)
        assert m.second == pytest.approx((v * v).mean(), abs=1e-4)


def test_dyadic_norm_bruteforce(rng):
    leaves = rng.standard_normal(32)
    phi = DyadicStepFunction.from_leaves(leaves)
    best = 0.0
    for n, m, lo, hi in iter_dyadic(5):
        seg = leaves[int(round(lo * 32)):int(round(hi * 32))]
        best = max(best, seg.var())
    assert bmo_norm_dyadic(phi) == pytest.approx(math.sqrt(best), rel=1e-12)
    lo, hi, var = dyadic_worst_interval(phi)
    assert var == pytest.approx(best, rel=1e-12)


def test_staircase_tail_from_leaves():
    phi = DyadicStepFunction.from_leaves([3.0, 2.0, 1.0, 1.0], tail={"anchor_k": 2, "step": 0.5})
    assert float(phi(0.01)) > 3.0
    assert phi.moments(0.0, 0.25).mean == pytest.approx(3.5)


def test_dyadic_roundtrip_json():
    phi = DyadicStepFunction(Split(Staircase(-0.2, 0.3), Const(0.7)), truncation_bound=1e-9)
    back = function_from_dict(json.loads(json.dumps(phi.to_dict())))
    assert back.moments().exp_mean == pytest.approx(phi.moments().exp_mean, rel=1e-15)
    pw = PiecewiseFunction.log_family(0.4, 0.1, -0.3)
    back = function_from_dict(json.loads(json.dumps(pw.to_dict())))
    assert moments(back).second == moments(pw).second


def test_negated_and_shifted():
    phi = DyadicStepFunction.from_leaves([0.1, -0.4, 0.3, 0.0])
    m = phi.negated().shifted(2.0).moments()
    assert m.mean == pytest.approx(2.0 - phi.moments().mean)


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(0.0, 1.0))
def test_dyadic_digits_reconstruct(alpha):
    bits = dyadic_digits(alpha, 53)
    value = sum(b * 2.0 ** -(k + 1) for k, b in enumerate(bits))
    assert value == pytest.approx(alpha, abs=2.0 ** -52)


def test_dyadic_digits_edges():
    assert dyadic_digits(1.0, 5) == [1] * 5
    assert dyadic_digits(0.0, 5) == [0] * 5
    assert dyadic_digits(0.75, 4) == [1, 1, 0, 0]
    with pytest.raises(ParameterError):
        dyadic_digits(1.5, 3)


def test_sample_table_and_unsupported():
    t, v = sample_table(PiecewiseFunction.constant(1.5), 8)
    assert len(t) == 8 and np.all(v == 1.5)
    with pytest.raises(UnsupportedShapeError):
        moments([1, 2, 3])
