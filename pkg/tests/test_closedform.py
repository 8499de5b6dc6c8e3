import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from sdelaplace.closedform import (
    DegenerateTransform,
    LimitKind,
    _log_cosh_minus_c_sinh,
    bridge_laplace,
    denom_laplace_limit,
    fisher_asymptote,
    fisher_diverges,
    fisher_info,
    joint_laplace,
    joint_laplace_pre,
    limit_kind,
    mansuy_laplace,
    ou_laplace,
    scaled_denominator_laplace,
    singular_joint_laplace,
    variance,
    wiener_joint_laplace,
)
from sdelaplace.model import DriftParams, Model, ModelError, VolatilityProfile, alpha_bridge, big_B, ou, terminal, wiener
from sdelaplace.simulate import time_at_tail

# 30-digit values from mpmath: closed-form expressions and a Taylor-series
# integration of the Riccati equation (mpmath.odefun)
CAMERON_MARTIN = 0.805018182194592049311695724887  # 1/sqrt(cosh 1)
COSH2 = 0.515560111756213828331846434935  # 1/sqrt(cosh 2)
BRIDGE1_T09_MU1_NU1 = 0.369207350430320570888528878599
BRIDGE_HALF_T05_MU025 = 0.943842749251307037273613446076
OU_M1_T1_MU05 = 0.875484244396366032253816112742

TAB = VolatilityProfile.tabulated([0.0, 0.4, 1.0, 2.0], [1.0, 2.0, 0.5, 1.5])


def test_cameron_martin():
    assert joint_laplace(wiener(), 1.0, 0.5) == pytest.approx(CAMERON_MARTIN, rel=1e-14)


def test_frozen_transform_values():
    assert joint_laplace(alpha_bridge(1.0), 0.9, 1.0, 1.0) == pytest.approx(BRIDGE1_T09_MU1_NU1, rel=1e-13)
    assert joint_laplace(alpha_bridge(0.5), 0.5, 0.25) == pytest.approx(BRIDGE_HALF_T05_MU025, rel=1e-13)
    assert joint_laplace(ou(-1.0), 1.0, 0.5) == pytest.approx(OU_M1_T1_MU05, rel=1e-13)
    assert ou_laplace(-1.0, 1.0, 0.5) == pytest.approx(OU_M1_T1_MU05, rel=1e-13)


def test_wiener_bridge_variance_at_midpoint():
    assert variance(alpha_bridge(1.0), 0.5) == pytest.approx(0.25, rel=1e-12)


def test_fisher_singular_value():
    # alpha = K = 1/2, log B = -2 at t = 1 - 1/e
    assert fisher_info(alpha_bridge(0.5), 1.0 - math.exp(-1.0)) == pytest.approx(0.5, rel=1e-12)


def test_variance_of_wiener_is_t():
    assert variance(wiener(), np.array([0.5, 2.0])) == pytest.approx([0.5, 2.0])


def test_singular_branches():
    m = terminal(0.8, 0.8, TAB, T=1.8)
    t = 1.1
    L = math.log(big_B(m, t))
    assert variance(m, t) == pytest.approx(m.C * big_B(m, t) ** m.K * L, rel=1e-13)
    assert fisher_info(m, t) == pytest.approx(L * L / 8.0, rel=1e-13)


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-6, 1e-9, 1e-12])
def test_continuity_across_alpha_equals_K(eps):
    m = alpha_bridge(0.5)
    t = 0.9
    v0, i0 = variance(m, t), fisher_info(m, t)
    for s in (-1, 1):
        a = 0.5 + s * eps
        assert variance(m, t, alpha=a) == pytest.approx(v0, rel=5 * eps)
        assert fisher_info(m, t, alpha=a) == pytest.approx(i0, rel=5 * eps)


def test_mu_zero_is_gaussian_transform():
    m = alpha_bridge(1.3)
    assert joint_laplace(m, 0.7, 0.0, 0.8) == pytest.approx(1.0 / math.sqrt(1.0 + 1.6 * variance(m, 0.7)))
    assert joint_laplace(m, 0.7, 0.0, 0.0) == 1.0


def test_bridge_formula_matches_general_transform():
    for alpha in (-0.5, 0.0, 0.5, 1.0, 2.5):
        m = alpha_bridge(alpha, T=2.0)
        for t, mu, nu in [(0.5, 0.3, 0.0), (1.5, 1.0, 0.7), (1.99, 4.0, 2.0)]:
            assert bridge_laplace(alpha, 2.0, t, mu, nu) == pytest.approx(joint_laplace(m, t, mu, nu), rel=1e-12)


def test_bridge_formula_at_zero_G():
    assert bridge_laplace(0.5, 1.0, 0.6, 0.0, 0.3) == pytest.approx(joint_laplace(alpha_bridge(0.5), 0.6, 0.0, 0.3), rel=1e-13)


@pytest.mark.parametrize("T", [1.0, 3.0])
def test_mansuy_is_bridge_at_half_mu(T):
    for t in np.linspace(0.0, 0.99 * T, 7):
        for mu in (0.1, 1.0, 7.0):
            assert mansuy_laplace(T, t, mu) == pytest.approx(bridge_laplace(0.0, T, t, mu / 2.0), rel=1e-12)


def test_large_argument_uses_log_space():
    m = ou(0.0)
    r = math.sqrt(2.0)
    val = joint_laplace(m, 1000.0, 1.0)
    # cosh(r t) ~ e^{r t}/2 dominates
    expected = math.exp(-0.5 * r * 1000.0) * math.sqrt(2.0)
    assert val == pytest.approx(expected, rel=1e-12)
    assert joint_laplace(m, 40.0, 1.0) == pytest.approx(ou_laplace(0.0, 40.0, 1.0), rel=1e-12)


def test_degenerate_denominator_raises():
    with pytest.raises(DegenerateTransform):
        _log_cosh_minus_c_sinh(2.0, 1.5)
    with pytest.raises(DegenerateTransform):
        _log_cosh_minus_c_sinh(40.0, 1.5)


def test_query_validation():
    with pytest.raises(ModelError):
        joint_laplace(alpha_bridge(1.0), 1.0, 1.0)
    with pytest.raises(ModelError):
        joint_laplace(ou(0.0), 1.0, -1.0)
    with pytest.raises(ModelError):
        joint_laplace_pre(ou(0.0), 1.0, 0.0)


models = st.one_of(
    st.builds(lambda a: ou(a), st.floats(-2, 2)),
    st.builds(lambda a, T: alpha_bridge(a, T), st.floats(-2, 3), st.floats(0.5, 3)),
    st.builds(
        lambda a, K, s: terminal(a, K, VolatilityProfile.constant(s), T=2.0),
        st.floats(-2, 2),
        st.floats(-2, 2).filter(lambda k: abs(k) > 0.05),
        st.floats(0.3, 2.0),
    ),
    st.builds(
        lambda a, K, C: Model(a, math.inf, DriftParams(K, C), TAB),
        st.floats(-1, 1),
        st.floats(0.05, 2),
        st.floats(0.3, 3),
    ),
)


@given(m=models, frac=st.floats(0.05, 0.95), mu=st.floats(0.01, 5), nu=st.floats(0, 3))
def test_two_derivations_agree(m, frac, mu, nu):
    t = frac * (m.T if math.isfinite(m.T) else 3.0)
    a = joint_laplace(m, t, mu, nu)
    b = joint_laplace_pre(m, t, mu, nu)
    assert b == pytest.approx(a, rel=1e-10)


@given(m=models, frac=st.floats(0.05, 0.95), mu=st.floats(0.01, 5), nu=st.floats(0, 3))
def test_flip_invariance(m, frac, mu, nu):
    t = frac * (m.T if math.isfinite(m.T) else 3.0)
    assume(m.K != 0)
    f = m.flipped()
    assert variance(f, t) == pytest.approx(variance(m, t), rel=1e-12)
    assert fisher_info(f, t) == pytest.approx(fisher_info(m, t), rel=1e-12)
    assert joint_laplace(f, t, mu, nu) == pytest.approx(joint_laplace(m, t, mu, nu), rel=1e-12)


@given(m=models, f1=st.floats(0.01, 0.9), f2=st.floats(0.01, 0.9))
def test_variance_and_fisher_monotone_in_t(m, f1, f2):
    scale = m.T if math.isfinite(m.T) else 3.0
    t1, t2 = sorted((f1 * scale, f2 * scale))
    assume(t2 - t1 > 1e-6 * scale)
    assert fisher_info(m, t2) > fisher_info(m, t1) > 0
    assert variance(m, t1) > 0


@given(mu=st.floats(0.01, 5), nu=st.floats(0, 3), frac=st.floats(0.01, 0.999))
def test_transform_is_probability_like(mu, nu, frac):
    m = alpha_bridge(0.7)
    v = joint_laplace(m, frac, mu, nu)
    assert 0 < v <= 1
    assert joint_laplace(m, frac, mu + 0.5, nu) < v


def test_limit_kind_dispatch():
    assert limit_kind(1.0, 0.5) is LimitKind.NORMAL
    assert limit_kind(-2.0, -1.0) is LimitKind.NORMAL
    assert limit_kind(0.5, 0.5) is LimitKind.DICKEY_FULLER
    assert limit_kind(0.0, 0.5) is LimitKind.CAUCHY
    assert limit_kind(0.0, -1.0) is LimitKind.CAUCHY
    with pytest.raises(ModelError):
        limit_kind(1.0, 0.0)


def test_fisher_diverges():
    assert fisher_diverges(alpha_bridge(2.0))
    assert fisher_diverges(ou(-1.0))
    assert not fisher_diverges(ou(-1.0, T=5.0))
    assert not fisher_diverges(Model(0.0, 1.5, DriftParams(-0.3, 2.0)))
    assert fisher_diverges(Model(0.0, math.inf, DriftParams(-1.0, -1.0)))


@pytest.mark.parametrize("alpha,K", [(1.0, 0.5), (0.5, 0.5), (0.0, 0.5), (-3.0, -1.0), (0.5, -1.0)])
def test_fisher_asymptote_ratio_tends_to_one(alpha, K):
    m = terminal(alpha, K, T=1.0)
    ratios = []
    for delta in (1e-6, 1e-10, 1e-14):
        t = float(time_at_tail(m, delta * m.S_T))
        value, kind = fisher_asymptote(m, t)
        assert kind is limit_kind(alpha, K)
        ratios.append(fisher_info(m, t) / value)
    errs = [abs(r - 1) for r in ratios]
    assert errs[-1] <= errs[0] and errs[-1] < 0.1


def test_singular_transform_time_independent():
    for K in (0.5, -1.0):
        m = terminal(K, K, T=1.0)
        target = wiener_joint_laplace(0.7, 0.3)
        for t in (0.1, 0.5, 0.9, 0.999):
            assert singular_joint_laplace(m, t, 0.7, 0.3) == pytest.approx(target, rel=1e-12)


def test_scaled_denominator_limits():
    m = alpha_bridge(0.5)
    for t in (0.2, 0.9, 0.9999):
        assert scaled_denominator_laplace(m, t, 1.0) == pytest.approx(COSH2, rel=1e-12)
    assert denom_laplace_limit(m, 1.0) == pytest.approx(COSH2, rel=1e-15)
    cauchy = alpha_bridge(0.0)
    t = float(time_at_tail(cauchy, 1e-12))
    assert scaled_denominator_laplace(cauchy, t, 1.0) == pytest.approx(denom_laplace_limit(cauchy, 1.0), rel=1e-4)
    normal = alpha_bridge(1.0)
    far = [abs(scaled_denominator_laplace(normal, float(time_at_tail(normal, d)), 1.0) - math.exp(-1.0))
           for d in (1e-4, 1e-8, 1e-14)]
    assert far[0] > far[1] > far[2]
