import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vklab.errors import INFINITE, DomainError, NonIntegrableError, is_infinite
from vklab.kernels import (
    Damped,
    Exponential,
    FiniteAtomic,
    GammaKernel,
    MLResolvent,
    PowerLaw,
    Shifted,
    Sum,
    Truncated,
    cell_averages,
    damp,
    eval_kernel,
    from_json,
    is_completely_monotone,
    kernel_integral,
    lgamma_norm,
    mp_condition,
    to_json,
    truncate,
)
from vklab.measure import (
    BernsteinMeasure,
    GammaDensity,
    MittagLefflerDensity,
    Multiplier,
    eval_via_measure,
    measure_mass,
    measure_moment,
)
from vklab.specfun import mittag_leffler

TS = np.geomspace(0.01, 10.0, 40)


def mp_quad(f, a, b):
    # tanh-sinh on geometric panels copes with the endpoint power at 0
    with mp.workdps(30):
        if math.isfinite(b):
            return float(mp.quad(f, [a, b]))
        pts = [a] + [a + 10.0**k for k in range(-3, 4)] + [mp.inf]
        return float(mp.quad(f, pts))


@pytest.mark.parametrize(
    "kernel",
    [
        PowerLaw(0.1),
        PowerLaw(0.3),
        PowerLaw(0.45),
        GammaKernel(1.0, 0.3),
        GammaKernel(2.5, 0.2, c=0.7),
        MLResolvent(1.0, 0.3),
        MLResolvent(3.0, 0.1),
    ],
    ids=lambda k: k.form,
)
def test_closed_form_matches_measure(kernel):
    for t in TS:
        a = eval_kernel(kernel, t)
        b = eval_via_measure(kernel.measure, t)
        assert b == pytest.approx(a, rel=1e-9)


def test_exponential_kernels_are_atoms():
    assert eval_kernel(Exponential(0.0), TS) == pytest.approx(np.ones_like(TS), rel=0, abs=0)
    assert Exponential(1.0).measure.atoms == ((1.0, 1.0),)
    assert eval_via_measure(Exponential(1.0).measure, 2.0) == math.exp(-2.0)


def test_ml_density_reproduces_resolvent_with_lambda_factor():
    # mu(dx) = (lam/pi) x^a sin(pi a) / (x^2a + 2 lam x^a cos(pi a) + lam^2) dx
    lam, H = 2.0, 0.3
    a = H + 0.5
    dens = MittagLefflerDensity(lam, H)
    for t in (0.1, 1.0, 5.0):
        ref = mp_quad(lambda x: mp.exp(-x * t) * dens.density(float(x)), 0, mp.inf)
        closed = lam * t ** (a - 1) * mittag_leffler(a, a, -lam * t**a)
        assert ref == pytest.approx(closed, rel=1e-8)


def test_power_law_density_normalisation():
    # int x^(-H-1/2)/Gamma(1/2-H) exp(-x t) dx = t^(H-1/2); x = u^(1/(1-kappa)) removes the pole
    H, t = 0.3, 2.0
    kappa = H + 0.5
    d = GammaDensity(0.0, H)
    coef = d.density(1.0)
    with mp.workdps(30):
        ref = coef / (1 - kappa) * mp.quad(lambda u: mp.exp(-t * u ** (1 / (1 - kappa))), [0, 1, mp.inf])
    assert float(ref) == pytest.approx(t ** (H - 0.5), rel=1e-12)
    assert eval_via_measure(PowerLaw(H).measure, t) == pytest.approx(float(ref), rel=1e-12)


def test_gamma_moment_closed_form_against_quadrature():
    m = GammaKernel(1.0, 0.3).measure
    auto = measure_moment(m, -0.25)
    quad = measure_moment(m, -0.25, method="quad")
    # beta^(theta-kappa+1) B(1-kappa, kappa-theta-1) / Gamma(1-kappa)
    ref = math.gamma(0.2) * math.gamma(0.05) / math.gamma(0.25) / math.gamma(0.2)
    assert auto == pytest.approx(5.370154485484658, rel=1e-13)
    assert auto == pytest.approx(ref, rel=1e-13)
    assert quad == pytest.approx(ref, rel=1e-8)


def test_power_law_moments_and_divergence():
    m = PowerLaw(0.3).measure
    c = 1.0 / math.gamma(0.2)
    assert measure_mass(m, 0.0, 10.0) == pytest.approx(c * 10**0.2 / 0.2, rel=1e-13)
    assert measure_mass(m, 0.0, 10.0) == pytest.approx(1.7261458806785086, rel=1e-13)
    assert is_infinite(measure_mass(m))
    assert is_infinite(measure_moment(m, -0.9, 0.0, 1.0))
    v = measure_moment(m, -0.25, 3.0, math.inf, method="quad")
    assert v == pytest.approx(c * 3.0 ** (-0.05) / 0.05, rel=1e-8)


def test_shift_damp_truncate_measures():
    K = PowerLaw(0.3)
    for t in (0.05, 0.7, 3.0):
        assert eval_via_measure(Shifted(K, 0.2).measure, t) == pytest.approx((t + 0.2) ** -0.2, rel=1e-8)
        assert eval_via_measure(Damped(K, 1.5).measure, t) == pytest.approx(
            math.exp(-1.5 * t) * t**-0.2, rel=1e-8
        )
        trunc = Truncated(K, 7.0)
        assert eval_kernel(trunc, t) == pytest.approx(eval_via_measure(trunc.measure, t), rel=1e-8)


def test_truncated_plus_tail_recovers_kernel():
    K = GammaKernel(0.5, 0.2)
    m = K.measure
    tail = m.integrate(Multiplier(lambda x: math.exp(-x * 0.4), e0=0.0, einf=0.0, rate=0.4), 9.0)
    assert eval_kernel(Truncated(K, 9.0), 0.4) + tail == pytest.approx(eval_kernel(K, 0.4), rel=1e-9)


def test_finite_atomic_and_sum():
    k = FiniteAtomic((0.0, 2.0), (1.0, 0.5))
    assert eval_kernel(k, 1.0) == pytest.approx(1.0 + 0.5 * math.exp(-2.0), rel=1e-15)
    s = Sum((PowerLaw(0.3), Exponential(1.0)))
    assert eval_kernel(s, 2.0) == pytest.approx(2.0**-0.2 + math.exp(-2.0), rel=1e-14)
    assert eval_via_measure(s.measure, 2.0) == pytest.approx(eval_kernel(s, 2.0), rel=1e-9)
    with pytest.raises(DomainError):
        FiniteAtomic((1.0,), (-1.0,))


def test_eval_kernel_domain():
    with pytest.raises(DomainError):
        eval_kernel(PowerLaw(0.3), 0.0)
    with pytest.raises(DomainError):
        PowerLaw(0.5)
    with pytest.raises(DomainError):
        PowerLaw(0.3, c=-1.0)


@pytest.mark.parametrize(
    "kernel",
    [PowerLaw(0.3), GammaKernel(2.0, 0.1), MLResolvent(1.0, 0.3), Shifted(PowerLaw(0.2), 0.1),
     Truncated(PowerLaw(0.3), 20.0), Damped(MLResolvent(1.0, 0.4), 0.5)],
    ids=lambda k: k.form,
)
def test_kernel_integral_against_mpmath(kernel):
    e = kernel.singular_exponent()
    for a, b in ((0.0, 0.01), (0.01, 0.5), (0.5, 3.0)):
        got = float(kernel_integral(kernel, a, b))
        if a == 0.0 and e < 0:
            # remove the endpoint power before mp.quad: int_0^b s^e g(s) ds
            ref = mp_quad(lambda s: float(eval_kernel(kernel, float(s))) if s > 0 else 0.0, a, b)
        else:
            ref = mp_quad(lambda s: float(eval_kernel(kernel, float(s))), a, b)
        assert got == pytest.approx(ref, rel=1e-7)


def test_cell_averages_telescoping():
    K = PowerLaw(0.3)
    kb = cell_averages(K, 1 / 64, 64)
    assert math.fsum(kb) / 64 == pytest.approx(1.0 / 0.8, rel=1e-13)
    assert np.all(np.diff(kb) < 0)


def test_lgamma_norm_closed_and_quadrature():
    assert lgamma_norm(Exponential(0.0), 8.0, 2.0) == pytest.approx(2.0 ** (1 / 8), rel=1e-15)
    assert lgamma_norm(PowerLaw(0.3), 3.0, 1.0) == pytest.approx((1 / 0.4) ** (1 / 3), rel=1e-14)
    # no closed form: compare against mpmath
    K = MLResolvent(1.0, 0.3)
    ref = mp_quad(lambda s: float(eval_kernel(K, float(s))) ** 3 if s > 0 else 0.0, 0, 2.0) ** (1 / 3)
    assert lgamma_norm(K, 3.0, 2.0) == pytest.approx(ref, rel=1e-7)
    with pytest.raises(NonIntegrableError):
        lgamma_norm(PowerLaw(0.3), 5.0, 1.0)


def test_mp_condition():
    # power law: int x^(-1/4) x^(-H-1/2) dx diverges at one end or the other
    assert mp_condition(PowerLaw(0.3), 4.0) is INFINITE
    g = GammaKernel(1.0, 0.4)
    ref = math.gamma(0.1) * math.gamma(0.15) / math.gamma(0.25) / math.gamma(0.1)
    assert mp_condition(g, 4.0) == pytest.approx(ref, rel=1e-12)


def test_completely_monotone_check():
    assert is_completely_monotone(PowerLaw(0.3))
    assert is_completely_monotone(MLResolvent(1.0, 0.3))
    assert is_completely_monotone(Truncated(PowerLaw(0.3), 5.0))


kernel_strategy = st.deferred(
    lambda: st.one_of(
        st.builds(Exponential, st.floats(0.0, 5.0)),
        st.builds(PowerLaw, st.floats(0.01, 0.49)),
        st.builds(GammaKernel, st.floats(0.1, 5.0), st.floats(0.01, 0.49)),
        st.builds(MLResolvent, st.floats(0.1, 5.0), st.floats(0.01, 0.49)),
        st.builds(
            lambda xs: FiniteAtomic(tuple(xs), tuple(1.0 + i for i in range(len(xs)))),
            st.lists(st.floats(0.0, 50.0), min_size=1, max_size=4),
        ),
        st.builds(Shifted, kernel_strategy, st.floats(0.01, 2.0)),
        st.builds(Damped, kernel_strategy, st.floats(0.0, 2.0)),
        st.builds(Truncated, kernel_strategy, st.floats(0.5, 50.0)),
    )
)


@given(kernel_strategy, st.floats(0.1, 10.0))
def test_json_round_trip(kernel, c):
    k = from_json(json.loads(json.dumps(to_json(kernel))))
    assert k == kernel
    assert to_json(k) == to_json(kernel)


@given(st.floats(0.01, 0.49), st.floats(0.01, 5.0), st.floats(0.01, 5.0))
def test_power_law_kernel_is_decreasing_and_convex(H, t, dt):
    K = PowerLaw(H)
    a, b, c = eval_kernel(K, t), eval_kernel(K, t + dt), eval_kernel(K, t + 2 * dt)
    assert b < a
    assert a - 2 * b + c >= -1e-12 * a


@given(st.floats(0.01, 0.49), st.floats(0.001, 1.0), st.floats(0.05, 5.0))
def test_shift_measure_is_exp_weighted(H, eps, t):
    K = PowerLaw(H)
    v = eval_via_measure(Shifted(K, eps).measure, t)
    assert v == pytest.approx((t + eps) ** (H - 0.5), rel=1e-8)


@pytest.mark.parametrize("theta", [-0.25, -0.21, -0.201, -0.2001])
def test_tail_quadrature_near_divergence(theta):
    # x^theta x^(-0.8) barely integrable at infinity: the substituted tail must stay finite
    m = PowerLaw(0.3).measure
    e = theta + 0.2
    ref = 3.0**e / (-e) / math.gamma(0.2)
    assert measure_moment(m, theta, 3.0, math.inf, method="quad") == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("H", [0.1, 0.3, 0.45])
def test_power_law_gamma_normalization_equals_scaled_bare(H):
    g = PowerLaw(H, normalization="gamma")
    ref = PowerLaw(H, c=1.0 / math.gamma(H + 0.5))
    ts = np.geomspace(0.01, 10.0, 7)
    np.testing.assert_allclose(eval_kernel(g, ts), eval_kernel(ref, ts), rtol=1e-15)
    np.testing.assert_allclose(
        [eval_via_measure(g.measure, t) for t in ts], eval_kernel(ref, ts), rtol=1e-12
    )
    assert kernel_integral(g, 0.0, 2.0) == pytest.approx(kernel_integral(ref, 0.0, 2.0), rel=1e-15)
    assert lgamma_norm(g, 2.1, 1.0) == pytest.approx(lgamma_norm(ref, 2.1, 1.0), rel=1e-15)
    np.testing.assert_allclose(
        eval_kernel(truncate(g, 5.0), ts), eval_kernel(truncate(ref, 5.0), ts), rtol=1e-14
    )
    np.testing.assert_allclose(eval_kernel(damp(g, 1.0), ts), eval_kernel(damp(ref, 1.0), ts), rtol=1e-14)
    assert from_json(json.loads(json.dumps(to_json(g)))) == g
    with pytest.raises(DomainError):
        PowerLaw(H, normalization="riemann")
