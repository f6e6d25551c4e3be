import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from vklab.bdg import (
    alpha_interval,
    bdg_constant_b,
    c_alpha_p_gamma,
    cbar,
    check_admissible,
    finite_horizon_bound,
    horizon_exponent,
    lemma_integrals,
    lemma_rhs,
    log_c_pdm,
    uniform_alpha,
    uniform_bound,
    uniform_exponents,
)
from vklab.errors import INFINITE, BoundInapplicableError, DomainError, InadmissibleError, is_infinite
from vklab.kernels import Exponential, GammaKernel, PowerLaw, lgamma_norm


def c_alpha_oracle(alpha, p, gamma, T=1.0):
    # the two Hoelder integrals evaluated by quadrature, then raised to their powers
    e1 = (alpha - 1) * p / (p - 1) * gamma / (gamma - 1)
    e2 = -2 * alpha * p * gamma / (p * gamma - 2)
    i1, _ = integrate.quad(lambda u: 1.0, 0, T, weight="alg", wvar=(e1, 0))
    i2, _ = integrate.quad(lambda s: 1.0, 0, T, weight="alg", wvar=(e2, 0))
    return i1 ** ((p - 1) * (gamma - 1) / gamma) * i2 ** ((1 - 2 / (p * gamma)) * p / 2)


def test_b_p():
    assert bdg_constant_b(4.0) == 32.0
    assert bdg_constant_b(2.0) == 4.0
    with pytest.raises(DomainError):
        bdg_constant_b(1.5)


def test_admissibility_message():
    with pytest.raises(InadmissibleError, match=r"p must exceed 2\*gamma/\(gamma-2\) = 6"):
        check_admissible(3.0, 3.0)
    with pytest.raises(InadmissibleError, match="gamma must exceed 2"):
        check_admissible(10.0, 2.0)
    with pytest.raises(InadmissibleError):
        check_admissible(4.0, 3.0)


@pytest.mark.parametrize("p,gamma", [(4.0, 8.0), (8.0, 4.0), (5.0, 4.5), (3.0, 7.0)])
def test_c_alpha_against_quadrature(p, gamma):
    lo, hi = alpha_interval(p, gamma)
    for alpha in np.linspace(lo, hi, 7)[1:-1]:
        assert c_alpha_p_gamma(alpha, p, gamma) == pytest.approx(c_alpha_oracle(alpha, p, gamma), rel=1e-9)


@pytest.mark.parametrize("p,gamma", [(4.0, 8.0), (8.0, 4.0), (5.0, 4.5)])
def test_cbar_is_minimum_over_grid(p, gamma):
    lo, hi = alpha_interval(p, gamma)
    grid = np.linspace(lo, hi, 20001)[1:-1]
    brute = min(bdg_constant_b(p) * c_alpha_oracle(a, p, gamma) for a in grid[::50])
    dense = bdg_constant_b(p) * np.min([c_alpha_p_gamma(a, p, gamma) for a in grid])
    cb, a_star = cbar(p, gamma)
    assert lo < a_star < hi
    assert cb <= dense * (1 + 1e-9)
    assert cb <= brute * (1 + 1e-9)
    assert cb == pytest.approx(dense, rel=1e-6)


def test_cbar_frozen_and_user_alpha():
    cb, a = cbar(8.0, 4.0)
    assert cb == pytest.approx(3.17e12, rel=5e-3)
    assert a == pytest.approx(0.41667, abs=1e-3)
    cb2, a2 = cbar(8.0, 4.0, alpha=0.4)
    assert a2 == 0.4 and cb2 >= cb


def test_finite_horizon_exponential_frozen():
    r = finite_horizon_bound(Exponential(0.0), 4.0, 8.0, 1.0)
    assert r.rhs == pytest.approx(629856.0, rel=1e-10)
    assert r.kernel_norm == 1.0 and r.kind == "finite_horizon"


@pytest.mark.parametrize("p", [3.0, 4.0, 8.0])
def test_classical_time_scaling(p):
    gamma = 8.0
    base = finite_horizon_bound(Exponential(0.0), p, gamma, 1.0).rhs
    for T in (0.5, 1.0, 2.0):
        r = finite_horizon_bound(Exponential(0.0), p, gamma, T).rhs
        assert r / base == pytest.approx(T ** (p / 2 - 1), rel=1e-13)


def test_horizon_exponent():
    assert horizon_exponent(4.0, 8.0) == pytest.approx(0.5)


def test_dimension_factor_enters():
    a = finite_horizon_bound(PowerLaw(0.3), 4.0, 4.5, 1.0)
    b = finite_horizon_bound(PowerLaw(0.3), 4.0, 4.5, 1.0, d=2, m=3)
    assert b.rhs / a.rhs == pytest.approx(2.0**4 * 3.0**3, rel=1e-13)


@given(st.floats(2.1, 12.0), st.floats(0.0, 1.0), st.floats(0.2, 5.0), st.floats(0.01, 0.99))
def test_factorised_bound_is_tighter_than_assembled_bound(gamma, frac, T, beta):
    # the assembled bound follows from the factorised one by two Hoelder steps
    p = 2 * gamma / (gamma - 2) + 0.5 + 6 * frac
    lo, hi = alpha_interval(p, gamma)
    alpha = lo + (hi - lo) * 0.5
    K = Exponential(beta)
    lem = lemma_rhs(K, p, alpha, T)
    thm = bdg_constant_b(p) * c_alpha_p_gamma(alpha, p, gamma) * T ** horizon_exponent(p, gamma) * lgamma_norm(K, gamma, T) ** p
    assert lem <= thm * (1 + 1e-9)


def test_lemma_integrals_exponential_closed_form():
    p, alpha, T, beta = 4.0, 0.35, 2.0, 1.3
    A, B = lemma_integrals(Exponential(beta), p, alpha, T)
    q = (alpha - 1) * p / (p - 1)
    a_ref, _ = integrate.quad(lambda s: math.exp(-beta * s), 0, T, weight="alg", wvar=(q, 0))
    b_in, _ = integrate.quad(lambda s: math.exp(-2 * beta * s), 0, T, weight="alg", wvar=(-2 * alpha, 0))
    assert A == pytest.approx(a_ref, rel=1e-10)
    assert B == pytest.approx(b_in ** (p / 2), rel=1e-10)


def test_lemma_divergence_is_explicit():
    # int s^((alpha-1)p/(p-1)) s^(-0.2) ds diverges at 0 for this alpha
    assert lemma_rhs(PowerLaw(0.3), 4.0, 0.4, 1.0) is INFINITE


def test_uniform_constant_frozen():
    # 32 Gamma(1/16)^2 Gamma(1/4)^3
    ref = 32 * math.gamma(1 / 16) ** 2 * math.gamma(0.25) ** 3
    assert math.exp(log_c_pdm(4.0)) == pytest.approx(ref, rel=1e-13)
    assert ref == pytest.approx(365516.507, rel=1e-8)


def test_uniform_bound_gamma_kernel():
    r = uniform_bound(GammaKernel(1.0, 0.4), 4.0)
    assert r.M_p == pytest.approx(1.71565, rel=1e-5)
    assert r.rhs == pytest.approx(math.exp(log_c_pdm(4.0)) * r.M_p**4, rel=1e-13)
    with pytest.raises(BoundInapplicableError):
        uniform_bound(PowerLaw(0.3), 4.0)


@given(st.floats(2.05, 30.0))
def test_uniform_exponents_identity(p):
    a = uniform_alpha(p)
    e1, e2, target = uniform_exponents(p)
    assert e1 == pytest.approx(target, rel=1e-12, abs=1e-14)
    # x-power of the second lemma integral at alpha: -(1 - 2 alpha) p / 2
    assert -(1 - 2 * a) * p / 2 == pytest.approx(target, rel=1e-12, abs=1e-14)


@given(st.floats(2.2, 12.0), st.floats(0.3, 4.0), st.floats(0.05, 0.49))
def test_uniform_bound_dominates_lemma_on_infinite_horizon(p, beta, H):
    K = GammaKernel(beta, H)
    try:
        ub = uniform_bound(K, p)
    except BoundInapplicableError:
        assume(False)
    lem = lemma_rhs(K, p, uniform_alpha(p), math.inf)
    assume(not is_infinite(lem))
    assert lem <= ub.rhs * (1 + 1e-9)
