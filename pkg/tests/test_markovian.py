import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vklab.errors import DomainError, EmptySchemeError, is_infinite
from vklab.kernels import GammaKernel, MLResolvent, PowerLaw, Truncated, eval_kernel
from vklab.markovian import (
    MultifactorScheme,
    discretization_error_bound,
    discretize_measure,
    multifactor_kernel,
    power_law_tail_bound,
    truncation_error_bound,
)
from vklab.measure import measure_mass


def test_power_law_mass_below_N():
    m = PowerLaw(0.3).measure
    s = discretize_measure(m, 10.0, 40)
    # 10^0.2 / (0.2 Gamma(0.2))
    assert s.total_mass == pytest.approx(1.7261458806785086, rel=1e-13)
    assert len(s.nodes) == 40


@pytest.mark.parametrize("N", [5.0, 20.0, 80.0])
def test_truncation_bound_matches_power_law_closed_form(N):
    H, delta = 0.3, 0.1
    gamma = 2.0 / (1.0 - 2.0 * delta)
    v = truncation_error_bound(PowerLaw(H).measure, N, gamma)
    assert v == pytest.approx(power_law_tail_bound(H, delta, N), rel=1e-12)


def test_truncation_bound_diverges_for_heavy_tail():
    # x^(-1/gamma - H - 1/2) is not integrable at infinity once gamma >= 2/(1-2H)
    assert is_infinite(truncation_error_bound(PowerLaw(0.05).measure, 1.0, 3.0))
    assert not is_infinite(truncation_error_bound(PowerLaw(0.05).measure, 1.0, 2.2))


def test_discretization_bound_halves():
    m = PowerLaw(0.3).measure
    b = [discretization_error_bound(m, 20.0, n) for n in (25, 50, 100, 200)]
    np.testing.assert_allclose(np.array(b[:-1]) / np.array(b[1:]), 2.0, rtol=1e-14)


def test_empty_scheme():
    with pytest.raises(EmptySchemeError):
        discretize_measure(GammaKernel(5.0, 0.3).measure, 3.0, 10)


def test_bad_arguments():
    m = PowerLaw(0.3).measure
    with pytest.raises(DomainError):
        discretize_measure(m, 10.0, 0)
    with pytest.raises(DomainError):
        discretize_measure(m, 10.0, 5, "gauss")


def test_scheme_json_round_trip():
    s = discretize_measure(MLResolvent(1.0, 0.3).measure, 15.0, 12, "midpoint")
    assert MultifactorScheme.from_json(s.to_json()) == s


def test_zero_mass_cells_are_dropped():
    # Gamma measure starts at beta = 2.5: the first two unit cells are empty
    s = discretize_measure(GammaKernel(2.5, 0.3).measure, 10.0, 10, "left")
    assert len(s.nodes) == 8
    assert s.n == 10


@given(
    st.floats(0.02, 0.48),
    st.floats(1.0, 100.0),
    st.integers(1, 60),
    st.sampled_from(["left", "midpoint", "centroid"]),
)
def test_scheme_invariants(H, N, n, rule):
    m = PowerLaw(H).measure
    s = discretize_measure(m, N, n, rule)
    assert math.fsum(s.weights) == pytest.approx(measure_mass(m, 0.0, N), rel=1e-9)
    for i, (x, w) in enumerate(zip(s.nodes, s.weights)):
        lo, hi = i * N / n, (i + 1) * N / n
        assert lo <= x < hi
        assert w > 0


@given(st.floats(0.05, 0.45), st.floats(0.05, 3.0))
def test_multifactor_kernel_converges_to_truncated(H, t):
    m = PowerLaw(H).measure
    ref = eval_kernel(Truncated(PowerLaw(H), 20.0), t)
    errs = []
    for n in (20, 80):
        k = multifactor_kernel(discretize_measure(m, 20.0, n, "left"))
        errs.append(abs(eval_kernel(k, t) - ref))
    # |exp(-x t) - exp(-x_i t)| <= t N / n on each cell, so the error falls with n
    assert errs[1] <= errs[0] + 1e-15
    assert errs[1] <= t * 20.0 / 80 * measure_mass(m, 0.0, 20.0) + 1e-12
