import math

import mpmath as mp
import numpy as np
import pytest

from vklab.errors import DomainError
from vklab.grid import TimeGrid
from vklab.kernels import Exponential, MLResolvent, PowerLaw, eval_kernel, kernel_integral
from vklab.resolvent import convolution_on_grid, resolvent_kernel, resolvent_residual


def scaled_power_law(H):
    return PowerLaw(H, c=1.0 / math.gamma(H + 0.5))


def mp_convolution(K, R, t):
    # int_0^t K(t-s) R(s) ds, split at t/2 so each half has one endpoint pole
    f = lambda s: float(eval_kernel(K, float(t - s))) * float(eval_kernel(R, float(s)))
    with mp.workdps(25):
        return float(mp.quad(f, [0, t / 2, t]))


def test_resolvent_kernel_forms():
    assert resolvent_kernel(2.0, 0.5) == Exponential(2.0, c=2.0)
    assert resolvent_kernel(1.5, 0.3) == MLResolvent(1.5, 0.3)
    with pytest.raises(DomainError):
        resolvent_kernel(0.0, 0.3)


def test_convolution_against_mpmath():
    K, R = scaled_power_law(0.3), MLResolvent(1.0, 0.3)
    grid = TimeGrid(1.0, 256)
    conv = convolution_on_grid(K, R, grid)
    for k in (1, 7, 64, 256):
        t = grid.nodes[k]
        assert conv[k - 1] == pytest.approx(mp_convolution(K, R, t), rel=1e-5)


def test_residual_second_order_for_corrected_scheme():
    K, R = scaled_power_law(0.3), MLResolvent(1.0, 0.3)
    res = [resolvent_residual(K, 1.0, R, TimeGrid(1.0, n)) for n in (256, 512, 1024)]
    assert res[0] / res[1] > 3.5 and res[1] / res[2] > 3.5
    assert res[-1] < 1e-6


def test_midpoint_scheme_converges_at_reduced_rate():
    # both kernels singular: the first cells only give O(dt^(2H))
    K, R = scaled_power_law(0.3), MLResolvent(1.0, 0.3)
    res = [resolvent_residual(K, 1.0, R, TimeGrid(1.0, n), "midpoint") for n in (256, 512, 1024)]
    ratio = res[1] / res[2]
    assert 2 ** 0.5 < ratio < 2 ** 0.7


def test_identity_with_constant_kernel():
    lam = 1.7
    K = Exponential(0.0)
    R = resolvent_kernel(lam, 0.5)
    assert resolvent_residual(K, lam, R, TimeGrid(2.0, 128)) < 1e-13


def test_wrong_resolvent_is_detected():
    K = scaled_power_law(0.3)
    good = resolvent_residual(K, 1.0, MLResolvent(1.0, 0.3), TimeGrid(1.0, 256))
    bad = resolvent_residual(K, 1.0, MLResolvent(2.0, 0.3), TimeGrid(1.0, 256))
    assert bad > 1e3 * good


def test_zero_resolvent_residual_is_kernel_sup():
    K = scaled_power_law(0.3)
    grid = TimeGrid(1.0, 64)
    assert resolvent_residual(K, 2.0, None, grid) == pytest.approx(
        2.0 * float(eval_kernel(K, grid.dt)), rel=1e-15
    )


def test_resolvent_antiderivative():
    # int_0^t R = lam t^a E_{a,a+1}(-lam t^a), limit 1
    R = MLResolvent(1.0, 0.4)
    v = kernel_integral(R, 0.0, np.array([0.5, 2.0, 50.0]))
    f = lambda s: float(eval_kernel(R, float(s)))
    with mp.workdps(20):
        ref = [float(mp.quad(f, [0, 0.25, 0.5])), float(mp.quad(f, [0, 1, 2]))]
    np.testing.assert_allclose(v[:2], ref, rtol=1e-8)
    assert 0.95 < v[2] < 1.0
