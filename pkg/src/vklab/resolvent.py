"""Resolvent of the power-law kernel and a discrete check of its identity.

For ``K(t) = t**(H-1/2) / Gamma(H+1/2)`` the resolvent ``R`` solving
``lam K - R = lam K * R`` is ``lam t**(a-1) E_{a,a}(-lam t**a)``, ``a = H + 1/2``.
"""

import numpy as np
from scipy import special

from .errors import DomainError
from .grid import TimeGrid
from .kernels import Exponential, Kernel, MLResolvent, cell_averages, eval_kernel

_JACOBI_ORDER = 12
_GL_ORDER = 12
NEAR_FIELD = 1.0 / 16.0


def resolvent_kernel(lam: float, H: float) -> Kernel:
    """Resolvent of ``lam * t**(H-1/2) / Gamma(H+1/2)``.

    ``H = 1/2`` is the constant kernel, whose resolvent is ``lam exp(-lam t)``.
    """
    if not lam > 0:
        raise DomainError(f"lam must be positive, got {lam}")
    if H == 0.5:
        return Exponential(lam, c=lam)
    return MLResolvent(lam, H)


def _jacobi(a, b):
    # rule for int_{-1}^{1} (1-x)^a (1+x)^b f(x) dx
    return special.roots_jacobi(_JACOBI_ORDER, a, b)


def _corner_terms(K, R, grid, out):
    # cells touching s = 0 (R singular) and s = t_k (K singular), exactly
    # weighted by the algebraic singularities through Gauss-Jacobi rules
    n, dt = grid.steps, grid.dt
    tk = grid.nodes[1:]
    eK = K.singular_exponent()
    eR = R.singular_exponent()
    if n >= 2:
        x, w = _jacobi(0.0, eR)
        s = 0.5 * dt * (1.0 + x)
        r_reg = eval_kernel(R, s) * s ** (-eR)
        lag = tk[1:, None] - s[None, :]
        out[1:] += (0.5 * dt) ** (1.0 + eR) * (eval_kernel(K, lag) * r_reg) @ w
        x, w = _jacobi(0.0, eK)
        u = 0.5 * dt * (1.0 + x)
        k_reg = eval_kernel(K, u) * u ** (-eK)
        back = tk[1:, None] - u[None, :]
        out[1:] += (0.5 * dt) ** (1.0 + eK) * (eval_kernel(R, back) * k_reg) @ w
    x, w = _jacobi(eK, eR)
    s = 0.5 * dt * (1.0 + x)
    f = eval_kernel(K, dt - s) * (dt - s) ** (-eK) * eval_kernel(R, s) * s ** (-eR)
    out[0] += (0.5 * dt) ** (1.0 + eK + eR) * (f @ w)


def convolution_on_grid(K: Kernel, R: Kernel, grid: TimeGrid, scheme="corrected",
                        near_field=NEAR_FIELD):
    """``(K * R)(t_k)`` for ``k = 1..steps``.

    Parameters
    ----------
    scheme : {"corrected", "midpoint"}
        ``"midpoint"`` is ``dt * sum_j Kbar_{k-j} R(t_j + dt/2)``, first
        order for bounded kernels but only ``O(dt**(2H))`` at the first
        nodes when both kernels are singular.  ``"corrected"`` treats every
        cell within ``near_field`` of either singular end by Gauss-Legendre
        product quadrature (Gauss-Jacobi on the two end cells) and the
        remaining cells by products of cell averages, which is second order
        uniformly in ``k``.
    near_field : float
        Physical width of the near zone for ``"corrected"``.
    """
    n, dt = grid.steps, grid.dt
    kbar = cell_averages(K, dt, n)
    if scheme == "midpoint":
        rmid = eval_kernel(R, dt * (np.arange(n) + 0.5))
        return dt * np.convolve(kbar, rmid)[:n]
    if scheme != "corrected":
        raise DomainError(f"unknown scheme {scheme!r}")

    J = min(n, max(2, int(np.ceil(near_field / dt))))
    rbar = cell_averages(R, dt, n)
    far = np.arange(n) >= J
    out = dt * np.convolve(np.where(far, kbar, 0.0), np.where(far, rbar, 0.0))[:n]

    # near zone: cells 1..J-1 at either end, Gauss-Legendre nodes per cell.
    # The node set is shared by all k because t_k - s reflects a node of cell
    # j onto a node of cell k-1-j.
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    pts = dt * (np.arange(1, n)[:, None] + 0.5 * (1.0 + x[None, :]))
    kg_all = np.zeros((n, _GL_ORDER))
    rg_all = np.zeros((n, _GL_ORDER))
    kg_all[1:] = eval_kernel(K, pts)
    rg_all[1:] = eval_kernel(R, pts)
    kg = np.where(np.arange(n)[:, None] < J, kg_all, 0.0)
    rg = np.where(np.arange(n)[:, None] < J, rg_all, 0.0)
    near = np.zeros(n)
    for q in range(_GL_ORDER):
        qr = _GL_ORDER - 1 - q
        # inclusion-exclusion over "K cell near" and "R cell near"
        near += w[q] * (
            np.convolve(kg_all[:, qr], rg[:, q])[:n]
            + np.convolve(kg[:, qr], rg_all[:, q])[:n]
            - np.convolve(kg[:, qr], rg[:, q])[:n]
        )
    out += 0.5 * dt * near
    _corner_terms(K, R, grid, out)
    return out


def resolvent_residual(K: Kernel, lam: float, R, grid: TimeGrid, scheme="corrected") -> float:
    """``max_k |lam K(t_k) - R(t_k) - lam (K * R)(t_k)|`` over ``k = 1..steps``.

    ``R=None`` stands for the zero kernel.  See :func:`convolution_on_grid`
    for the schemes.
    """
    tk = grid.nodes[1:]
    lhs = lam * eval_kernel(K, tk)
    if R is None:
        return float(np.max(np.abs(lhs)))
    res = lhs - eval_kernel(R, tk) - lam * convolution_on_grid(K, R, grid, scheme)
    return float(np.max(np.abs(res)))
