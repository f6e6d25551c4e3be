"""Constants and right-hand sides of the BDG-type inequalities for Volterra integrals.

Finite horizon::

    E sup_{t<=T} |int_0^t K(t-s) phi(s) dW_s|^p
        <= Cbar d^{(3p-4)/2} m^{p-1} T^{p(1/2-1/gamma)-1} ||K||_{L^gamma_T}^p int_0^T E|phi|^p

for ``gamma > 2`` and ``p > 2 gamma / (gamma - 2)``.  Uniform in time, when
``M_p = int x^{(2-p)/(2p)} mu(dx)`` is finite::

    E sup_t |...|^p <= C_{p,d,m} M_p^p int_0^inf E|phi|^p.

All products of large powers are assembled in log space.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from scipy import optimize, special

from .errors import (
    INFINITE,
    BoundInapplicableError,
    DomainError,
    InadmissibleError,
    is_infinite,
)
from .kernels import Kernel, lgamma_norm, mp_condition
from .measure import Multiplier
from .specfun import log_gamma


def bdg_constant_b(p: float) -> float:
    """``b_p = 2 p**(p/2)``."""
    if p < 2:
        raise DomainError(f"p must be >= 2, got {p}")
    return 2.0 * p ** (p / 2.0)


def log_bdg_constant_b(p: float) -> float:
    if p < 2:
        raise DomainError(f"p must be >= 2, got {p}")
    return math.log(2.0) + 0.5 * p * math.log(p)


def check_admissible(p: float, gamma: float):
    if not gamma > 2:
        raise InadmissibleError(f"gamma must exceed 2, got {gamma}")
    crit = 2.0 * gamma / (gamma - 2.0)
    if not p > crit:
        raise InadmissibleError(
            f"p must exceed 2*gamma/(gamma-2) = {crit:.6g}; got p={p}, gamma={gamma}"
        )


def alpha_interval(p: float, gamma: float):
    """Open interval ``((p+gamma-1)/(p gamma), (p gamma-2)/(2 p gamma))``."""
    check_admissible(p, gamma)
    return ((p + gamma - 1.0) / (p * gamma), (p * gamma - 2.0) / (2.0 * p * gamma))


def _exponents(alpha, p, gamma):
    a = (alpha - 1.0) * (p / (p - 1.0)) * (gamma / (gamma - 1.0))
    b = -2.0 * alpha * (p * gamma / (p * gamma - 2.0))
    ea = (p - 1.0) * (gamma - 1.0) / gamma
    eb = (1.0 - 2.0 / (p * gamma)) * p / 2.0
    return a, b, ea, eb


def log_c_alpha_p_gamma(alpha: float, p: float, gamma: float) -> float:
    lo, hi = alpha_interval(p, gamma)
    if not lo < alpha < hi:
        raise DomainError(f"alpha={alpha} outside the admissible interval ({lo}, {hi})")
    a, b, ea, eb = _exponents(alpha, p, gamma)
    return -ea * math.log(a + 1.0) - eb * math.log(b + 1.0)


def c_alpha_p_gamma(alpha: float, p: float, gamma: float) -> float:
    """``C_{alpha,p,gamma} = (a+1)**-ea * (b+1)**-eb`` (horizon factored out).

    ``a = (alpha-1) p/(p-1) gamma/(gamma-1)``, ``b = -2 alpha p gamma/(p gamma-2)``,
    ``ea = (p-1)(gamma-1)/gamma``, ``eb = (1 - 2/(p gamma)) p/2``.
    """
    return math.exp(log_c_alpha_p_gamma(alpha, p, gamma))


def horizon_exponent(p: float, gamma: float) -> float:
    """Power of ``T`` in the finite-horizon constant: ``p(1/2 - 1/gamma) - 1``."""
    return p * (0.5 - 1.0 / gamma) - 1.0


def cbar(p: float, gamma: float, alpha: Optional[float] = None, xatol: float = 1e-10):
    """``(Cbar_{p,gamma}, alpha*)``.

    Without ``alpha`` the product ``b_p C_{alpha,p,gamma}`` is minimised over
    the admissible interval (bounded Brent search); with ``alpha`` it is
    evaluated there.
    """
    lo, hi = alpha_interval(p, gamma)
    lb = log_bdg_constant_b(p)
    if alpha is not None:
        return math.exp(lb + log_c_alpha_p_gamma(alpha, p, gamma)), float(alpha)
    width = hi - lo
    res = optimize.minimize_scalar(
        lambda al: log_c_alpha_p_gamma(al, p, gamma),
        bounds=(lo + 1e-12 * width, hi - 1e-12 * width),
        method="bounded",
        options={"xatol": xatol * max(1.0, hi)},
    )
    a_star = float(res.x)
    return math.exp(lb + log_c_alpha_p_gamma(a_star, p, gamma)), a_star


@dataclass
class BdgBoundReport:
    """All constants entering an analytic right-hand side."""

    kind: str
    p: float
    gamma: Optional[float]
    T: Optional[float]
    d: int
    m: int
    b_p: float
    alpha: float
    C_alpha_p_gamma: Optional[float]
    Cbar: Optional[float]
    kernel_norm: Optional[float]
    phi_pnorm: float
    M_p: Optional[float]
    C_pdm: Optional[float]
    rhs: float

    def to_json(self) -> dict:
        return asdict(self)


def dimension_factor(p, d=1, m=1) -> float:
    return d ** ((3.0 * p - 4.0) / 2.0) * m ** (p - 1.0)


def finite_horizon_bound(
    kernel: Kernel, p, gamma, T, d=1, m=1, phi_pnorm=1.0, alpha=None
) -> BdgBoundReport:
    """Right-hand side on ``[0, T]``.

    ``rhs = Cbar d^{(3p-4)/2} m^{p-1} T^{p(1/2-1/gamma)-1} ||K||^p phi_pnorm``
    with ``phi_pnorm = int_0^T E|phi|^p ds``.
    """
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    cb, a_star = cbar(p, gamma, alpha)
    norm = lgamma_norm(kernel, gamma, T)
    log_rhs = (
        math.log(cb)
        + math.log(dimension_factor(p, d, m))
        + horizon_exponent(p, gamma) * math.log(T)
        + p * math.log(norm)
    )
    rhs = math.exp(log_rhs) * phi_pnorm
    return BdgBoundReport(
        "finite_horizon",
        p,
        gamma,
        T,
        d,
        m,
        bdg_constant_b(p),
        a_star,
        c_alpha_p_gamma(a_star, p, gamma),
        cb,
        norm,
        phi_pnorm,
        None,
        None,
        rhs,
    )


def uniform_alpha(p: float) -> float:
    """``alpha = (2 - p + p**2) / (2 p**2)``."""
    return (2.0 - p + p * p) / (2.0 * p * p)


def log_c_pdm(p: float, d=1, m=1) -> float:
    """``log C_{p,d,m}``, with
    ``C_{p,d,m} = d^{(3p-4)/2} m^{p-1} b_p Gamma((p-2)/(2p^2))^{p/2} Gamma((p-2)/(2p))^{p-1}``.
    """
    if not p > 2:
        raise DomainError(f"p must exceed 2, got {p}")
    return (
        math.log(dimension_factor(p, d, m))
        + log_bdg_constant_b(p)
        + 0.5 * p * log_gamma((p - 2.0) / (2.0 * p * p))
        + (p - 1.0) * log_gamma((p - 2.0) / (2.0 * p))
    )


def uniform_bound(kernel: Kernel, p, d=1, m=1, phi_pnorm=1.0) -> BdgBoundReport:
    """Right-hand side uniform in the horizon: ``C_{p,d,m} M_p^p phi_pnorm``.

    Raises
    ------
    BoundInapplicableError
        If ``M_p`` is infinite.
    """
    if not p > 2:
        raise DomainError(f"p must exceed 2, got {p}")
    Mp = mp_condition(kernel, p)
    if is_infinite(Mp):
        raise BoundInapplicableError(
            f"M_p is infinite for p={p}: the moment int x^((2-p)/(2p)) mu(dx) diverges"
        )
    lc = log_c_pdm(p, d, m)
    rhs = math.exp(lc + p * math.log(Mp)) * phi_pnorm
    return BdgBoundReport(
        "uniform", p, None, None, d, m, bdg_constant_b(p), uniform_alpha(p),
        None, None, None, phi_pnorm, Mp, math.exp(lc), rhs,
    )


def _first_integral_multiplier(q, T):
    # int_0^T s^q exp(-x s) ds = x^{-q-1} gamma(q+1, x T), T may be inf
    g1 = math.gamma(q + 1.0)
    if math.isinf(T):
        return Multiplier(lambda x: g1 * x ** (-q - 1.0), e0=-q - 1.0, einf=-q - 1.0)

    def fn(x):
        if x == 0.0:
            return T ** (q + 1.0) / (q + 1.0)
        return g1 * x ** (-q - 1.0) * special.gammainc(q + 1.0, x * T)

    return Multiplier(fn, e0=0.0, einf=-q - 1.0)


def _second_integral_multiplier(alpha, p, T):
    # (int_0^T exp(-2xs) s^{-2 alpha} ds)^{p/2}
    k = 1.0 - 2.0 * alpha
    gk = math.gamma(k)
    if math.isinf(T):
        return Multiplier(
            lambda x: ((2.0 * x) ** (-k) * gk) ** (p / 2.0), e0=-k * p / 2.0, einf=-k * p / 2.0
        )

    def fn(x):
        if x == 0.0:
            return (T**k / k) ** (p / 2.0)
        return ((2.0 * x) ** (-k) * gk * special.gammainc(k, 2.0 * x * T)) ** (p / 2.0)

    return Multiplier(fn, e0=0.0, einf=-k * p / 2.0)


def lemma_integrals(kernel: Kernel, p, alpha, T):
    """The two integrals of the factorisation lemma, via the Bernstein measure.

    ``A = int_0^T s^{(alpha-1)p/(p-1)} K(s) ds`` and
    ``B = int (int_0^T exp(-2xs) s^{-2 alpha} ds)^{p/2} mu(dx)``.
    Either may be :data:`INFINITE`.
    """
    if not 0 < alpha < 0.5:
        raise DomainError(f"alpha must lie in (0, 1/2), got {alpha}")
    q = (alpha - 1.0) * p / (p - 1.0)
    if q <= -1.0:
        A = INFINITE
    else:
        A = kernel.measure.integrate(_first_integral_multiplier(q, T))
    B = kernel.measure.integrate(_second_integral_multiplier(alpha, p, T))
    return A, B


def lemma_rhs(kernel: Kernel, p, alpha, T, phi_pnorm=1.0, d=1, m=1):
    """``d^{(3p-4)/2} m^{p-1} b_p A^{p-1} B phi_pnorm``, or :data:`INFINITE`."""
    A, B = lemma_integrals(kernel, p, alpha, T)
    if is_infinite(A) or is_infinite(B):
        return INFINITE
    return dimension_factor(p, d, m) * bdg_constant_b(p) * A ** (p - 1.0) * B * phi_pnorm


def uniform_exponents(p: float):
    """``((1 - alpha p)/(p-1), p(alpha - 1/2), (2-p)/(2p))`` at ``alpha = uniform_alpha(p)``."""
    a = uniform_alpha(p)
    return (1.0 - a * p) / (p - 1.0), p * (a - 0.5), (2.0 - p) / (2.0 * p)
