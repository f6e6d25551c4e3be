"""Bernstein measures of completely monotone kernels.

A measure is a finite set of atoms plus density components with closed-form
densities.  Every integral against the measure goes through
:meth:`BernsteinMeasure.integrate`, which handles the three numerical
difficulties these densities present:

* an integrable algebraic singularity at the left end of the support,
  removed by the substitution ``x = lo + y**(1/(1+e))``;
* an algebraic tail at infinity, mapped onto a bounded integrand by
  ``x = A * v**(-1/s)``;
* exponentially decaying multipliers, cut where they fall below ``exp(-50)``.

In between, the range is cut into geometric panels so that adaptive
Gauss-Kronrod (``scipy.integrate.quad``) sees smooth pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import INFINITE, DomainError, QuadratureError, is_infinite

EPSREL = 1e-11
EPSABS = 1e-15
_EXP_CUT = 50.0
_PANEL_RATIO = 4.0
_QUAD_LIMIT = 200
_LOG_X_CAP = 600.0


def _check_hurst(H):
    if not 0.0 < H < 0.5:
        raise DomainError(f"H must lie in (0, 1/2), got {H}")


# ----------------------------------------------------------------------------
# density components


class DensityComponent:
    """Base class for absolutely continuous parts of a Bernstein measure.

    Subclasses describe their density relative to the left end ``support_lo``
    through :meth:`density_offset`, so that the distance to a singular endpoint
    is never formed by cancellation.
    """

    support_lo: float
    support_hi: float = math.inf
    # density ~ (x - lo)**endpoint_exponent near lo
    endpoint_exponent: float = 0.0
    # density ~ x**(-tail_exponent) * exp(-tail_rate * x) at infinity
    tail_exponent: float = 0.0
    tail_rate: float = 0.0
    scale_hint: float = 1.0

    def density_offset(self, d: float) -> float:
        raise NotImplementedError

    def density(self, x):
        """Density at ``x`` (vectorised); zero outside the support."""
        def one(v):
            if self.support_lo < v < self.support_hi:
                return self.density_offset(v - self.support_lo)
            return 0.0

        out = np.vectorize(one, otypes=[float])(x)
        return out if out.ndim else float(out)

    def scaled(self, c: float) -> DensityComponent:
        raise NotImplementedError


@dataclass(frozen=True)
class GammaDensity(DensityComponent):
    """``scale * (x - beta)**(-H-1/2) / Gamma(1/2 - H)`` on ``(beta, inf)``.

    With ``beta = 0`` this is the measure of the power-law kernel
    ``t**(H-1/2)``; in general it produces ``exp(-beta t) t**(H-1/2)``.
    """

    beta: float
    H: float
    scale: float = 1.0

    def __post_init__(self):
        _check_hurst(self.H)
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")

    @property
    def support_lo(self):
        return self.beta

    @property
    def kappa(self):
        return self.H + 0.5

    @property
    def coef(self):
        return self.scale / math.gamma(0.5 - self.H)

    @property
    def endpoint_exponent(self):
        return -self.kappa

    @property
    def tail_exponent(self):
        return self.kappa

    @property
    def scale_hint(self):
        return 1.0 + self.beta

    def density_offset(self, d):
        return self.coef * d ** (-self.kappa)

    def scaled(self, c):
        return replace(self, scale=self.scale * c)


@dataclass(frozen=True)
class MittagLefflerDensity(DensityComponent):
    """Measure of the resolvent ``lam t**(a-1) E_{a,a}(-lam t**a)``, ``a = H + 1/2``.

    Density ``(lam/pi) x**a sin(pi a) / (x**(2a) + 2 lam x**a cos(pi a) + lam**2)``
    on ``(0, inf)``.
    """

    lam: float
    H: float
    scale: float = 1.0

    def __post_init__(self):
        _check_hurst(self.H)
        if self.lam <= 0:
            raise DomainError(f"lam must be positive, got {self.lam}")

    support_lo = 0.0

    @property
    def alpha(self):
        return self.H + 0.5

    @property
    def endpoint_exponent(self):
        return self.alpha

    @property
    def tail_exponent(self):
        return self.alpha

    @property
    def scale_hint(self):
        return self.lam ** (1.0 / self.alpha)

    def density_offset(self, d):
        a, lam = self.alpha, self.lam
        xa = d**a
        den = xa * xa + 2.0 * lam * xa * math.cos(math.pi * a) + lam * lam
        return self.scale * lam / math.pi * xa * math.sin(math.pi * a) / den

    def scaled(self, c):
        return replace(self, scale=self.scale * c)


@dataclass(frozen=True)
class DampedShift(DensityComponent):
    """Translate of ``inner`` by ``shift``: density ``inner(x - shift)``."""

    inner: DensityComponent
    shift: float

    @property
    def support_lo(self):
        return self.inner.support_lo + self.shift

    @property
    def support_hi(self):
        return self.inner.support_hi + self.shift

    @property
    def endpoint_exponent(self):
        return self.inner.endpoint_exponent

    @property
    def tail_exponent(self):
        return self.inner.tail_exponent

    @property
    def tail_rate(self):
        return self.inner.tail_rate

    @property
    def scale_hint(self):
        return self.inner.scale_hint + self.shift

    def density_offset(self, d):
        return self.inner.density_offset(d)

    def scaled(self, c):
        return replace(self, inner=self.inner.scaled(c))


@dataclass(frozen=True)
class ExpWeighted(DensityComponent):
    """``exp(-eps x) * inner(x)``: the measure of the shifted kernel ``K(t + eps)``."""

    inner: DensityComponent
    eps: float

    @property
    def support_lo(self):
        return self.inner.support_lo

    @property
    def support_hi(self):
        return self.inner.support_hi

    @property
    def endpoint_exponent(self):
        return self.inner.endpoint_exponent

    @property
    def tail_exponent(self):
        return self.inner.tail_exponent

    @property
    def tail_rate(self):
        return self.inner.tail_rate + self.eps

    @property
    def scale_hint(self):
        return min(self.inner.scale_hint, self.support_lo + 1.0 / self.eps)

    def density_offset(self, d):
        return math.exp(-self.eps * (self.support_lo + d)) * self.inner.density_offset(d)

    def scaled(self, c):
        return replace(self, inner=self.inner.scaled(c))


@dataclass(frozen=True)
class Restricted(DensityComponent):
    """``inner`` restricted to ``x < hi``; used when summing truncated measures."""

    inner: DensityComponent
    hi: float

    @property
    def support_lo(self):
        return self.inner.support_lo

    @property
    def support_hi(self):
        return min(self.hi, self.inner.support_hi)

    @property
    def endpoint_exponent(self):
        return self.inner.endpoint_exponent

    @property
    def tail_exponent(self):
        return self.inner.tail_exponent

    @property
    def tail_rate(self):
        return self.inner.tail_rate

    @property
    def scale_hint(self):
        return self.inner.scale_hint

    def density_offset(self, d):
        return self.inner.density_offset(d)

    def scaled(self, c):
        return replace(self, inner=self.inner.scaled(c))


def _translated(comp: DensityComponent, beta: float) -> DensityComponent:
    # ExpWeighted commutes with translation only up to a constant factor
    if isinstance(comp, ExpWeighted):
        inner = _translated(comp.inner, beta)
        return ExpWeighted(inner.scaled(math.exp(comp.eps * beta)), comp.eps)
    if isinstance(comp, Restricted):
        return Restricted(_translated(comp.inner, beta), comp.hi + beta)
    if isinstance(comp, DampedShift):
        return DampedShift(comp.inner, comp.shift + beta)
    return DampedShift(comp, beta)


# ----------------------------------------------------------------------------
# integration against a single component


@dataclass(frozen=True)
class Multiplier:
    """A multiplier ``g(x)`` and its asymptotics, needed to place substitutions.

    ``g(x) ~ x**e0`` as ``x -> 0`` and ``g(x) ~ x**einf * exp(-rate x)`` as
    ``x -> inf``.
    """

    fn: Callable[[float], float]
    e0: float = 0.0
    einf: float = 0.0
    rate: float = 0.0


def power_exp(theta=0.0, t=0.0) -> Multiplier:
    """Multiplier ``x**theta * exp(-t x)``."""
    if theta == 0.0:
        fn = (lambda x: math.exp(-t * x)) if t else (lambda x: 1.0)
    elif t == 0.0:
        fn = lambda x: x**theta  # noqa: E731
    else:
        fn = lambda x: x**theta * math.exp(-t * x)  # noqa: E731
    return Multiplier(fn, e0=theta, einf=theta, rate=t)


class _Acc:
    """Collects quad results and their error reports."""

    def __init__(self):
        self.values = []
        self.errors = []
        self.failed = []

    def quad(self, f, a, b, **kw):
        if not b > a:
            return
        res = integrate.quad(
            f, a, b, epsabs=EPSABS, epsrel=EPSREL, limit=_QUAD_LIMIT, full_output=1, **kw
        )
        self.values.append(res[0])
        self.errors.append(res[1])
        if len(res) > 3:
            self.failed.append(res[3])

    def add_exact(self, v):
        self.values.append(v)

    @property
    def value(self):
        return math.fsum(self.values)

    @property
    def abserr(self):
        return math.fsum(self.errors)


def _integrate_component(comp, g: Multiplier, lo, hi, acc: _Acc):
    s_lo = comp.support_lo
    a = max(lo, s_lo)
    b = min(hi, comp.support_hi)
    if not b > a:
        return None
    e = comp.endpoint_exponent
    if s_lo == 0.0:
        e += g.e0
    e = min(e, 0.0)
    if a == s_lo and e <= -1.0:
        return INFINITE

    rate = g.rate + comp.tail_rate
    w = comp.scale_hint
    if rate > 0:
        w = min(w, 1.0 / rate)
    w = max(w, 1e-12)

    def f(x):
        return g.fn(x) * comp.density_offset(x - s_lo)

    # singular zone [s_lo, s_lo + w]
    z_hi = min(b, s_lo + w)
    if a < z_hi:
        if e < 0:
            k = 1.0 + e

            def fy(y):
                d = y ** (1.0 / k)
                if d <= 0.0:
                    return 0.0
                return g.fn(s_lo + d) * comp.density_offset(d) * d ** (-e) / k

            acc.quad(fy, (a - s_lo) ** k, (z_hi - s_lo) ** k)
        else:
            acc.quad(f, a, z_hi)
    start = max(a, z_hi)
    if not b > start:
        return None

    if math.isinf(b):
        if rate > 0:
            stop = s_lo + (_EXP_CUT + max(g.einf, 0.0) * math.log1p(_EXP_CUT / rate)) / rate
            stop = max(stop, start)
            tail = None
        else:
            q = g.einf - comp.tail_exponent
            if q >= -1.0:
                return INFINITE
            stop = max(start, s_lo + 4.0 * (comp.scale_hint + abs(s_lo)))
            tail = -1.0 - q
    else:
        stop, tail = b, None

    # geometric panels on [start, stop]
    edge = start
    width = max(start - s_lo, w)
    while edge < stop:
        nxt = min(stop, s_lo + width * _PANEL_RATIO)
        if nxt <= edge:
            nxt = stop
        acc.quad(f, edge, nxt)
        edge = nxt
        width = nxt - s_lo

    if tail is not None:
        A, s = stop, tail

        logA = math.log(A)

        def fv(v):
            if v <= 0.0:
                return 0.0
            # the v-integrand tends to a constant as v -> 0; freezing x at
            # e^600 keeps both factors finite when s is small
            lx = min(logA - math.log(v) / s, _LOG_X_CAP)
            return f(math.exp(lx)) * (A / s) * math.exp((1.0 + s) * (lx - logA))

        acc.quad(fv, 0.0, 1.0)
    return None


# ----------------------------------------------------------------------------
# the measure


@dataclass(frozen=True)
class BernsteinMeasure:
    """Non-negative measure ``mu`` with ``K(t) = int exp(-x t) mu(dx)``.

    Parameters
    ----------
    atoms : tuple of (location, mass)
        Dirac components, location >= 0 and mass > 0.
    densities : tuple of DensityComponent
    upper_cutoff : float or None
        Restrict the support to ``[0, upper_cutoff)``.
    """

    atoms: tuple = ()
    densities: tuple = ()
    upper_cutoff: float | None = None

    def __post_init__(self):
        atoms = tuple((float(x), float(w)) for x, w in self.atoms)
        for x, w in atoms:
            if not (math.isfinite(x) and x >= 0):
                raise DomainError(f"atom location must be finite and >= 0, got {x}")
            if not w > 0:
                raise DomainError(f"atom mass must be positive, got {w}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "densities", tuple(self.densities))
        if self.upper_cutoff is not None and not self.upper_cutoff > 0:
            raise DomainError("upper_cutoff must be positive")

    @property
    def hi(self):
        return math.inf if self.upper_cutoff is None else self.upper_cutoff

    def is_empty(self):
        return not self.atoms and not self.densities

    def integrate(self, g: Multiplier, lo=0.0, hi=math.inf, full_output=False):
        """``int_{[lo, hi)} g(x) mu(dx)``; returns :data:`INFINITE` if divergent."""
        hi = min(hi, self.hi)
        acc = _Acc()
        if hi > lo:
            for x, w in self.atoms:
                if lo <= x < hi:
                    if x == 0.0 and g.e0 < 0:
                        return (INFINITE, 0.0) if full_output else INFINITE
                    acc.add_exact(w * g.fn(x))
            for comp in self.densities:
                if _integrate_component(comp, g, lo, hi, acc) is INFINITE:
                    return (INFINITE, 0.0) if full_output else INFINITE
        value = acc.value
        if acc.failed and acc.abserr > 1e-7 * abs(value) + 1e-12:
            raise QuadratureError(
                f"quadrature did not converge: {acc.failed[0]}", value, acc.abserr
            )
        return (value, acc.abserr) if full_output else value

    def scaled(self, c):
        return BernsteinMeasure(
            tuple((x, w * c) for x, w in self.atoms),
            tuple(d.scaled(c) for d in self.densities),
            self.upper_cutoff,
        )

    def exp_weighted(self, eps):
        """Measure of ``t -> K(t + eps)``."""
        atoms = tuple((x, w * math.exp(-x * eps)) for x, w in self.atoms)
        atoms = tuple(a for a in atoms if a[1] > 0)
        return BernsteinMeasure(
            atoms, tuple(ExpWeighted(d, eps) for d in self.densities), self.upper_cutoff
        )

    def translated(self, beta):
        """Measure of ``t -> exp(-beta t) K(t)``."""
        if beta == 0:
            return self
        cut = None if self.upper_cutoff is None else self.upper_cutoff + beta
        return BernsteinMeasure(
            tuple((x + beta, w) for x, w in self.atoms),
            tuple(_translated(d, beta) for d in self.densities),
            cut,
        )

    def truncated(self, N):
        """Restriction to ``[0, N)``."""
        cut = N if self.upper_cutoff is None else min(N, self.upper_cutoff)
        return BernsteinMeasure(
            tuple(a for a in self.atoms if a[0] < cut), self.densities, cut
        )

    def _pushed_down(self):
        if self.upper_cutoff is None:
            return self.densities
        return tuple(Restricted(d, self.upper_cutoff) for d in self.densities)

    def __add__(self, other):
        if not isinstance(other, BernsteinMeasure):
            return NotImplemented
        if self.upper_cutoff == other.upper_cutoff:
            return BernsteinMeasure(
                self.atoms + other.atoms, self.densities + other.densities, self.upper_cutoff
            )
        return BernsteinMeasure(
            self.atoms + other.atoms, self._pushed_down() + other._pushed_down(), None
        )


def atom_measure(x, w=1.0):
    return BernsteinMeasure(atoms=((x, w),))


def eval_via_measure(measure: BernsteinMeasure, t, full_output=False):
    """``int exp(-x t) mu(dx)`` by quadrature.

    Parameters
    ----------
    measure : BernsteinMeasure
    t : float
        Positive time.
    full_output : bool
        Also return the accumulated absolute error estimate.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    return measure.integrate(power_exp(0.0, t), full_output=full_output)


def _gamma_moment(comp: GammaDensity, theta, lo, hi):
    # closed forms; None when not applicable
    kappa = comp.kappa
    if comp.beta == 0.0:
        e = theta - kappa + 1.0
        if lo == 0.0 and e <= 0:
            return INFINITE
        if math.isinf(hi):
            return INFINITE if e >= 0 else comp.coef * lo**e / (-e)
        if e == 0.0:
            return comp.coef * math.log(hi / lo)
        return comp.coef * (hi**e - lo**e) / e
    if lo <= comp.beta and math.isinf(hi):
        if kappa - theta - 1.0 <= 0:
            return INFINITE
        return (
            comp.coef
            * comp.beta ** (theta - kappa + 1.0)
            * special.beta(1.0 - kappa, kappa - theta - 1.0)
        )
    return None


def measure_moment(measure: BernsteinMeasure, theta, lo=0.0, hi=math.inf, method="auto"):
    """``int_{[lo, hi)} x**theta mu(dx)``, or :data:`INFINITE` if divergent.

    ``method="auto"`` uses Beta-function closed forms for Gamma-type densities
    where available; ``method="quad"`` forces quadrature.
    """
    if not lo < hi:
        raise DomainError("measure_moment needs lo < hi")
    if method not in ("auto", "quad"):
        raise DomainError(f"unknown method {method!r}")
    if method == "quad":
        return measure.integrate(power_exp(theta, 0.0), lo, hi)
    hi_eff = min(hi, measure.hi)
    total = []
    rest = []
    for comp in measure.densities:
        v = _gamma_moment(comp, theta, lo, hi_eff) if isinstance(comp, GammaDensity) else None
        if v is None:
            rest.append(comp)
        elif is_infinite(v):
            return INFINITE
        else:
            total.append(v)
    remainder = BernsteinMeasure(measure.atoms, tuple(rest), measure.upper_cutoff)
    v = remainder.integrate(power_exp(theta, 0.0), lo, hi)
    if is_infinite(v):
        return INFINITE
    return math.fsum(total + [v])


def measure_mass(measure, lo=0.0, hi=math.inf):
    """``mu([lo, hi))``."""
    return measure_moment(measure, 0.0, lo, hi)


__all__ = [
    "BernsteinMeasure",
    "DensityComponent",
    "GammaDensity",
    "MittagLefflerDensity",
    "DampedShift",
    "ExpWeighted",
    "Restricted",
    "Multiplier",
    "power_exp",
    "atom_measure",
    "eval_via_measure",
    "measure_moment",
    "measure_mass",
]
