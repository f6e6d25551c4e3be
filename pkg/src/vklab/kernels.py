"""Completely monotone kernels and their Bernstein measures.

Each kernel form is a frozen dataclass carrying a normalisation ``c`` and
derives its :class:`~vklab.measure.BernsteinMeasure` lazily.  Closed forms are
used for evaluation wherever they exist; everything else falls back on the
measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .errors import INFINITE, DomainError, NonIntegrableError, is_infinite
from .measure import (
    BernsteinMeasure,
    GammaDensity,
    MittagLefflerDensity,
    Multiplier,
    eval_via_measure,
    measure_moment,
)
from .specfun import mittag_leffler

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _check_hurst(H, allow_half=False):
    ok = 0.0 < H < 0.5 or (allow_half and H == 0.5)
    if not ok:
        raise DomainError(f"H must lie in (0, 1/2{']' if allow_half else ')'}, got {H}")


@dataclass(frozen=True)
class Kernel:
    """Base class.  Subclasses set ``form`` and implement ``_measure``."""

    c: float = field(default=1.0, kw_only=True)

    form = "kernel"

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"normalisation c must be positive, got {self.c}")

    @property
    def scale(self) -> float:
        """Overall constant multiplying the unnormalised form (``c`` unless a subclass adds one)."""
        return self.c

    @cached_property
    def measure(self) -> BernsteinMeasure:
        return self._measure().scaled(self.scale) if self.scale != 1.0 else self._measure()

    def _measure(self) -> BernsteinMeasure:
        raise NotImplementedError

    def _closed(self, t):
        """Unnormalised closed form at array ``t > 0``, or None."""
        return None

    def singular_exponent(self) -> float:
        """``e`` such that ``K(t) ~ t**e`` as ``t -> 0`` (0 when bounded)."""
        return 0.0

    def _integral(self, a, b):
        """Unnormalised ``int_a^b K`` for arrays, or None."""
        return None

    def __call__(self, t):
        return eval_kernel(self, t)

    def __add__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return Sum((self, other))


@dataclass(frozen=True)
class Exponential(Kernel):
    """``c * exp(-beta t)``; ``beta = 0`` gives the constant kernel."""

    beta: float = 0.0
    form = "exponential"

    def __post_init__(self):
        super().__post_init__()
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")

    def _measure(self):
        return BernsteinMeasure(atoms=((self.beta, 1.0),))

    def _closed(self, t):
        return np.exp(-self.beta * t)

    def _integral(self, a, b):
        if self.beta == 0:
            return b - a
        return (np.exp(-self.beta * a) - np.exp(-self.beta * b)) / self.beta


@dataclass(frozen=True)
class PowerLaw(Kernel):
    """``c * t**(H - 1/2)`` with ``0 < H < 1/2``.

    ``normalization="gamma"`` divides by ``Gamma(H + 1/2)`` (the fractional
    Brownian / Riemann-Liouville convention); the default ``"bare"`` does not.
    """

    H: float = 0.3
    normalization: str = field(default="bare", kw_only=True)
    form = "power_law"

    def __post_init__(self):
        super().__post_init__()
        _check_hurst(self.H)
        if self.normalization not in ("bare", "gamma"):
            raise DomainError(f"normalization must be 'bare' or 'gamma', got {self.normalization!r}")

    @property
    def scale(self) -> float:
        if self.normalization == "bare":
            return self.c
        return self.c / math.gamma(self.H + 0.5)

    def _measure(self):
        return BernsteinMeasure(densities=(GammaDensity(0.0, self.H),))

    def _closed(self, t):
        return t ** (self.H - 0.5)

    def singular_exponent(self):
        return self.H - 0.5

    def _integral(self, a, b):
        k = self.H + 0.5
        return (b**k - a**k) / k


@dataclass(frozen=True)
class GammaKernel(Kernel):
    """``c * exp(-beta t) t**(H - 1/2)``; ``H = 1/2`` is the exponential kernel."""

    beta: float = 1.0
    H: float = 0.3
    form = "gamma"

    def __post_init__(self):
        super().__post_init__()
        _check_hurst(self.H, allow_half=True)
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")

    def _measure(self):
        if self.H == 0.5:
            return BernsteinMeasure(atoms=((self.beta, 1.0),))
        return BernsteinMeasure(densities=(GammaDensity(self.beta, self.H),))

    def _closed(self, t):
        return np.exp(-self.beta * t) * t ** (self.H - 0.5)

    def singular_exponent(self):
        return self.H - 0.5

    def _integral(self, a, b):
        k = self.H + 0.5
        scale = math.gamma(k) / self.beta**k
        return scale * (special.gammainc(k, self.beta * b) - special.gammainc(k, self.beta * a))


@dataclass(frozen=True)
class MLResolvent(Kernel):
    """Resolvent of ``lam * t**(H-1/2) / Gamma(H+1/2)``.

    ``R(t) = lam t**(a-1) E_{a,a}(-lam t**a)`` with ``a = H + 1/2``.
    """

    lam: float = 1.0
    H: float = 0.3
    form = "ml_resolvent"

    def __post_init__(self):
        super().__post_init__()
        _check_hurst(self.H)
        if not self.lam > 0:
            raise DomainError(f"lam must be positive, got {self.lam}")

    @property
    def alpha(self):
        return self.H + 0.5

    def _measure(self):
        return BernsteinMeasure(densities=(MittagLefflerDensity(self.lam, self.H),))

    def _closed(self, t):
        a = self.alpha
        return self.lam * t ** (a - 1.0) * mittag_leffler(a, a, -self.lam * t**a)

    def singular_exponent(self):
        return self.H - 0.5

    def antiderivative(self, t):
        """``int_0^t R = lam t**a E_{a,a+1}(-lam t**a)`` (unnormalised)."""
        a = self.alpha
        t = np.asarray(t, dtype=float)
        return self.lam * t**a * mittag_leffler(a, a + 1.0, -self.lam * t**a)

    def _integral(self, a, b):
        return self.antiderivative(b) - self.antiderivative(a)


@dataclass(frozen=True)
class Shifted(Kernel):
    """``c * K(t + eps)``."""

    inner: Kernel = None
    eps: float = 0.0
    form = "shifted"

    def __post_init__(self):
        super().__post_init__()
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")

    def _measure(self):
        return self.inner.measure.exp_weighted(self.eps)

    def _closed(self, t):
        if not _has_closed(self.inner):
            return None
        return eval_kernel(self.inner, t + self.eps)

    def _integral(self, a, b):
        return kernel_integral(self.inner, a + self.eps, b + self.eps, strict=True)


@dataclass(frozen=True)
class Damped(Kernel):
    """``c * exp(-beta t) K(t)``."""

    inner: Kernel = None
    beta: float = 0.0
    form = "damped"

    def __post_init__(self):
        super().__post_init__()
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")

    def _measure(self):
        return self.inner.measure.translated(self.beta)

    def _closed(self, t):
        if not _has_closed(self.inner):
            return None
        return np.exp(-self.beta * t) * eval_kernel(self.inner, t)

    def singular_exponent(self):
        return self.inner.singular_exponent()

    def _integral(self, a, b):
        eq = _damped_equivalent(self.inner, self.beta)
        return None if eq is None else kernel_integral(eq, a, b, strict=True)


def _damped_equivalent(inner, beta):
    c = inner.scale
    if isinstance(inner, Exponential):
        return Exponential(inner.beta + beta, c=c)
    if isinstance(inner, PowerLaw):
        return GammaKernel(beta, inner.H, c=c) if beta > 0 else inner
    if isinstance(inner, GammaKernel):
        return GammaKernel(inner.beta + beta, inner.H, c=c)
    return None


@dataclass(frozen=True)
class Truncated(Kernel):
    """``int_{[0,N)} exp(-x t) mu(dx)``: the kernel of the truncated measure."""

    inner: Kernel = None
    N: float = 1.0
    form = "truncated"

    def __post_init__(self):
        super().__post_init__()
        if not self.N > 0:
            raise DomainError(f"N must be positive, got {self.N}")

    def _measure(self):
        return self.inner.measure.truncated(self.N)

    def _closed(self, t):
        inner = self.inner
        if isinstance(inner, (PowerLaw, GammaKernel)) and not (
            isinstance(inner, GammaKernel) and inner.H == 0.5
        ):
            beta = getattr(inner, "beta", 0.0)
            k = inner.H + 0.5
            if self.N <= beta:
                return np.zeros_like(t)
            # int_beta^N exp(-xt) (x-beta)^-k / Gamma(1-k) dx
            return inner.scale * np.exp(-beta * t) * t ** (k - 1.0) * special.gammainc(
                1.0 - k, (self.N - beta) * t
            )
        if isinstance(inner, Exponential) or (isinstance(inner, GammaKernel) and inner.H == 0.5):
            keep = inner.beta < self.N
            return inner.scale * np.exp(-inner.beta * t) * keep
        return None


@dataclass(frozen=True)
class FiniteAtomic(Kernel):
    """``c * sum_i w_i exp(-x_i t)``; the multifactor kernel."""

    nodes: tuple = ()
    weights: tuple = ()
    form = "finite_atomic"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "nodes", tuple(float(x) for x in self.nodes))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.nodes) != len(self.weights):
            raise DomainError("nodes and weights differ in length")
        for x, w in zip(self.nodes, self.weights):
            if not (x >= 0 and w > 0):
                raise DomainError("nodes must be >= 0 and weights > 0")

    def _measure(self):
        return BernsteinMeasure(atoms=tuple(zip(self.nodes, self.weights)))

    def _closed(self, t):
        out = np.zeros_like(t)
        for x, w in zip(self.nodes, self.weights):
            out = out + w * np.exp(-x * t)
        return out

    def _integral(self, a, b):
        out = np.zeros_like(np.asarray(a, dtype=float) + b)
        for x, w in zip(self.nodes, self.weights):
            if x == 0:
                out = out + w * (b - a)
            else:
                out = out + w * (np.exp(-x * a) - np.exp(-x * b)) / x
        return out


@dataclass(frozen=True)
class Sum(Kernel):
    """Sum of kernels."""

    terms: tuple = ()
    form = "sum"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise DomainError("Sum needs at least one term")

    def _measure(self):
        m = self.terms[0].measure
        for k in self.terms[1:]:
            m = m + k.measure
        return m

    def _closed(self, t):
        if not all(_has_closed(k) for k in self.terms):
            return None
        return sum(eval_kernel(k, t) for k in self.terms)

    def singular_exponent(self):
        return min(k.singular_exponent() for k in self.terms)

    def _integral(self, a, b):
        parts = [kernel_integral(k, a, b, strict=True) for k in self.terms]
        if any(p is None for p in parts):
            return None
        return sum(parts)


def _has_closed(kernel):
    return kernel._closed(np.ones(1)) is not None


# ----------------------------------------------------------------------------
# operations


def eval_kernel(kernel: Kernel, t):
    """``c * K(t)`` for ``t > 0``, closed form when available.

    Parameters
    ----------
    kernel : Kernel
    t : float or array_like
        Strictly positive times.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("kernels are evaluated at t > 0 only")
    out = kernel._closed(arr)
    if out is None:
        out = np.vectorize(lambda s: eval_via_measure(kernel.measure, s), otypes=[float])(arr)
        return out if np.ndim(out) else float(out)
    out = kernel.scale * out
    return out if np.ndim(out) else float(out)


def kernel_integral(kernel: Kernel, a, b, strict=False):
    """``int_a^b c K(s) ds`` for ``0 <= a <= b`` (vectorised).

    Closed forms where available; bounded kernels with a closed form use
    10-point Gauss-Legendre per interval; otherwise the measure route
    ``int (exp(-x a) - exp(-x b)) / x mu(dx)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    raw = kernel._integral(a, b)
    if raw is not None:
        return kernel.scale * raw
    if strict:
        return None
    if kernel.singular_exponent() == 0.0 and _has_closed(kernel):
        a_, b_ = np.broadcast_arrays(a, b)
        half = 0.5 * (b_ - a_)
        # interior Gauss nodes are > 0 unless the interval is empty
        s = (0.5 * (a_ + b_))[..., None] + half[..., None] * _GL_NODES
        s = np.where(half[..., None] > 0, s, 1.0)
        vals = np.asarray(eval_kernel(kernel, s))
        return half * (vals @ _GL_WEIGHTS)
    return np.vectorize(lambda lo, hi: _measure_integral(kernel.measure, lo, hi), otypes=[float])(
        a, b
    )


def _measure_integral(measure, a, b):
    h = b - a
    if h == 0:
        return 0.0

    def fn(x):
        # exp(-x a) * (1 - exp(-x h)) / x, with the x -> 0 limit h
        y = x * h
        core = h if y == 0 else -math.expm1(-y) / x
        return math.exp(-x * a) * core

    return measure.integrate(Multiplier(fn, e0=0.0, einf=-1.0, rate=a))


def cell_averages(kernel: Kernel, dt: float, count: int):
    """``Kbar_l = dt^-1 int_{(l-1)dt}^{l dt} K``, ``l = 1..count``."""
    edges = dt * np.arange(count + 1, dtype=float)
    return kernel_integral(kernel, edges[:-1], edges[1:]) / dt


def lgamma_norm(kernel: Kernel, gamma: float, T: float):
    """``(int_0^T K(s)**gamma ds)**(1/gamma)``.

    Raises
    ------
    NonIntegrableError
        When ``K**gamma`` is not integrable at 0.
    """
    if gamma < 1:
        raise DomainError(f"gamma must be >= 1, got {gamma}")
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    e = gamma * kernel.singular_exponent()
    if e <= -1.0:
        raise NonIntegrableError(
            f"K**gamma ~ t**{e:.6g} is not integrable at 0 (need gamma < 2/(1-2H))"
        )
    c = kernel.scale
    if isinstance(kernel, Exponential):
        if kernel.beta == 0:
            return c * T ** (1.0 / gamma)
        r = gamma * kernel.beta
        return c * (-math.expm1(-r * T) / r) ** (1.0 / gamma)
    if isinstance(kernel, PowerLaw):
        return c * (T ** (e + 1.0) / (e + 1.0)) ** (1.0 / gamma)
    if isinstance(kernel, GammaKernel):
        r = gamma * kernel.beta
        k = e + 1.0
        val = math.gamma(k) * r ** (-k) * special.gammainc(k, r * T)
        return c * val ** (1.0 / gamma)

    def f(s):
        # QAWS may sample the endpoint itself
        s = max(s, 1e-300)
        return eval_kernel(kernel, s) ** gamma * s ** (-e)

    head_end = min(T, 1.0)
    head, _ = integrate.quad(f, 0.0, head_end, weight="alg", wvar=(e, 0.0), limit=200)
    tail = 0.0
    if T > head_end:
        tail, _ = integrate.quad(lambda s: eval_kernel(kernel, s) ** gamma, head_end, T, limit=200)
    return (head + tail) ** (1.0 / gamma)


def mp_condition(kernel: Kernel, p: float):
    """``M_p = |int x**((2-p)/(2p)) mu(dx)|`` or :data:`INFINITE`."""
    if p < 2:
        raise DomainError(f"p must be >= 2, got {p}")
    v = measure_moment(kernel.measure, (2.0 - p) / (2.0 * p))
    return v if is_infinite(v) else abs(v)


def shift(kernel: Kernel, eps: float) -> Kernel:
    return Shifted(kernel, eps)


def damp(kernel: Kernel, beta: float) -> Kernel:
    return Damped(kernel, beta)


def truncate(kernel: Kernel, N: float) -> Kernel:
    return Truncated(kernel, N)


def is_completely_monotone(kernel: Kernel, ts=None, rtol=1e-10):
    """Sign check of first and second differences on a uniform grid.

    Differences are compared against ``rtol`` times the kernel scale to
    absorb rounding in the closed forms.
    """
    if ts is None:
        ts = np.round(np.arange(1, 51) * 0.1, 12)
    v = np.asarray(eval_kernel(kernel, np.asarray(ts, dtype=float)))
    tol = rtol * np.max(np.abs(v))
    d1 = np.diff(v)
    d2 = np.diff(v, 2)
    return bool(np.all(v > 0) and np.all(d1 <= tol) and np.all(d2 >= -tol))


# ----------------------------------------------------------------------------
# JSON


def to_json(kernel: Kernel) -> dict:
    d = {"form": kernel.form}
    if isinstance(kernel, Exponential):
        d["beta"] = kernel.beta
    elif isinstance(kernel, PowerLaw):
        d["H"] = kernel.H
        if kernel.normalization != "bare":
            d["normalization"] = kernel.normalization
    elif isinstance(kernel, GammaKernel):
        d.update(beta=kernel.beta, H=kernel.H)
    elif isinstance(kernel, MLResolvent):
        d.update(lam=kernel.lam, H=kernel.H)
    elif isinstance(kernel, Shifted):
        d.update(eps=kernel.eps, inner=to_json(kernel.inner))
    elif isinstance(kernel, Damped):
        d.update(beta=kernel.beta, inner=to_json(kernel.inner))
    elif isinstance(kernel, Truncated):
        d.update(N=kernel.N, inner=to_json(kernel.inner))
    elif isinstance(kernel, FiniteAtomic):
        d.update(nodes=list(kernel.nodes), weights=list(kernel.weights))
    elif isinstance(kernel, Sum):
        d["terms"] = [to_json(k) for k in kernel.terms]
    d["c"] = kernel.c
    return d


def from_json(d: dict) -> Kernel:
    try:
        form = d["form"]
        c = float(d.get("c", 1.0))
        if form == "exponential":
            return Exponential(float(d.get("beta", 0.0)), c=c)
        if form == "power_law":
            return PowerLaw(float(d["H"]), c=c, normalization=d.get("normalization", "bare"))
        if form == "gamma":
            return GammaKernel(float(d["beta"]), float(d["H"]), c=c)
        if form == "ml_resolvent":
            return MLResolvent(float(d["lam"]), float(d["H"]), c=c)
        if form == "shifted":
            return Shifted(from_json(d["inner"]), float(d["eps"]), c=c)
        if form == "damped":
            return Damped(from_json(d["inner"]), float(d["beta"]), c=c)
        if form == "truncated":
            return Truncated(from_json(d["inner"]), float(d["N"]), c=c)
        if form == "finite_atomic":
            return FiniteAtomic(tuple(d["nodes"]), tuple(d["weights"]), c=c)
        if form == "sum":
            return Sum(tuple(from_json(k) for k in d["terms"]), c=c)
    except KeyError as exc:
        raise DomainError(f"kernel descriptor missing field {exc}") from None
    raise DomainError(f"unknown kernel form {d.get('form')!r}")


__all__ = [
    "Kernel",
    "Exponential",
    "PowerLaw",
    "GammaKernel",
    "MLResolvent",
    "Shifted",
    "Damped",
    "Truncated",
    "FiniteAtomic",
    "Sum",
    "eval_kernel",
    "kernel_integral",
    "cell_averages",
    "lgamma_norm",
    "mp_condition",
    "shift",
    "damp",
    "truncate",
    "is_completely_monotone",
    "to_json",
    "from_json",
    "INFINITE",
]
