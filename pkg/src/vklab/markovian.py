"""Multifactor (finite-atomic) approximation of a Bernstein measure.

The measure is truncated to ``[0, N)``, cut into ``n`` uniform cells
``[u_{i-1}, u_i)`` with ``u_i = i N / n``, and each cell is replaced by one
atom carrying its mass.  The resulting kernel is a weighted sum of ``n``
exponentials, so the driven Volterra process is a weighted sum of
Ornstein-Uhlenbeck factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import INFINITE, DomainError, EmptySchemeError, is_infinite
from .kernels import FiniteAtomic, Kernel
from .measure import BernsteinMeasure, measure_moment

NODE_RULES = ("left", "midpoint", "centroid")


@dataclass(frozen=True)
class MultifactorScheme:
    """Nodes and weights of ``sum_i w_i exp(-x_i t)``.

    Zero-mass cells are dropped, so ``len(nodes)`` may be smaller than ``n``.
    """

    N: float
    n: int
    nodes: tuple
    weights: tuple
    node_rule: str = "centroid"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(float(x) for x in self.nodes))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.nodes) != len(self.weights):
            raise DomainError("nodes and weights differ in length")

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "n": self.n,
            "nodes": list(self.nodes),
            "weights": list(self.weights),
            "node_rule": self.node_rule,
        }

    @classmethod
    def from_json(cls, d: dict) -> MultifactorScheme:
        return cls(
            float(d["N"]),
            int(d["n"]),
            tuple(d["nodes"]),
            tuple(d["weights"]),
            d.get("node_rule", "centroid"),
        )


def discretize_measure(measure: BernsteinMeasure, N: float, n: int, node_rule="centroid"):
    """Uniform-cell multifactor scheme for ``measure`` restricted to ``[0, N)``.

    Parameters
    ----------
    measure : BernsteinMeasure
    N : float
        Truncation level.
    n : int
        Number of cells.
    node_rule : {"left", "midpoint", "centroid"}
        Node inside each cell; the centroid is ``w_i**-1 int_cell x mu(dx)``.

    Raises
    ------
    EmptySchemeError
        If ``mu([0, N)) = 0``.
    """
    if node_rule not in NODE_RULES:
        raise DomainError(f"node_rule must be one of {NODE_RULES}, got {node_rule!r}")
    if not N > 0 or n < 1 or int(n) != n:
        raise DomainError("need N > 0 and integer n >= 1")
    n = int(n)
    nodes, weights = [], []
    for i in range(1, n + 1):
        lo, hi = (i - 1) * N / n, i * N / n
        w = measure_moment(measure, 0.0, lo, hi)
        if is_infinite(w):
            raise DomainError(f"measure has infinite mass on [{lo}, {hi})")
        if not w > 0:
            continue
        if node_rule == "left":
            x = lo
        elif node_rule == "midpoint":
            x = 0.5 * (lo + hi)
        else:
            x = measure_moment(measure, 1.0, lo, hi) / w
            # rounding can push the centroid onto the closed right end
            x = min(max(x, lo), math.nextafter(hi, lo))
        nodes.append(x)
        weights.append(w)
    if not weights:
        raise EmptySchemeError(f"measure has no mass on [0, {N})")
    return MultifactorScheme(float(N), n, tuple(nodes), tuple(weights), node_rule)


def multifactor_kernel(scheme: MultifactorScheme) -> Kernel:
    return FiniteAtomic(scheme.nodes, scheme.weights)


def truncation_error_bound(measure: BernsteinMeasure, N: float, gamma: float):
    """``int_{[N, inf)} x**(-1/gamma) mu(dx)``, or :data:`INFINITE`."""
    if not gamma > 2:
        raise DomainError(f"gamma must exceed 2, got {gamma}")
    v = measure_moment(measure, -1.0 / gamma, N, math.inf)
    return INFINITE if is_infinite(v) else v


def power_law_tail_bound(H: float, delta: float, N: float, c_mu=None) -> float:
    """``C_mu N**(delta - H) / (H - delta)`` for the power-law measure.

    With ``gamma = 2 / (1 - 2 delta)`` the tail moment of
    ``x**(-H-1/2) / Gamma(1/2-H)`` is exactly this with ``C_mu = 1/Gamma(1/2-H)``.
    """
    if not 0 <= delta < H:
        raise DomainError("need 0 <= delta < H")
    if c_mu is None:
        c_mu = 1.0 / math.gamma(0.5 - H)
    return c_mu * N ** (delta - H) / (H - delta)


def discretization_error_bound(measure: BernsteinMeasure, N: float, n: int) -> float:
    """``mu([0, N)) * N / n``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    mass = measure_moment(measure, 0.0, 0.0, N)
    if is_infinite(mass):
        raise DomainError(f"measure has infinite mass on [0, {N})")
    return mass * N / n
