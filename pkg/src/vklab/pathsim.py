"""Monte Carlo simulation of stochastic Volterra integrals and equations.

Scalar drivers only.  Every Brownian path is generated by a Philox stream
keyed by ``(seed, path_index)``, so a path does not depend on how paths are
grouped or scheduled.  Ensembles are processed in fixed-size chunks of path
indices; per-path statistics are reassembled in path order and reduced with
``math.fsum``.  BLAS is pinned to one thread inside the simulation so the
floating-point result of each chunk does not depend on the worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import toeplitz
from threadpoolctl import threadpool_limits

from .errors import DivergedPathError, DomainError, WrongSchemeError
from .grid import TimeGrid
from .kernels import FiniteAtomic, Kernel, cell_averages, eval_kernel, kernel_integral
from .resolvent import resolvent_kernel

CHUNK = 256
DIVERGENCE_THRESHOLD = 1e12
Z95 = 1.959963984540054


# ----------------------------------------------------------------------------
# Brownian drivers


@dataclass(frozen=True)
class BrownianPath:
    grid: TimeGrid
    seed: int
    path_index: int
    increments: np.ndarray = field(repr=False)

    @property
    def W(self) -> np.ndarray:
        """Brownian values at the grid nodes, ``W_0 = 0``."""
        return np.concatenate(([0.0], np.cumsum(self.increments)))


def _stream(seed: int, path_index: int) -> np.random.Generator:
    if seed < 0 or path_index < 0:
        raise DomainError("seed and path_index must be non-negative")
    # 128-bit Philox key: (seed, path_index); the counter walks the steps
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(path_index)))


def sample_brownian(grid: TimeGrid, seed: int, path_index: int) -> BrownianPath:
    """Increments ``dW_k ~ N(0, dt)``, ``k = 0..steps-1``, for one path.

    The first ``m`` increments do not depend on ``grid.steps`` for a fixed
    ``dt``: a longer horizon extends the same path.
    """
    z = _stream(seed, path_index).standard_normal(grid.steps)
    return BrownianPath(grid, int(seed), int(path_index), z * math.sqrt(grid.dt))


def brownian_block(grid: TimeGrid, seed: int, indices) -> np.ndarray:
    """Increments of several paths, shape ``(len(indices), steps)``."""
    out = np.empty((len(indices), grid.steps))
    sq = math.sqrt(grid.dt)
    for r, i in enumerate(indices):
        out[r] = _stream(seed, int(i)).standard_normal(grid.steps) * sq
    return out


# ----------------------------------------------------------------------------
# SVE definitions


def constant(value: float) -> Callable:
    """Vectorised constant function of time or state."""
    return lambda x: np.full(np.shape(x), float(value))


@dataclass(frozen=True)
class SveSpec:
    """``X_t = x0(t) - lam int K(t-s) X_s ds + int K(t-s) phi(s) sigma(X_s) dW_s``.

    Parameters
    ----------
    x0 : callable
        Initial curve, vectorised in ``t``.
    sigma : callable
        Diffusion coefficient, vectorised in the state.
    kernel : Kernel
    lam : float
        Linear mean-reversion rate, ``>= 0``.
    phi : callable, optional
        Deterministic time factor of the diffusion (default 1).
    weights : {"auto", "cell", "point"}
        Discrete kernel weights; ``"auto"`` means point values for
        finite-atomic kernels and cell averages otherwise.
    """

    x0: Callable
    sigma: Callable
    kernel: Kernel
    lam: float = 0.0
    phi: Optional[Callable] = None
    weights: str = "auto"

    def __post_init__(self):
        if self.lam < 0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")
        if self.weights not in ("auto", "cell", "point"):
            raise DomainError(f"unknown weights {self.weights!r}")


def kernel_weights(kernel: Kernel, grid: TimeGrid, mode: str = "auto") -> np.ndarray:
    """Discrete kernel at lags ``l = 1..steps``.

    ``"cell"``: ``Kbar_l = dt**-1 int_{(l-1)dt}^{l dt} K``; ``"point"``:
    ``K(l dt)``.
    """
    if mode == "auto":
        mode = "point" if isinstance(kernel, FiniteAtomic) else "cell"
    if mode == "cell":
        return np.asarray(cell_averages(kernel, grid.dt, grid.steps), dtype=float)
    if mode == "point":
        return np.asarray(eval_kernel(kernel, grid.dt * np.arange(1, grid.steps + 1)), dtype=float)
    raise DomainError(f"unknown weights {mode!r}")


def _as_block(dW) -> np.ndarray:
    if isinstance(dW, BrownianPath):
        return dW.increments[None, :]
    dW = np.asarray(dW, dtype=float)
    return dW[None, :] if dW.ndim == 1 else dW


def _lower_toeplitz(w: np.ndarray) -> np.ndarray:
    return toeplitz(w, np.zeros_like(w))


def _atomic_sum(nodes, weights, g: np.ndarray, dt: float) -> np.ndarray:
    """``sum_{j<k} (sum_i w_i exp(-x_i (k-j) dt)) g_j`` for every ``k``.

    Evaluated factor by factor as ``s_{k+1} = rho_i (s_k + g_k)``, the same
    arithmetic as the Markovian lift, so both agree to the last bit.
    """
    M, steps = g.shape
    acc = np.zeros((M, steps + 1))
    for x, w in zip(nodes, weights):
        rho = math.exp(-x * dt)
        u = np.zeros(M)
        path = np.zeros((M, steps + 1))
        for k in range(steps):
            u = rho * (u + g[:, k])
            path[:, k + 1] = u
        acc = acc + w * path
    return acc


# ----------------------------------------------------------------------------
# stochastic Volterra integrals


def volterra_integral_path(kernel: Kernel, phi_path, bw, weights: str = "auto", grid=None):
    """``I_{t_k} = sum_{j<k} w_{k-j} phi_j dW_j`` for ``k = 0..steps``.

    Parameters
    ----------
    kernel : Kernel
    phi_path : array_like
        Integrand at ``t_0..t_{steps-1}`` (scalar broadcasts).
    bw : BrownianPath or ndarray
        One path, or increments of shape ``(M, steps)`` (then ``grid`` is
        required).
    weights : {"auto", "cell", "point"}

    Returns
    -------
    ndarray
        Shape ``(steps+1,)`` for one path, ``(M, steps+1)`` for a block.
    """
    single = isinstance(bw, BrownianPath) or np.ndim(bw) == 1
    if grid is None:
        if not isinstance(bw, BrownianPath):
            raise DomainError("grid is required with raw increments")
        grid = bw.grid
    dW = _as_block(bw)
    g = np.broadcast_to(np.asarray(phi_path, dtype=float), (grid.steps,)) * dW
    mode = weights
    if mode == "auto":
        mode = "point" if isinstance(kernel, FiniteAtomic) else "cell"
    if mode == "point" and isinstance(kernel, FiniteAtomic):
        out = _atomic_sum(kernel.nodes, [kernel.c * w for w in kernel.weights], g, grid.dt)
    else:
        w = kernel_weights(kernel, grid, mode)
        out = np.zeros((g.shape[0], grid.steps + 1))
        out[:, 1:] = g @ _lower_toeplitz(w).T
    return out[0] if single else out


def volterra_integral_terminal(kernel: Kernel, phi_path, dW, grid: TimeGrid, weights="auto"):
    """``I_T`` only, for increments of shape ``(M, steps)``."""
    w = kernel_weights(kernel, grid, weights)
    g = np.broadcast_to(np.asarray(phi_path, dtype=float), (grid.steps,)) * _as_block(dW)
    return g @ w[::-1]


# ----------------------------------------------------------------------------
# SVE solvers


def _phi_values(spec: SveSpec, grid: TimeGrid):
    t = grid.nodes[:-1]
    return np.ones_like(t) if spec.phi is None else np.asarray(spec.phi(t), dtype=float)


def _check(x, k):
    if not np.all(np.abs(x) <= DIVERGENCE_THRESHOLD):
        raise DivergedPathError(f"path left |X| <= {DIVERGENCE_THRESHOLD:g} at step {k}", k)


def sve_euler(spec: SveSpec, grid: TimeGrid, bw):
    """Left-point Euler scheme for the Volterra equation.

    ``X_k = x0(t_k) - lam sum_{j<k} w_{k-j} X_j dt + sum_{j<k} w_{k-j} phi_j sigma(X_j) dW_j``.
    Accepts one path or a block of increments; returns matching shape.
    """
    single = isinstance(bw, BrownianPath) or np.ndim(bw) == 1
    dW = _as_block(bw)
    M, steps = dW.shape
    if steps != grid.steps:
        raise DomainError("increments do not match the grid")
    w = kernel_weights(spec.kernel, grid, spec.weights)
    wr = w[::-1]
    x0 = np.asarray(spec.x0(grid.nodes), dtype=float) * np.ones(steps + 1)
    phi = _phi_values(spec, grid)
    X = np.empty((M, steps + 1))
    h = np.empty((M, steps))
    X[:, 0] = x0[0]
    for k in range(steps):
        xk = X[:, k]
        h[:, k] = phi[k] * spec.sigma(xk) * dW[:, k]
        if spec.lam:
            h[:, k] -= spec.lam * grid.dt * xk
        # X_{k+1} = x0 + sum_{j<=k} w_{k+1-j} h_j
        X[:, k + 1] = x0[k + 1] + h[:, : k + 1] @ wr[steps - k - 1 :]
        _check(X[:, k + 1], k + 1)
    return X[0] if single else X


@dataclass
class MultifactorPath:
    X: np.ndarray
    factors: Optional[np.ndarray] = None


def sve_multifactor(spec: SveSpec, grid: TimeGrid, bw, return_factors: bool = False):
    """Markovian lift for finite-atomic kernels.

    Factors evolve as ``U_{k+1} = rho_i (U_k + phi_k sigma(X_k) dW_k)`` and, when
    ``lam > 0``, ``V_{k+1} = rho_i (V_k + X_k dt)`` with ``rho_i = exp(-x_i dt)``;
    ``X_{k+1} = x0(t_{k+1}) - lam sum_i w_i V_i + sum_i w_i U_i``.

    Raises
    ------
    WrongSchemeError
        If the kernel is not finite-atomic.
    """
    kernel = spec.kernel
    if not isinstance(kernel, FiniteAtomic):
        raise WrongSchemeError(f"sve_multifactor needs a finite_atomic kernel, got {kernel.form}")
    single = isinstance(bw, BrownianPath) or np.ndim(bw) == 1
    dW = _as_block(bw)
    M, steps = dW.shape
    nodes = kernel.nodes
    wts = [kernel.c * w for w in kernel.weights]
    rho = [math.exp(-x * grid.dt) for x in nodes]
    n = len(nodes)
    x0 = np.asarray(spec.x0(grid.nodes), dtype=float) * np.ones(steps + 1)
    phi = _phi_values(spec, grid)
    U = [np.zeros(M) for _ in range(n)]
    V = [np.zeros(M) for _ in range(n)]
    X = np.empty((M, steps + 1))
    X[:, 0] = x0[0]
    fac = np.empty((n, M, steps + 1)) if return_factors else None
    if return_factors:
        fac[:, :, 0] = 0.0
    for k in range(steps):
        xk = X[:, k]
        g = phi[k] * spec.sigma(xk) * dW[:, k]
        noise = np.zeros(M)
        drift = np.zeros(M)
        for i in range(n):
            U[i] = rho[i] * (U[i] + g)
            noise = noise + wts[i] * U[i]
            if spec.lam:
                V[i] = rho[i] * (V[i] + xk * grid.dt)
                drift = drift + wts[i] * V[i]
            if return_factors:
                fac[i, :, k + 1] = U[i]
        X[:, k + 1] = (x0[k + 1] - spec.lam * drift) + noise
        _check(X[:, k + 1], k + 1)
    if single:
        return MultifactorPath(X[0], None if fac is None else fac[:, 0, :])
    return MultifactorPath(X, fac)


def simulate_sve(spec: SveSpec, grid: TimeGrid, bw):
    """Multifactor lift for finite-atomic kernels, Euler otherwise."""
    if isinstance(spec.kernel, FiniteAtomic) and spec.weights in ("auto", "point"):
        return sve_multifactor(spec, grid, bw).X
    return sve_euler(spec, grid, bw)


def linear_sve_variation_of_constants(x0, lam: float, H: float, phi_path, grid: TimeGrid, bw):
    """Solution of the linear SVE with kernel ``t**(H-1/2) / Gamma(H+1/2)``.

    ``X_t = x0(t) - int_0^t R(t-s) x0(s) ds + lam**-1 int_0^t R(t-s) phi(s) dW_s``
    with ``R`` the resolvent of ``lam K``; both convolutions use cell averages
    of ``R`` and left-point values of the integrands.

    Parameters
    ----------
    x0 : callable
        Initial curve.
    lam : float
        Mean-reversion rate, ``> 0``.
    H : float
        In ``(0, 1/2]``; ``1/2`` is the constant kernel.
    """
    if not lam > 0:
        raise DomainError(f"lam must be positive, got {lam}")
    single = isinstance(bw, BrownianPath) or np.ndim(bw) == 1
    dW = _as_block(bw)
    R = resolvent_kernel(lam, H)
    rbar = cell_averages(R, grid.dt, grid.steps)
    t = grid.nodes
    x0v = np.asarray(x0(t), dtype=float) * np.ones(grid.steps + 1)
    det = np.zeros(grid.steps + 1)
    det[1:] = grid.dt * np.convolve(rbar, x0v[:-1])[: grid.steps]
    g = np.broadcast_to(np.asarray(phi_path, dtype=float), (grid.steps,)) * dW
    sto = np.zeros((dW.shape[0], grid.steps + 1))
    sto[:, 1:] = g @ _lower_toeplitz(rbar).T / lam
    X = (x0v - det) + sto
    return X[0] if single else X


def resolvent_integral(lam: float, H: float, t):
    """``int_0^t R`` for the resolvent of ``lam t**(H-1/2) / Gamma(H+1/2)``."""
    R = resolvent_kernel(lam, H)
    t = np.asarray(t, dtype=float)
    return kernel_integral(R, np.zeros_like(t), t)


# ----------------------------------------------------------------------------
# ensembles and estimators


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo mean with standard error and a normal 95% interval.

    When the quantity is a supremum it is taken over grid nodes, which is a
    lower bound for the continuous-time supremum.
    """

    mean: float
    se: float
    ci_low: float
    ci_high: float
    n_paths: int
    grid_sup_lower_bound: bool = True

    def to_json(self):
        return {
            "mean": self.mean,
            "se": self.se,
            "ci95": [self.ci_low, self.ci_high],
            "n_paths": self.n_paths,
            "grid_sup_is_lower_bound": self.grid_sup_lower_bound,
        }


def estimate_mean(values) -> MomentEstimate:
    """Mean, standard error and normal 95% CI, summed in index order."""
    v = [float(x) for x in np.asarray(values, dtype=float).ravel()]
    M = len(v)
    if M < 2:
        raise DomainError("need at least two samples")
    mean = math.fsum(v) / M
    var = math.fsum((x - mean) ** 2 for x in v) / (M - 1)
    se = math.sqrt(var / M)
    return MomentEstimate(mean, se, mean - Z95 * se, mean + Z95 * se, M)


@dataclass
class PathEnsemble:
    """Per-path statistics of a simulated ensemble."""

    grid: TimeGrid
    seed: int
    p: float
    path_index: np.ndarray
    sup_abs: np.ndarray
    terminal: np.ndarray

    @property
    def n_paths(self) -> int:
        return len(self.path_index)

    @property
    def sup_abs_pow_p(self) -> np.ndarray:
        return self.sup_abs**self.p

    def to_csv(self, path):
        """Write ``path_index, sup_abs, sup_abs_pow_p, terminal_value``.

        Floats use the shortest round-trip representation.
        """
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["path_index", "sup_abs", "sup_abs_pow_p", "terminal_value"])
            for i, s, sp, t in zip(self.path_index, self.sup_abs, self.sup_abs_pow_p, self.terminal):
                wr.writerow([int(i), repr(float(s)), repr(float(sp)), repr(float(t))])


def run_chunks(fn: Callable, grid: TimeGrid, seed: int, M: int, workers: int = 1, chunk: int = CHUNK):
    """Apply ``fn(dW_block, indices)`` to fixed chunks of path indices.

    Returns the list of chunk results in path order.  Chunk boundaries depend
    only on ``M`` and ``chunk``, never on ``workers``.
    """
    if M < 1:
        raise DomainError("M must be >= 1")
    bounds = [(a, min(a + chunk, M)) for a in range(0, M, chunk)]

    def job(b):
        idx = np.arange(*b)
        return fn(brownian_block(grid, seed, idx), idx)

    with threadpool_limits(1):
        if workers <= 1:
            return [job(b) for b in bounds]
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(job, bounds))


def simulate_integral_ensemble(kernel, phi_path, grid, seed, M, p=2.0, workers=1, weights="auto"):
    """Ensemble of ``I = int K(t-s) phi(s) dW_s`` with per-path grid sups."""

    def fn(dW, idx):
        I = volterra_integral_path(kernel, phi_path, dW, weights, grid=grid)
        return idx, np.max(np.abs(I), axis=1), I[:, -1]

    parts = run_chunks(fn, grid, seed, M, workers)
    return PathEnsemble(
        grid,
        seed,
        p,
        np.concatenate([q[0] for q in parts]),
        np.concatenate([q[1] for q in parts]),
        np.concatenate([q[2] for q in parts]),
    )


def sup_moment_estimate(source, p: float, phi=None, grid=None, seed=None, M=None, workers=1):
    """``E[max_k |I_{t_k}|**p]`` with a 95% interval.

    ``source`` is either a :class:`PathEnsemble` or a kernel, in which case
    ``phi`` (values on ``t_0..t_{steps-1}`` or a scalar), ``grid``, ``seed``
    and ``M`` are required.
    """
    if p < 2:
        raise DomainError(f"p must be >= 2, got {p}")
    if isinstance(source, PathEnsemble):
        ens = source
    else:
        if grid is None or seed is None or M is None:
            raise DomainError("grid, seed and M are required when simulating")
        if M < 2:
            raise DomainError("M must be >= 2")
        ens = simulate_integral_ensemble(source, 1.0 if phi is None else phi, grid, seed, M, p, workers)
    return estimate_mean(ens.sup_abs**p)


def coupled_sup_values(spec1: SveSpec, spec2: SveSpec, grid, seed, M, p, workers=1):
    """Per-path ``max_k |X_k - Y_k|**p`` with both equations driven by the same path."""

    def fn(dW, idx):
        X = simulate_sve(spec1, grid, dW)
        Y = X if spec2 is spec1 else simulate_sve(spec2, grid, dW)
        return np.max(np.abs(X - Y), axis=1) ** p

    return np.concatenate(run_chunks(fn, grid, seed, M, workers))


def coupled_sup_distance(spec1: SveSpec, spec2: SveSpec, grid, seed, M, p, workers=1):
    """``E[max_k |X_{t_k} - Y_{t_k}|**p]`` with standard error."""
    return estimate_mean(coupled_sup_values(spec1, spec2, grid, seed, M, p, workers))


__all__ = [
    "TimeGrid",
    "BrownianPath",
    "SveSpec",
    "PathEnsemble",
    "MomentEstimate",
    "MultifactorPath",
    "sample_brownian",
    "brownian_block",
    "constant",
    "kernel_weights",
    "volterra_integral_path",
    "volterra_integral_terminal",
    "sve_euler",
    "sve_multifactor",
    "simulate_sve",
    "linear_sve_variation_of_constants",
    "resolvent_integral",
    "estimate_mean",
    "run_chunks",
    "simulate_integral_ensemble",
    "sup_moment_estimate",
    "coupled_sup_values",
    "coupled_sup_distance",
]
