"""Monte Carlo studies behind the ``vklab`` command.

Each study reads a :class:`StudyConfig`, shares Brownian paths between all
sweep points of a chunk, and returns a :class:`StudyReport` holding the
verdict, every constant that entered it, and plot-ready tables.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import kernels as kn
from .bdg import check_admissible, finite_horizon_bound, log_c_pdm, uniform_bound
from .errors import (
    BoundInapplicableError,
    ConfigError,
    DomainError,
    InadmissibleError,
    NonIntegrableError,
    is_infinite,
)
from .grid import TimeGrid
from .measure import measure_moment
from .markovian import (
    NODE_RULES,
    discretization_error_bound,
    discretize_measure,
    multifactor_kernel,
    truncation_error_bound,
)
from .pathsim import (
    SveSpec,
    constant,
    estimate_mean,
    linear_sve_variation_of_constants,
    run_chunks,
    simulate_integral_ensemble,
    simulate_sve,
    sup_moment_estimate,
    sve_euler,
    volterra_integral_path,
)

STUDIES = ("bdg-check", "shift-study", "multifactor-study", "uniform-study", "kernel-eval")


# ----------------------------------------------------------------------------
# diffusion coefficients and time factors


@dataclass(frozen=True)
class Sigma:
    """Named diffusion coefficient with its bound (``None`` if unbounded)."""

    name: str
    fn: Callable
    bound: Optional[float]
    lipschitz: float

    def __call__(self, x):
        return self.fn(x)


def make_sigma(desc) -> Sigma:
    """``"bounded"``, ``"linear_growth"`` or ``{"kind": "constant", "value": v}``.

    bounded: ``(1 + x^2)^{-1/2} + 0.5``; linear_growth: ``0.5 (1 + min(|x|, 10))``.
    """
    if isinstance(desc, str):
        desc = {"kind": desc}
    kind = desc.get("kind")
    if kind == "bounded":
        return Sigma("bounded", lambda x: 1.0 / np.sqrt(1.0 + x * x) + 0.5, 1.5, 0.65)
    if kind == "linear_growth":
        return Sigma(
            "linear_growth", lambda x: 0.5 * (1.0 + np.minimum(np.abs(x), 10.0)), None, 0.5
        )
    if kind == "constant":
        v = float(desc.get("value", 1.0))
        return Sigma(f"constant({v!r})", constant(v), abs(v), 0.0)
    raise ConfigError(f"unknown sigma {desc!r}; use bounded, linear_growth or constant")


@dataclass(frozen=True)
class Phi:
    """Deterministic time factor: ``constant`` or ``exp_decay`` (``e^{-rate s}``)."""

    kind: str = "constant"
    value: float = 1.0
    rate: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full(t.shape, self.value)
        return self.value * np.exp(-self.rate * t)

    def pnorm(self, p: float, T: float = math.inf) -> float:
        """``int_0^T |phi|^p ds``."""
        a = abs(self.value) ** p
        if self.kind == "constant":
            return math.inf if math.isinf(T) and a > 0 else a * (0.0 if a == 0 else T)
        r = p * self.rate
        if math.isinf(T):
            return a / r
        return a * -math.expm1(-r * T) / r

    @classmethod
    def from_json(cls, d) -> Phi:
        if d is None:
            return cls()
        if isinstance(d, (int, float)):
            return cls("constant", float(d))
        kind = d.get("kind", "constant")
        if kind not in ("constant", "exp_decay"):
            raise ConfigError(f"unknown phi kind {kind!r}; use constant or exp_decay")
        phi = cls(kind, float(d.get("value", 1.0)), float(d.get("rate", 1.0)))
        if kind == "exp_decay" and not phi.rate > 0:
            raise ConfigError("phi exp_decay rate must be positive")
        return phi

    def to_json(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        return {"kind": "exp_decay", "value": self.value, "rate": self.rate}


# ----------------------------------------------------------------------------
# configuration


_DEFAULTS = {
    "bdg-check": dict(T=1.0, steps=1024, paths=10_000),
    "shift-study": dict(T=1.0, steps=1024, paths=4000, p=2.0, delta=0.1, sigma="linear_growth"),
    "multifactor-study": dict(
        T=1.0, steps=512, paths=4000, p=2.0, delta=0.1, sigma="bounded", N_fixed=20.0,
        node_rule="midpoint",
    ),
    "uniform-study": dict(steps=1024, paths=10_000, mode="integral", lam=1.0, x0=1.0),
    "kernel-eval": dict(),
}


def _monotone(xs) -> bool:
    d = np.diff(np.asarray(xs, dtype=float))
    return bool(np.all(d > 0) or np.all(d < 0))


@dataclass
class StudyConfig:
    """Resolved study configuration.

    Only fields relevant to ``study`` are read; the others keep defaults.
    Sweep lists must be non-empty and strictly monotone.
    """

    study: str
    kernel: Optional[dict] = None
    p: Optional[float] = None
    gamma: Optional[float] = None
    T: float = 1.0
    steps: int = 1024
    paths: int = 10_000
    seed: int = 0
    workers: int = 1
    eps: list = field(default_factory=list)
    N: list = field(default_factory=list)
    n: list = field(default_factory=list)
    horizons: list = field(default_factory=list)
    t: list = field(default_factory=lambda: [0.25, 1.0, 4.0])
    delta: float = 0.1
    sigma: object = "bounded"
    phi: Optional[dict] = None
    x0: float = 1.0
    lam: float = 1.0
    H: Optional[float] = None
    mode: str = "integral"
    N_fixed: float = 20.0
    node_rule: str = "midpoint"
    slope_tolerance: Optional[float] = None

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> StudyConfig:
        d = dict(d)
        study = overrides.pop("study", None) or d.get("study")
        if study not in STUDIES:
            raise ConfigError(f"unknown study {study!r}; expected one of {STUDIES}")
        if d.get("study") not in (None, study):
            raise ConfigError(f"config is for {d['study']!r}, not {study!r}")
        merged = dict(_DEFAULTS[study])
        grid = d.pop("grid", None) or {}
        merged.update({k: grid[k] for k in ("T", "steps") if k in grid})
        merged.update(d)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        merged["study"] = study
        names = set(cls.__dataclass_fields__)
        unknown = sorted(set(merged) - names)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        try:
            cfg = cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path, **overrides) -> StudyConfig:
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d, **overrides)

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def sha256(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def make_kernel(self) -> kn.Kernel:
        if self.kernel is None:
            raise ConfigError(f"{self.study} needs a kernel descriptor")
        try:
            return kn.from_json(self.kernel)
        except DomainError as exc:
            raise ConfigError(f"invalid kernel: {exc}") from None

    def grid(self, T=None) -> TimeGrid:
        return TimeGrid(float(self.T if T is None else T), int(self.steps))

    def phi_fn(self) -> Phi:
        return Phi.from_json(self.phi)

    def _sweep(self, name, minimum=1):
        xs = getattr(self, name)
        if not isinstance(xs, (list, tuple)) or len(xs) < minimum:
            need = "a non-empty list" if minimum == 1 else f"at least {minimum} points"
            extra = "" if minimum == 1 else " (no regression possible with fewer)"
            raise ConfigError(f"sweep {name!r} needs {need}{extra}")
        xs = [float(x) for x in xs]
        if len(xs) > 1 and not _monotone(xs):
            raise ConfigError(f"sweep {name!r} must be sorted without repeats, got {xs}")
        if not all(x > 0 for x in xs):
            raise ConfigError(f"sweep {name!r} must be positive")
        setattr(self, name, xs)

    def validate(self):
        for name in ("steps", "paths", "seed", "workers"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
                raise ConfigError(f"{name} must be an integer, got {v!r}")
            setattr(self, name, int(v))
        if self.steps < 1 or self.paths < 2 or self.seed < 0 or self.workers < 1:
            raise ConfigError("need steps >= 1, paths >= 2, seed >= 0 and workers >= 1")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.study != "kernel-eval" and self.study != "uniform-study":
            if self.p is None:
                raise ConfigError(f"{self.study} needs p")
        if self.p is not None and not self.p >= 2:
            raise ConfigError(f"p must be >= 2, got {self.p}")
        getattr(self, "_validate_" + self.study.replace("-", "_"))()

    def _validate_bdg_check(self):
        self.make_kernel()
        if self.gamma is None:
            raise ConfigError("bdg-check needs gamma")
        try:
            check_admissible(float(self.p), float(self.gamma))
        except InadmissibleError as exc:
            raise ConfigError(str(exc)) from None

    def _power_law_H(self):
        k = self.make_kernel()
        if not isinstance(k, kn.PowerLaw):
            raise ConfigError(f"{self.study} needs a power_law kernel, got {k.form}")
        return k.H

    def _validate_shift_study(self):
        H = self._power_law_H()
        self._sweep("eps", minimum=3)
        if not 0 < self.delta < H:
            raise ConfigError(f"delta must lie in (0, H) = (0, {H}), got {self.delta}")
        make_sigma(self.sigma)

    def _validate_multifactor_study(self):
        k = self.make_kernel()
        if k.measure.atoms:
            raise ConfigError("multifactor-study needs a kernel whose measure has a density")
        self._sweep("N", minimum=3)
        self._sweep("n", minimum=3)
        if not all(float(n).is_integer() for n in self.n):
            raise ConfigError("n values must be integers")
        if self.node_rule not in NODE_RULES:
            raise ConfigError(f"node_rule must be one of {NODE_RULES}")
        if isinstance(k, kn.PowerLaw) and not 0 < self.delta < k.H:
            raise ConfigError(f"delta must lie in (0, H) = (0, {k.H}), got {self.delta}")
        if make_sigma(self.sigma).bound is None:
            raise ConfigError("multifactor-study needs a bounded sigma (bounded and Lipschitz)")

    def _validate_uniform_study(self):
        if self.p is None or not self.p > 2:
            raise ConfigError(f"uniform-study needs p > 2, got {self.p}")
        self._sweep("horizons", minimum=2)
        if self.horizons != sorted(self.horizons):
            raise ConfigError("horizons must increase")
        phi = self.phi_fn()
        if math.isinf(phi.pnorm(self.p)):
            raise ConfigError("int_0^inf |phi|^p must be finite: use exp_decay or phi = 0")
        if self.mode == "integral":
            k = self.make_kernel()
            Mp = kn.mp_condition(k, self.p)
            if is_infinite(Mp):
                raise ConfigError(
                    f"M_p = int x^((2-p)/(2p)) mu(dx) is infinite for p={self.p}: "
                    "uniform bound inapplicable"
                )
        elif self.mode == "linear_sve":
            if self.H is None or not 0 < self.H < 0.5:
                raise ConfigError("linear_sve mode needs H in (0, 1/2)")
            if not self.p > 1.0 / self.H:
                raise ConfigError(f"p must exceed 1/H = {1.0 / self.H:.6g}: uniform bound inapplicable")
            if not self.lam > 0:
                raise ConfigError("lam must be positive")
        else:
            raise ConfigError(f"mode must be integral or linear_sve, got {self.mode!r}")
        dt = self.horizons[-1] / self.steps
        for T in self.horizons:
            if abs(T / dt - round(T / dt)) > 1e-9:
                raise ConfigError(f"horizon {T} is not a multiple of dt = {dt}")

    def _validate_kernel_eval(self):
        self.make_kernel()
        if not self.t or not all(float(x) > 0 for x in self.t):
            raise ConfigError("t must be a non-empty list of positive times")


# ----------------------------------------------------------------------------
# report


@dataclass
class StudyReport:
    """Verdict, constants and tables of one study run.

    ``verdict`` is ``"PASS"``, ``"FAIL"`` or ``"COMPLETE"`` (no check).
    """

    study: str
    verdict: str
    config: StudyConfig
    summary: dict
    tables: dict = field(default_factory=dict)
    ensemble: object = None

    def to_json(self) -> dict:
        return _jsonable(
            {
                "study": self.study,
                "verdict": self.verdict,
                "config_sha256": self.config.sha256(),
                "seed": self.config.seed,
                "config": self.config.to_json(),
                "summary": self.summary,
                "tables": sorted(self.tables),
            }
        )

    def write(self, out_dir):
        """``result.json`` plus one CSV per table (and ``paths.csv``)."""
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "result.json"), "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        for name, (header, rows) in self.tables.items():
            write_csv(os.path.join(out_dir, f"{name}.csv"), header, rows)
        if self.ensemble is not None:
            self.ensemble.to_csv(os.path.join(out_dir, "paths.csv"))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if is_infinite(v):
        return "inf"
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if is_infinite(obj):
        return "inf"
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_json"):
        return _jsonable(obj.to_json())
    return obj


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _stack_chunks(parts):
    return np.concatenate(parts, axis=-1)


# ----------------------------------------------------------------------------
# comparison pairs


def comparison_pair_check(k1: kn.Kernel, k2: kn.Kernel) -> dict:
    """Whether ``k2`` and ``k1 - k2`` (or ``k2 - k1``) are completely monotone.

    Shift and truncation pairs are decided from their measures; other pairs
    are checked numerically by sign alternation of differences.
    """
    for a, b in ((k1, k2), (k2, k1)):
        if isinstance(b, kn.Shifted) and b.inner == a and b.c == 1.0:
            return {"method": "structural", "relation": "shift", "holds": True}
        if isinstance(b, kn.Truncated) and b.inner == a and b.c == 1.0:
            return {"method": "structural", "relation": "truncation", "holds": True}
    ts = np.round(np.arange(1, 51) * 0.1, 12)
    v1 = np.asarray(kn.eval_kernel(k1, ts))
    v2 = np.asarray(kn.eval_kernel(k2, ts))
    tol = 1e-10 * max(np.max(np.abs(v1)), np.max(np.abs(v2)))

    def cm(v):
        return bool(np.all(v >= -tol) and np.all(np.diff(v) <= tol) and np.all(np.diff(v, 2) >= -tol))

    holds = kn.is_completely_monotone(k2, ts) and (cm(v1 - v2) or cm(v2 - v1))
    return {"method": "numeric", "relation": "generic", "holds": holds}


# ----------------------------------------------------------------------------
# studies


def run_bdg_check(cfg: StudyConfig) -> StudyReport:
    """Monte Carlo ``E sup |int K phi dW|^p`` against the finite-horizon bound.

    PASS iff the upper end of the 95% interval lies below the right-hand side.
    """
    kernel = cfg.make_kernel()
    grid = cfg.grid()
    phi = cfg.phi_fn()
    p, gamma = float(cfg.p), float(cfg.gamma)
    try:
        bound = finite_horizon_bound(kernel, p, gamma, grid.T, phi_pnorm=phi.pnorm(p, grid.T))
    except (InadmissibleError, NonIntegrableError) as exc:
        raise ConfigError(str(exc)) from None
    ens = simulate_integral_ensemble(
        kernel, phi(grid.nodes[:-1]), grid, cfg.seed, cfg.paths, p, cfg.workers
    )
    est = sup_moment_estimate(ens, p)
    ok = est.ci_high <= bound.rhs
    summary = {
        "estimate": est,
        "rhs": bound.rhs,
        "ratio": est.mean / bound.rhs,
        "ratio_ci95": [est.ci_low / bound.rhs, est.ci_high / bound.rhs],
        "constants": bound,
        "kernel": kn.to_json(kernel),
        "phi": phi.to_json(),
    }
    return StudyReport(cfg.study, "PASS" if ok else "FAIL", cfg, summary, ensemble=ens)


def shift_norm_bound(H: float, delta: float, eps) -> float:
    """``eps**(H-delta) / sqrt(H-delta)``."""
    return np.asarray(eps, dtype=float) ** (H - delta) / math.sqrt(H - delta)


def shift_norm(kernel: kn.Kernel, eps: float, gamma: float, T: float) -> float:
    """``||K - K(. + eps)||_{L^gamma_T}`` by quadrature."""
    e = gamma * kernel.singular_exponent()

    def f(s):
        s = max(s, 1e-300)
        d = kn.eval_kernel(kernel, s) - kn.eval_kernel(kernel, s + eps)
        return d**gamma * (s ** (-e) if e else 1.0)

    head_end = min(T, eps)
    val, _ = integrate.quad(f, 0.0, head_end, weight="alg", wvar=(e, 0.0), limit=200)
    if T > head_end:
        tail, _ = integrate.quad(
            lambda s: (kn.eval_kernel(kernel, s) - kn.eval_kernel(kernel, s + eps)) ** gamma,
            head_end, T, limit=200,
        )
        val += tail
    return val ** (1.0 / gamma)


def run_shift_study(cfg: StudyConfig) -> StudyReport:
    """Coupled distance between the equations with ``K`` and ``K(. + eps)``.

    PASS iff the fitted log-log slope of ``E[sup|X - Y|^p]^{1/p}`` in ``eps``
    is at least ``H - slope_tolerance`` (default 0.15).
    """
    kernel = cfg.make_kernel()
    H, delta, p = kernel.H, float(cfg.delta), float(cfg.p)
    gamma = 2.0 / (1.0 - 2.0 * delta)
    tol = 0.15 if cfg.slope_tolerance is None else float(cfg.slope_tolerance)
    grid = cfg.grid()
    sigma = make_sigma(cfg.sigma)
    x0 = constant(cfg.x0)
    base = SveSpec(x0, sigma, kernel, phi=cfg.phi_fn() if cfg.phi else None)
    specs = [SveSpec(x0, sigma, kn.shift(kernel, e), phi=base.phi) for e in cfg.eps]

    def fn(dW, idx):
        X = sve_euler(base, grid, dW)
        rows = [np.max(np.abs(X - sve_euler(s, grid, dW)), axis=1) ** p for s in specs]
        rows.append(np.max(np.abs(X - X), axis=1) ** p)  # control: same spec twice
        return np.stack(rows)

    vals = _stack_chunks(run_chunks(fn, grid, cfg.seed, cfg.paths, cfg.workers))
    ests = [estimate_mean(v) for v in vals]
    dist = [e.mean ** (1.0 / p) for e in ests[:-1]]
    slope = loglog_slope(cfg.eps, dist)
    bounds = shift_norm_bound(H, delta, cfg.eps)
    norms = [shift_norm(kernel, e, gamma, grid.T) for e in cfg.eps]
    pairs = [comparison_pair_check(kernel, s.kernel) for s in specs]
    rows = []
    for e, est, d, b, nrm in zip(cfg.eps, ests, dist, bounds, norms):
        rows.append((e, est.mean, est.se, est.ci_low, est.ci_high, d, nrm, float(b)))
    c = ests[-1]
    rows.append(("control", c.mean, c.se, c.ci_low, c.ci_high, c.mean ** (1.0 / p), 0.0, 0.0))
    threshold = H - tol
    ok = slope >= threshold and c.mean == 0.0
    summary = {
        "H": H,
        "delta": delta,
        "gamma": gamma,
        "p": p,
        "sigma": sigma.name,
        "slope": slope,
        "slope_threshold": threshold,
        "target_rate": H - delta,
        "norm_slope": loglog_slope(cfg.eps, norms),
        "control_distance": c.mean,
        "comparison_pairs": pairs,
        "estimates": ests,
    }
    header = ["eps", "sup_pow_p_mean", "se", "ci_low", "ci_high", "distance",
              "kernel_norm", "kernel_norm_bound"]
    return StudyReport(cfg.study, "PASS" if ok else "FAIL", cfg, summary, {"sweep": (header, rows)})


def run_multifactor_study(cfg: StudyConfig) -> StudyReport:
    """Truncation and discretisation errors of the multifactor approximation.

    (i) ``X`` against ``X^N`` for each ``N`` (cell-averaged weights); the
    reference slope is that of :func:`truncation_error_bound`.  (ii) ``X^N``
    against the lift ``X^{N,n}`` at ``N_fixed`` for each ``n``; both use
    point weights so the difference reflects the kernels only.  PASS iff the
    N-slope is at most the reference plus 0.1 and the n-slope lies in
    ``-1 +/- 0.3`` (``slope_tolerance`` overrides both margins).
    """
    kernel = cfg.make_kernel()
    p, delta = float(cfg.p), float(cfg.delta)
    gamma = 2.0 / (1.0 - 2.0 * delta)
    grid = cfg.grid()
    sigma = make_sigma(cfg.sigma)
    x0 = constant(cfg.x0)
    phi = cfg.phi_fn() if cfg.phi else None
    Ns, ns, NF = cfg.N, [int(n) for n in cfg.n], float(cfg.N_fixed)

    base = SveSpec(x0, sigma, kernel, phi=phi)
    trunc = [SveSpec(x0, sigma, kn.truncate(kernel, N), phi=phi) for N in Ns]
    fixed = SveSpec(x0, sigma, kn.truncate(kernel, NF), phi=phi, weights="point")
    schemes = [discretize_measure(kernel.measure, NF, n, cfg.node_rule) for n in ns]
    lifts = [SveSpec(x0, sigma, multifactor_kernel(s), phi=phi) for s in schemes]

    def fn(dW, idx):
        X = sve_euler(base, grid, dW)
        rows = [np.max(np.abs(X - sve_euler(s, grid, dW)), axis=1) ** p for s in trunc]
        XN = sve_euler(fixed, grid, dW)
        rows += [np.max(np.abs(XN - simulate_sve(s, grid, dW)), axis=1) ** p for s in lifts]
        return np.stack(rows)

    vals = _stack_chunks(run_chunks(fn, grid, cfg.seed, cfg.paths, cfg.workers))
    ests = [estimate_mean(v) for v in vals]
    e_trunc, e_disc = ests[: len(Ns)], ests[len(Ns) :]
    d_trunc = [e.mean ** (1.0 / p) for e in e_trunc]
    d_disc = [e.mean ** (1.0 / p) for e in e_disc]
    tb = [truncation_error_bound(kernel.measure, N, gamma) for N in Ns]
    db = [discretization_error_bound(kernel.measure, NF, n) for n in ns]
    slope_N, slope_n = loglog_slope(Ns, d_trunc), loglog_slope(ns, d_disc)
    ref_N = loglog_slope(Ns, tb)
    tol_N = 0.1 if cfg.slope_tolerance is None else float(cfg.slope_tolerance)
    tol_n = 0.3 if cfg.slope_tolerance is None else float(cfg.slope_tolerance)
    ok_N = slope_N <= ref_N + tol_N
    ok_n = abs(slope_n + 1.0) <= tol_n
    header_t = ["N", "sup_pow_p_mean", "se", "ci_low", "ci_high", "distance", "truncation_bound"]
    rows_t = [(N, e.mean, e.se, e.ci_low, e.ci_high, d, b) for N, e, d, b in zip(Ns, e_trunc, d_trunc, tb)]
    header_d = ["n", "sup_pow_p_mean", "se", "ci_low", "ci_high", "distance",
                "discretization_bound", "factors"]
    rows_d = [
        (n, e.mean, e.se, e.ci_low, e.ci_high, d, b, len(s.nodes))
        for n, e, d, b, s in zip(ns, e_disc, d_disc, db, schemes)
    ]
    summary = {
        "p": p,
        "delta": delta,
        "gamma": gamma,
        "sigma": sigma.name,
        "N_fixed": NF,
        "node_rule": cfg.node_rule,
        "truncation": {
            "slope": slope_N,
            "reference_slope": ref_N,
            "threshold": ref_N + tol_N,
            "pass": ok_N,
        },
        "discretization": {
            "slope": slope_n,
            "window": [-1.0 - tol_n, -1.0 + tol_n],
            "mass_below_N": schemes[0].total_mass,
            "pass": ok_n,
        },
        "comparison_pairs": [comparison_pair_check(kernel, s.kernel) for s in trunc],
    }
    verdict = "PASS" if ok_N and ok_n else "FAIL"
    tables = {"truncation": (header_t, rows_t), "discretization": (header_d, rows_d)}
    return StudyReport(cfg.study, verdict, cfg, summary, tables)


def linear_sve_constants(lam: float, H: float, p: float, x0: float, phi_pnorm: float):
    """Pieces of the uniform bound for the linear equation with constant ``x0``.

    ``C_x = sup|x0| + lim |int_0^t R x0|`` and ``M_p(R)``; the stochastic part
    obeys the uniform bound with ``C_{p,1,1}`` and the total is assembled as
    ``2^{p-1} (C_x^p + lam^{-p} C_{p,1,1} M_p^p phi_pnorm)``.
    """
    from .resolvent import resolvent_kernel

    R = resolvent_kernel(lam, H)
    Mp = kn.mp_condition(R, p)
    if is_infinite(Mp):
        raise BoundInapplicableError(f"M_p of the resolvent is infinite for p={p}")
    # int_0^inf R = int x^-1 mu_lam(dx)
    unit = measure_moment(R.measure, -1.0)
    lim = abs(x0) * unit
    Cx = abs(x0) + lim
    Cpdm = math.exp(log_c_pdm(p))
    stoch = lam ** (-p) * Cpdm * Mp**p * phi_pnorm
    return {
        "resolvent_integral_limit": unit,
        "C_x": Cx,
        "M_p": Mp,
        "C_p_x_lam_mu": abs(x0) + lim + Mp**p,
        "C_pdm": Cpdm,
        "stochastic_rhs": stoch,
        "rhs": 2.0 ** (p - 1.0) * (Cx**p + stoch),
    }


def run_uniform_study(cfg: StudyConfig) -> StudyReport:
    """``E sup_{[0,T]} |X|^p`` on growing horizons against a uniform bound.

    One grid of ``steps`` cells covers the largest horizon; the estimate for a
    smaller horizon is the prefix supremum of the same paths.  PASS iff every
    upper 95% limit lies below the bound, the estimates do not decrease and
    the last increment is at most ``1/1.5`` of the one before.
    """
    p = float(cfg.p)
    phi = cfg.phi_fn()
    Tmax = cfg.horizons[-1]
    grid = cfg.grid(Tmax)
    cut = [int(round(T / grid.dt)) for T in cfg.horizons]
    phi_path = phi(grid.nodes[:-1])
    Phi_p = phi.pnorm(p)
    extra = {}
    if cfg.mode == "integral":
        kernel = cfg.make_kernel()
        bound = uniform_bound(kernel, p, phi_pnorm=Phi_p)
        rhs = bound.rhs
        extra = {"constants": bound, "kernel": kn.to_json(kernel)}

        def path(dW):
            return volterra_integral_path(kernel, phi_path, dW, grid=grid)

    else:
        H, lam = float(cfg.H), float(cfg.lam)
        consts = linear_sve_constants(lam, H, p, cfg.x0, Phi_p)
        rhs = consts["rhs"]
        x0 = constant(cfg.x0)
        det = linear_sve_variation_of_constants(x0, lam, H, 0.0, grid, np.zeros(grid.steps))
        consts["deterministic_sup"] = float(np.max(np.abs(det)))
        extra = {"constants": consts, "H": H, "lam": lam, "x0": cfg.x0}

        def path(dW):
            return linear_sve_variation_of_constants(x0, lam, H, phi_path, grid, dW)

    def fn(dW, idx):
        A = np.abs(path(dW))
        return np.stack([np.max(A[:, : c + 1], axis=1) ** p for c in cut])

    vals = _stack_chunks(run_chunks(fn, grid, cfg.seed, cfg.paths, cfg.workers))
    ests = [estimate_mean(v) for v in vals]
    means = [e.mean for e in ests]
    incs = list(np.diff(means))
    monotone = all(d >= 0 for d in incs)
    shrink = len(incs) < 2 or 1.5 * incs[-1] <= incs[-2]
    below = all(e.ci_high <= rhs for e in ests)
    header = ["T", "sup_pow_p_mean", "se", "ci_low", "ci_high", "increment", "rhs"]
    rows = [
        (T, e.mean, e.se, e.ci_low, e.ci_high, (means[i] - means[i - 1]) if i else 0.0, rhs)
        for i, (T, e) in enumerate(zip(cfg.horizons, ests))
    ]
    summary = {
        "mode": cfg.mode,
        "p": p,
        "phi": phi.to_json(),
        "phi_pnorm": Phi_p,
        "dt": grid.dt,
        "rhs": rhs,
        "below_rhs": below,
        "monotone": monotone,
        "increments_shrink": shrink,
        "increment_ratio": (incs[-2] / incs[-1]) if len(incs) >= 2 and incs[-1] > 0 else None,
        "estimates": ests,
        **extra,
    }
    ok = below and monotone and shrink
    return StudyReport(cfg.study, "PASS" if ok else "FAIL", cfg, summary, {"horizons": (header, rows)})


def run_kernel_eval(cfg: StudyConfig) -> StudyReport:
    """Table of ``K(t)`` from the closed form and from the measure."""
    from .measure import eval_via_measure

    kernel = cfg.make_kernel()
    rows = []
    worst = 0.0
    for t in cfg.t:
        t = float(t)
        a = kn.eval_kernel(kernel, t)
        b = eval_via_measure(kernel.measure, t)
        rel = abs(a - b) / abs(a) if a else abs(b)
        worst = max(worst, rel)
        rows.append((t, a, b, rel))
    summary = {"kernel": kn.to_json(kernel), "max_rel_diff": worst}
    header = ["t", "K_closed", "K_measure", "rel_diff"]
    return StudyReport(cfg.study, "COMPLETE", cfg, summary, {"kernel_eval": (header, rows)})


RUNNERS = {
    "bdg-check": run_bdg_check,
    "shift-study": run_shift_study,
    "multifactor-study": run_multifactor_study,
    "uniform-study": run_uniform_study,
    "kernel-eval": run_kernel_eval,
}


def run_study(cfg: StudyConfig) -> StudyReport:
    return RUNNERS[cfg.study](cfg)


__all__ = [
    "STUDIES",
    "Sigma",
    "Phi",
    "StudyConfig",
    "StudyReport",
    "make_sigma",
    "comparison_pair_check",
    "loglog_slope",
    "shift_norm",
    "shift_norm_bound",
    "linear_sve_constants",
    "run_bdg_check",
    "run_shift_study",
    "run_multifactor_study",
    "run_uniform_study",
    "run_kernel_eval",
    "run_study",
    "write_csv",
]
