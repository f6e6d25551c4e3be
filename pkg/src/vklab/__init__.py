"""Completely monotone Volterra kernels, BDG-type bounds and Monte Carlo checks."""

from .bdg import (
    BdgBoundReport,
    alpha_interval,
    bdg_constant_b,
    c_alpha_p_gamma,
    cbar,
    check_admissible,
    finite_horizon_bound,
    horizon_exponent,
    lemma_integrals,
    lemma_rhs,
    uniform_bound,
)
from .errors import (
    INFINITE,
    BoundInapplicableError,
    ConfigError,
    DivergedPathError,
    DomainError,
    EmptySchemeError,
    InadmissibleError,
    NonIntegrableError,
    QuadratureError,
    VklabError,
    WrongSchemeError,
    is_infinite,
)
from .grid import TimeGrid
from .kernels import (
    Damped,
    Exponential,
    FiniteAtomic,
    GammaKernel,
    Kernel,
    MLResolvent,
    PowerLaw,
    Shifted,
    Sum,
    Truncated,
    cell_averages,
    damp,
    eval_kernel,
    is_completely_monotone,
    kernel_integral,
    lgamma_norm,
    mp_condition,
    shift,
    truncate,
)
from .markovian import (
    MultifactorScheme,
    discretization_error_bound,
    discretize_measure,
    multifactor_kernel,
    power_law_tail_bound,
    truncation_error_bound,
)
from .measure import BernsteinMeasure, eval_via_measure, measure_mass, measure_moment
from .pathsim import (
    BrownianPath,
    MomentEstimate,
    PathEnsemble,
    SveSpec,
    coupled_sup_distance,
    linear_sve_variation_of_constants,
    sample_brownian,
    simulate_integral_ensemble,
    simulate_sve,
    sup_moment_estimate,
    sve_euler,
    sve_multifactor,
    volterra_integral_path,
)
from .resolvent import convolution_on_grid, resolvent_kernel, resolvent_residual
from .specfun import beta_fn, gamma_fn, log_gamma, mittag_leffler

__version__ = "0.1.0"
