"""Spectra of degenerating warped-product necks and their eigenvalue counts."""

from .errors import ConvergenceError, DomainError, InfeasibleError, WarpspecError
from .geometry import (
    MetricParams,
    neck_length,
    rho,
    t_of_tau,
    tau_of_t,
    transverse_eigenvalue,
    warp_factor,
)
from .lab import (
    CountingReport,
    CrossSectionModel,
    SpectralWindow,
    builtin_cross_sections,
    choose_r0,
    counting_function,
    cross_section,
    lowest_eigenvalue,
    prediction,
    sweep,
    transverse_contribution,
)
from .reduction import (
    ReducedProblem,
    essential_bottom,
    essential_interval,
    functions_potential,
    reduce,
    reduced_potential,
    transverse_effective_potential,
)
from .solver import (
    BC,
    CountResult,
    Method,
    SLProblem,
    count_below,
    count_below_phase,
    count_below_prufer,
    eigenvalues_in,
)

__version__ = "0.1.0"
