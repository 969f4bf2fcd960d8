"""Spectral methods for quasiperiodic functions: projection method, quasiperiodic
spectral method, periodic approximation, and a Schrodinger solver built on them."""

from .core import (
    BoxAverageConfig,
    InjectivityError,
    ProjectionMatrix,
    QpCoefficientMap,
    box_mean,
    continuous_fourier_bohr,
    covering_radius,
    evaluate,
    frequency_box,
    index_box,
    min_singular_value,
    parent_seminorm,
    parseval_l2_norm,
    slice_modulo_points,
    sobolev_seminorm,
    validate_injectivity,
    verify_coefficient_equality,
)
from .pam import Convergent, PeriodicApproximant, convergents, diophantine_error, pam_error_eM, periodize
from .pm import (
    DiscreteCoefficients,
    TorusField,
    TorusGrid,
    aliasing_decompose,
    collocation_points,
    discrete_inner_product,
    forward_dft,
    interpolate,
    inverse_dft,
    sample_on_collocation,
)
from .qsm import TruncatedSpectrum, convolve, truncate, truncation_error
from .tqse import (
    RunReport,
    SolverBlowUp,
    TqseProblem,
    WaveState,
    default_problem,
    error_eN,
    os2_step,
    reference_solution,
    run,
)

__version__ = "0.1.0"
