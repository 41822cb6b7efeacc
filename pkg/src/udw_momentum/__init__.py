"""Momentum reconstruction from a pair of Unruh-deWitt detectors."""

from .distribution import (
    DistributionContext,
    TabulatedDensity,
    density,
    density_unnormalized,
    make_context,
    normalization_analytic,
    normalization_numeric,
    sample,
    tabulate,
)
from .errors import (
    ContractViolation,
    DegenerateGeometryError,
    InfeasibleError,
    QuadratureError,
    ResolutionError,
    UDWError,
)
from .kinematics import DetectorPair, ProcessParams, reconstruct_momenta, solve_classical_2d, validate_params
from .stats import best_guess, decay_exponent, shannon_entropy, tv_distance

__version__ = "0.1.0"
