"""Ground states of Neumann Schroedinger operators with constrained two-layer networks."""
from .ansatz import TwoLayerNetwork, init, project, softplus_tau
from .errors import (
    AssumptionViolation,
    BarronGroundError,
    ConvergenceError,
    DegenerateSpectrumError,
    DegenerateTrialError,
    InvalidInputError,
    NumericError,
    ResourceError,
)
from .estimators import EvalReport, default_rule, empirical_losses, error_metrics, population_losses, sample
from .reference import GalerkinConfig, GroundTruth, barron_saturation, power_iterate, solve_ground_truth
from .spectral import CosineSeries, barron_norm, inner_product, series_multiply
from .theory_bounds import ClassParams, bounds_report, stability_check
from .trainer import TrainConfig, TrainResult, approximation_check, sweep, train

__version__ = "0.1.0"
