"""Spontaneous-symmetry-breaking model of a quantum measurement.

Modules
-------
spin_dynamics      spin-1/2 relaxation: closed form, RK4, purity
order_parameter    Langevin order parameter, Gaussian statistics, noise tuning
measurement_model  coupled spin + order-parameter device and lock-in labels
ensemble           outcome frequencies, calibration curves, Born-rule fit
cli                command-line front end (``ssb-measure``)
"""

from .errors import ConfigurationError, DegenerateEnsembleError, DomainError, OptimizationError
from .spin_dynamics import (
    ReservoirCoefficients,
    SpinDensityMatrix,
    cl_purity_asymptote,
    evolve_analytic,
    evolve_numeric,
    fdr_rate,
    purity,
)
from .order_parameter import (
    LangevinParams,
    drift,
    em_step,
    gaussian_propagate,
    onset_time,
    optimization_z,
    p_minus,
    p_plus,
    tune_noise_for_z,
    variance_profile,
)
from .measurement_model import (
    CoupledState,
    MeasurementParams,
    TrajectoryRecord,
    coupled_step,
    lockin_outcome,
    rates_from_phi,
    run_trajectory,
)
from .ensemble import (
    BornFit,
    CalibrationPoint,
    EnsembleConfig,
    analytic_p_plus_at_t0,
    born_check,
    calibration_curve,
    run_ensemble,
)
from .noise import NoiseSource, derive_seed

__version__ = "0.1.0"
