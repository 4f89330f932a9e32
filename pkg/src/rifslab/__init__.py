"""rifslab: sampling and dimension estimation for contracting iterated maps
whose contraction ratios carry i.i.d. multiplicative errors.

The objects of study are value distributions of random series built from an
alphabet of affine maps x -> d_i + l_i * Y * x: a single error sequence is
frozen, words are drawn from a shift measure, and the package estimates
whether the resulting distribution looks absolutely continuous or singular,
and at what dimension.
"""

__version__ = "0.1.0"

from .error_laws import (
    ErrorLaw,
    PerturbedUniform,
    PiecewiseDensity,
    PowerLaw,
    law_from_dict,
)
from .estimators import (
    DensityDiagnostics,
    DimensionEstimate,
    Histogram,
    TransversalityEstimate,
    box_dimension,
    correlation_dimension,
    correlation_sum,
    density_diagnostics,
    local_dimension,
    support_measure,
    transversality_statistic,
)
from .exceptions import ConfigError, NotContractingError, NumericError, RifsLabError
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    SweepResult,
    arratia_preset,
    classify_regime,
    fibonacci_preset,
    run_experiment,
    sinai_preset,
    sweep,
)
from .fourier import (
    EnergyEstimate,
    SobolevEstimate,
    characteristic_product,
    empirical_characteristic,
    energy_integral,
    sobolev_dimension_estimate,
)
from .projection import (
    ErrorRealization,
    IfsSpec,
    SampleBatch,
    distance_phi,
    ifs_from_dict,
    lyapunov,
    lyapunov_mc,
    project,
    sample_measure,
    truncation_depth,
)
from .symbolic import Bernoulli, Markov, MaxEntropySFT, ShiftMeasure, measure_from_dict

__all__ = [
    "__version__",
    "Bernoulli",
    "ConfigError",
    "DensityDiagnostics",
    "DimensionEstimate",
    "EnergyEstimate",
    "ErrorLaw",
    "ErrorRealization",
    "ExperimentConfig",
    "ExperimentReport",
    "Histogram",
    "IfsSpec",
    "Markov",
    "MaxEntropySFT",
    "NotContractingError",
    "NumericError",
    "PerturbedUniform",
    "PiecewiseDensity",
    "PowerLaw",
    "RifsLabError",
    "SampleBatch",
    "ShiftMeasure",
    "SobolevEstimate",
    "SweepResult",
    "TransversalityEstimate",
    "arratia_preset",
    "box_dimension",
    "characteristic_product",
    "classify_regime",
    "correlation_dimension",
    "correlation_sum",
    "density_diagnostics",
    "distance_phi",
    "empirical_characteristic",
    "energy_integral",
    "fibonacci_preset",
    "ifs_from_dict",
    "law_from_dict",
    "local_dimension",
    "lyapunov",
    "lyapunov_mc",
    "measure_from_dict",
    "project",
    "run_experiment",
    "sample_measure",
    "sinai_preset",
    "sobolev_dimension_estimate",
    "support_measure",
    "sweep",
    "transversality_statistic",
    "truncation_depth",
]
