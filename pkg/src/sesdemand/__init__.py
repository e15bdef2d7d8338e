"""SES-consistent integer demand generation and base-stock inventory simulation."""

from .distfit import (
    BinomialMixture,
    FitVerificationError,
    GeometricMixture,
    InfeasibleMoments,
    NegBinMixture,
    NonIntegralPointMass,
    PointMass,
    Poisson,
    fit,
    moments,
    pmf,
    sample,
    sample_many,
)
from .dgp import BiasTable, DemandPath, arima_trajectory, batch, bias_study, next_demand, trajectory
from .forecast import ForecastState, InfeasibleState, feasible, ses_update
from .harness import (
    ExperimentConfig,
    FeasibilityError,
    SchemaError,
    parse_config,
    run_experiment,
    write_results,
)
from .inventory import (
    CostParams,
    InventoryState,
    PeriodRecord,
    RunMetrics,
    ZeroDemandWindow,
    inventory_position,
    run_episodes,
    simulate,
    step,
    summarize,
)
from .policy import (
    DomainError,
    FixedBaseStock,
    Method,
    PolicySpec,
    empirical_base_stock,
    graves_base_stock,
    normal_quantile,
    order_quantity,
)
from .rng import Stream

__version__ = "0.1.0"
