"""Multi-instant cognitive access: analytic model, optimizer and slot simulator."""

from .analytic import (
    AccessBreakdown,
    AccessPolicy,
    AnalyticMetrics,
    UnstableQueueError,
    access_breakdown,
    evaluate,
    is_stable,
    max_feasible_arrival,
    perfect_bound,
    primary_delay,
    primary_empty_probability,
    primary_service_rate,
    secondary_throughput,
)
from .channel import (
    INFINITE_RATE,
    Link,
    SystemParams,
    draw_success,
    num_instants,
    default_params,
    spectral_efficiency,
    success_probability,
)
from .optimizer import (
    OptimizationResult,
    OptimizerSettings,
    ProtocolVariant,
    VariantConstraints,
    grid_oracle,
    is_feasible,
    optimize,
    variant_constraints,
)
from .sensing import SensingProfile, default_profile, roc_at, validate

__version__ = "0.1.0"
