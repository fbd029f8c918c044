"""Position-auction simulation lab.

Alpha-virtual-value mechanisms over predicted relevances, prediction-scheme
refinement machinery, welfare/revenue trade-off property checks, and golden
reproductions of the worked integral examples.
"""

from .dists import (
    CertificationResult,
    Distribution,
    DomainError,
    Exponential,
    ParameterError,
    Tolerances,
    TruncatedShiftedEqualRevenue,
    Uniform,
    dist_from_json,
)
from .auction import (
    AdvertiserState,
    Assignment,
    AuctionInstance,
    OutcomeMetrics,
    SlotProfile,
    UnsupportedConfigurationError,
    allocate,
    evaluate,
    instance_from_json,
    objective,
    realized_value,
    realized_virtual_surplus,
    threshold_payments,
    welfare,
)
from .prediction import (
    FlipSpreadResult,
    GenerationError,
    PairClass,
    Part,
    PredictionScheme,
    RefinementStructure,
    ValidationResult,
    classify_pair,
    generate_flip_spread_refinement,
    is_flip_spread,
    nonflipspread_structure,
    scheme_from_json,
    sf_sj_structure,
    structure_from_json,
    structure_from_tables,
    validate_refinement,
)
from .analysis import (
    AppendixDelta,
    NumericError,
    QuadratureResult,
    Ranking,
    TradeoffConfig,
    TrialReport,
    appendix_delta,
    check_condition_helps,
    check_condition_hurts,
    check_rearrangement_exhaustive,
    figure2_sweep,
    loss_integral_coarseness,
    loss_integral_refinement,
    more_ordered,
    myerson_payment_identity,
    nonflipspread_welfare_gap,
    quadrature_1d,
    rearrangement_dot,
    s_bar,
    theorem_main_trial,
    theorem_tradeoff_trial,
    v_bar,
)

__version__ = "0.1.0"
