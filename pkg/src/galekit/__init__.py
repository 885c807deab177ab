"""galekit: rigorous interval arithmetic for gales, supergales, and
supergale-to-gale conversion over the binary alphabet."""

from .construct import (
    ConversionPlan,
    ConversionResult,
    LevelSetFamily,
    StringSet,
    build_dprime,
    build_dprime_uniform,
    enumerate_level_sets,
    eval_dUt,
    parse_plan,
    format_plan,
    partition_prefix_sets,
    tail_bound,
    verify_dUt_is_gale,
)
from .errors import GalekitError
from .gales import (
    CLOSED_FORMS,
    GALE,
    SUPERGALE,
    GaleSpec,
    closed_gale,
    dimension_scan,
    eval_gale,
    format_gale,
    level_sum,
    parse_gale,
    build_gale,
    scaled_capital,
    staged_lower,
    success_trace,
    verify_gale,
)
from .measures import (
    BalanceCertificate,
    Bernoulli,
    Markov,
    NodeTable,
    Uniform,
    check_balance,
    format_measure,
    parse_measure,
    suggest_balance,
    verify_measure,
    weak_balance_trace,
)
from .numerics import (
    DEFAULT_PRECISION,
    Dyadic,
    DyadicExponent,
    DyadicInterval,
)

__version__ = "0.1.0"
