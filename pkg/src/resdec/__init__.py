"""Residual decoding: segment recent history by divergence, aggregate a
confidence-weighted residual signal, and fuse it into current logits
before sampling."""

from resdec.errors import (
    ConfigError,
    DegenerateDistribution,
    DimensionError,
    EmptyHistory,
    EmptyPool,
    MaskError,
    OrderingError,
    ParseError,
    ResDecError,
    SpecError,
    SupportMismatch,
)
from resdec.logitmath import (
    entropy,
    js_divergence,
    kl_divergence,
    log_softmax,
    normalize_weights,
    restrict_renormalize,
)
from resdec.records import HistoryBuffer, StepRecord, record_from_dense
from resdec.pooling import aggregation_window, candidate_pool, jsd_curve, locate_valley
from resdec.residual import confidence_scores, pool_distributions, residual_logits
from resdec.sampling import apply_mask, fuse, plausibility_mask, sample
from resdec.engine import (
    DecodeConfig,
    DecodeResult,
    Decoder,
    StepOutcome,
    decode,
    regular_decode,
)
from resdec.synthetic import (
    SyntheticTaskSpec,
    generate_mixture_trace,
    generate_preservation_trace,
    generate_stress_trace,
    generate_trace,
)
from resdec.traceio import (
    Trace,
    TraceHeader,
    load_trace,
    read_trace,
    save_trace,
    traces_equal,
    write_trace,
)
from resdec.sources import Delivery, MarkovSource, ReplaySource, StdioSource, markov_source
from resdec.theory import (
    DiscreteJoint,
    MonotonicityReport,
    SuiteCase,
    SuiteReport,
    TiltFamily,
    check_entropy_monotonicity,
    entropy_derivative,
    entropy_finite_difference,
    geometric_blend,
    mi_derivative_at_zero,
    mi_finite_difference,
    run_entropy_derivative_suite,
    run_entropy_monotonicity_suite,
    run_mi_derivative_suite,
    run_theory_suites,
    tilt,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateDistribution",
    "DimensionError",
    "EmptyHistory",
    "EmptyPool",
    "MaskError",
    "OrderingError",
    "ParseError",
    "ResDecError",
    "SpecError",
    "SupportMismatch",
    "entropy",
    "js_divergence",
    "kl_divergence",
    "log_softmax",
    "normalize_weights",
    "restrict_renormalize",
    "HistoryBuffer",
    "StepRecord",
    "record_from_dense",
    "aggregation_window",
    "candidate_pool",
    "jsd_curve",
    "locate_valley",
    "confidence_scores",
    "pool_distributions",
    "residual_logits",
    "apply_mask",
    "fuse",
    "plausibility_mask",
    "sample",
    "DecodeConfig",
    "DecodeResult",
    "Decoder",
    "StepOutcome",
    "decode",
    "regular_decode",
    "SyntheticTaskSpec",
    "generate_trace",
    "generate_stress_trace",
    "generate_preservation_trace",
    "generate_mixture_trace",
    "Trace",
    "TraceHeader",
    "load_trace",
    "read_trace",
    "save_trace",
    "traces_equal",
    "write_trace",
    "Delivery",
    "MarkovSource",
    "ReplaySource",
    "StdioSource",
    "markov_source",
    "DiscreteJoint",
    "MonotonicityReport",
    "SuiteCase",
    "SuiteReport",
    "TiltFamily",
    "check_entropy_monotonicity",
    "entropy_derivative",
    "entropy_finite_difference",
    "geometric_blend",
    "mi_derivative_at_zero",
    "mi_finite_difference",
    "run_entropy_derivative_suite",
    "run_entropy_monotonicity_suite",
    "run_mi_derivative_suite",
    "run_theory_suites",
    "tilt",
    "__version__",
]
