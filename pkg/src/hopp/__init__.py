"""Higher-order probabilistic perceptron: sparse polynomial classifier, training
protocol with weight culling, ensemble cross-validation harness, morphometric
feature extraction, and an exact Bayes-rule embedding oracle."""

from .errors import (
    DivergenceError,
    HoppError,
    InvalidBoundaryError,
    InvalidDimensionError,
    InvalidIndexError,
    InvalidInputError,
    InvalidViewError,
    LogDomainError,
    NumericOverflowError,
    WdbcParseError,
)
from .model import HoppNetwork, count_terms, enumerate_terms, term_at, term_value
from .metrics import ConfusionCounts, Measures, MetricSummary, confusion, measures, summarize
from .training import (
    MomentumState,
    TrainingConfig,
    TrainingSet,
    cull,
    initialize,
    train_epochs,
    train_protocol,
    update_step,
)
from .dataset import (
    BiopsyRecord,
    FeatureView,
    Scaler,
    SplitSpec,
    binarize,
    fit_apply_scaler,
    load_wdbc,
    parse_wdbc,
    project,
    split,
)
from .bayes_oracle import (
    ClassConditionalTable,
    embed,
    exact_posterior,
    truncate_embedding,
)

__version__ = "0.1.0"
