"""Behavioral anomaly detection with frequent-pattern tree profiles.

An entity's recent transactions are compressed into an FP-tree profile; new
transactions are scored by matching them directly against the tree, and the
resulting suspicion values are accumulated into windowed, amount-weighted
alert values.  A profile-driven simulator and a ROC/cost evaluation harness
round out the pipeline.
"""

from .accumulator import (
    AlertState,
    ExpiringFunction,
    alert_value,
    expiring_weight,
    fire,
    slide,
)
from .core import (
    FRAUD,
    LEGAL,
    CountWindow,
    GranularityConfig,
    Interval,
    Item,
    Passthrough,
    RangeBuckets,
    Rule,
    TimeWindow,
    Transaction,
    ValueMap,
    discretize,
    window_select,
    with_amount_item,
)
from .errors import (
    ConfigurationError,
    ContractError,
    EngineError,
    EvaluationError,
    FormatError,
    ScoringError,
)
from .evaluator import (
    CostParams,
    OutcomeMatrix,
    RocCurve,
    missed_fraud_amounts,
    outcomes,
    roc,
    total_cost,
)
from .fptree import (
    DEFAULT_MIN_SUP,
    FpNode,
    FpTree,
    HeaderTable,
    build,
    extract_rules,
    frequent_filter,
    from_record,
    insert_incremental,
    needs_rebuild,
    path_counts,
    prefix_path,
    rebuild,
    structural_state,
    support_threshold,
    to_record,
    tree_stats,
)
from .matcher import (
    CreditParams,
    SuspicionRecord,
    WeightTable,
    credit,
    score,
    sim_match,
    suspicion,
)
from .simulator import (
    BehaviorProfile,
    LabeledDataset,
    builtin_profiles,
    generate,
)

__version__ = "0.1.0"
