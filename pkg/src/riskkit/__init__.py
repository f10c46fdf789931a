"""Expert-in-the-loop risk assessment toolkit.

Pairwise knowledge comparisons with consistency checking, LP-calibrated
LOK scales per expert and globally, conflict-minimizing consensus across
experts, reference models over one-hot characterizations, and POS
assessment constrained by knowledge-dependent likelihood regions.
"""

from .comparisons import (
    ComparisonGraph,
    ContradictionError,
    Relation,
    eq,
    extract_gt_eq,
    infer_closure,
    lt,
)
from .calibration import (
    CalibrationProblem,
    InfeasibleComparisonChain,
    LokScale,
    MalformedProblem,
    calibrate,
    grid_best_objective,
    longest_strict_chain,
)
from .consensus import (
    CancellationToken,
    ConsensusRelations,
    PairWeights,
    SizeLimitExceeded,
    SolveCancelled,
    SolveStats,
    aggregate_weights,
    brute_force_consensus,
    consensus_to_gt_eq,
    solve_consensus,
)
from .model import (
    AssessmentRecord,
    Characterization,
    Expert,
    Question,
    Questionnaire,
    RiskFactor,
    Violation,
    combine_prospect_pos,
    validate_characterization,
)
from .pos import (
    DEFAULT_REGION,
    LikelihoodRegion,
    PosEntry,
    PosValidation,
    allowed_intervals,
    consensus_pos,
    project_to_allowed,
    rank_similar,
    region_from_config,
    region_polygons,
    region_to_config,
    validate_pos,
)
from .reference import (
    LayoutMismatch,
    OneHotVector,
    ReferenceModel,
    TrainingExample,
    encode_one_hot,
    model_metadata,
    predict_reference_lok,
    questionnaire_layout_id,
    similarity,
    train_reference_model,
    training_set_from_jsonl,
    training_set_to_jsonl,
)

__version__ = "0.1.0"
