"""Optimal signaling for multi-phase trials with exact rational arithmetic."""

from .curve import (
    SplitChoice,
    ValueCurve,
    designed_combine,
    designed_combine_nary,
    determined_transform,
    determined_transform_nary,
    leaf_curve,
    pointwise_max,
    sample,
    upper_concave_envelope,
)
from .dp import (
    Action,
    Evaluation,
    Strategy,
    evaluate_strategy,
    extract_strategy,
    receiver_value,
    receiver_value_samples,
    solve,
    solve_curve,
)
from .model import (
    Designed,
    Determined,
    DeterminedNary,
    Experiment,
    Leaf,
    NaryExperiment,
    TrialTree,
    TreeFormatError,
    check_single_phase_equivalence,
    expand_nonbinary,
    normalize_two_phase,
    parse_tree,
    perturb_param,
    prune,
    serialize_tree,
)

__version__ = "0.1.0"
