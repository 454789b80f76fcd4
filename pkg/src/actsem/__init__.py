"""actsem: learn what named commands do from observation traces.

Given a trace of time-stamped state snapshots bracketing action records,
the learner extracts which observable variables each action affects and
which typed background relations explain the change, refining per-action
theories monotonically across repeated observations.  A deterministic
desk-scale robot simulator is bundled to generate traces.
"""

__version__ = "0.1.0"

from .induction import (
    ActionTheory,
    Candidate,
    EffectSet,
    LearnOptions,
    TheoryStore,
    TransitionGroup,
    TransitionTriplet,
    effect_set,
    explain_theory,
    induce_theory,
    learn_from_trace,
    refine_theory,
    transition_group,
)
from .relations import (
    EvaluationContext,
    EvalResult,
    RelationDef,
    RelationLibrary,
    builtin_library,
    evaluate_relation,
    load_relation_manifest,
    make_travel_axis,
    register_relation,
)
from .simulator import (
    Command,
    Scenario,
    WorldState,
    apply_command,
    builtin_scenario,
    make_command,
    random_policy,
    run_script,
)
from .trace import (
    ActionRecord,
    Sample,
    StateSnapshot,
    adjacent_snapshots,
    ingest_trace,
    serialize_trace,
)
from .types import (
    RelationSignature,
    TypedValue,
    ValueType,
    conforms,
    format_typed_value,
    parse_typed_value,
    signature_match,
)
