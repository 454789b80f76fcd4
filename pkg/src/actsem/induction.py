"""The learning pipeline: effect extraction, typed scanning, refinement.

For every action occurrence the learner compares the bracketing snapshots,
collects the variables whose values changed (the effect set), pairs each
with each action parameter into transition triplets, and scans the
background library for relations whose signature matches and whose body is
provable on the triplet.  Per-action theories shrink monotonically: each
new occurrence intersects away every candidate it fails to support.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .relations import EvaluationContext, RelationLibrary, evaluate_relation
from .trace import ActionRecord, Sample, StateSnapshot, adjacent_snapshots, is_internal
from .types import (
    DEFAULT_TOLERANCE,
    TypedValue,
    ValueType,
    signature_match,
    typed_values_equal,
    values_equal,
)

ConstantItems = tuple[tuple[str, object], ...]


class InductionError(ValueError):
    """Schema mismatches and incompatible theory combinations."""


@dataclass(frozen=True)
class EffectSet:
    """Partition of the considered variables into changed and unchanged."""

    t: int
    effects: tuple[str, ...]
    non_effects: tuple[str, ...]

    def __post_init__(self) -> None:
        if set(self.effects) & set(self.non_effects):
            raise InductionError("effects and non-effects must be disjoint")


@dataclass(frozen=True)
class TransitionTriplet:
    variable: str
    before: TypedValue
    parameter: TypedValue
    parameter_index: int
    after: TypedValue

    @property
    def types(self) -> tuple[ValueType, ValueType, ValueType]:
        return (self.before.type, self.parameter.type, self.after.type)


@dataclass(frozen=True)
class TransitionGroup:
    action: str
    t: int
    parameters: tuple[TypedValue, ...]
    triplets: tuple[TransitionTriplet, ...]


@dataclass(frozen=True)
class Candidate:
    """One surviving explanation: relation, solved constants, parameter slot."""

    relation: str
    signature: tuple[ValueType, ...]
    constants: ConstantItems
    parameter_index: int

    def sort_key(self):
        return (self.relation, self.parameter_index, self.constants)


@dataclass(frozen=True)
class ActionTheory:
    """Per-variable candidate sets for one named action."""

    action: str
    parameter_types: tuple[ValueType, ...]
    candidates: dict[str, frozenset[Candidate]] = field(default_factory=dict)

    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self.candidates))

    def total_candidates(self) -> int:
        return sum(len(c) for c in self.candidates.values())


def effect_set(
    prior: StateSnapshot,
    posterior: StateSnapshot,
    tolerance: float = DEFAULT_TOLERANCE,
    include_internal: bool = False,
    t: Optional[int] = None,
) -> EffectSet:
    """Variables whose values differ between the bracketing snapshots.

    Product payloads compare componentwise; anything within the tolerance
    counts as unchanged.  Internal (underscore-prefixed) variables are left
    out of both sides unless requested.  ``t`` records the action time and
    defaults to the gap after the prior snapshot.
    """
    if prior.schema() != posterior.schema():
        raise InductionError(
            f"snapshots at t={prior.t} and t={posterior.t} have different schemas"
        )
    effects, non_effects = [], []
    for name, before in prior.bindings:
        if is_internal(name) and not include_internal:
            continue
        after = posterior.value(name)
        if typed_values_equal(before, after, tolerance):
            non_effects.append(name)
        else:
            effects.append(name)
    return EffectSet(
        t=prior.t + 1 if t is None else t,
        effects=tuple(sorted(effects)),
        non_effects=tuple(sorted(non_effects)),
    )


def transition_group(
    eff: EffectSet,
    prior: StateSnapshot,
    posterior: StateSnapshot,
    action: ActionRecord,
) -> TransitionGroup:
    """All (before, parameter, after) combinations over the effect set.

    The group holds exactly ``len(effects) * len(parameters)`` triplets; an
    action without parameters yields an empty group.
    """
    triplets = []
    for variable in eff.effects:
        before = prior.value(variable)
        after = posterior.value(variable)
        for index, parameter in enumerate(action.parameters):
            triplets.append(
                TransitionTriplet(
                    variable=variable,
                    before=before,
                    parameter=parameter,
                    parameter_index=index,
                    after=after,
                )
            )
    return TransitionGroup(
        action=action.name,
        t=action.t,
        parameters=action.parameters,
        triplets=tuple(triplets),
    )


def induce_theory(
    group: TransitionGroup,
    library: RelationLibrary,
    ctx: EvaluationContext,
) -> ActionTheory:
    """Exhaustive scan of every triplet against every relation.

    A candidate is recorded for each accepting evaluation; no relation
    whose signature matches is skipped.
    """
    candidates: dict[str, set[Candidate]] = {}
    for triplet in group.triplets:
        bucket = candidates.setdefault(triplet.variable, set())
        for rel in library:
            if not signature_match(rel.signature, triplet.types):
                continue
            if rel.signature.arity == 3:
                args = (triplet.before, triplet.parameter, triplet.after)
            else:
                args = (triplet.before, triplet.after)
            result = evaluate_relation(rel, args, ctx)
            if result:
                bucket.add(
                    Candidate(
                        relation=rel.name,
                        signature=rel.signature.arg_types,
                        constants=result.constants,
                        parameter_index=triplet.parameter_index,
                    )
                )
    return ActionTheory(
        action=group.action,
        parameter_types=tuple(p.type for p in group.parameters),
        candidates={name: frozenset(found) for name, found in candidates.items()},
    )


def _compatible(a: Candidate, b: Candidate, tolerance: float) -> bool:
    if (
        a.relation != b.relation
        or a.parameter_index != b.parameter_index
        or a.signature != b.signature
    ):
        return False
    if len(a.constants) != len(b.constants):
        return False
    for (ka, va), (kb, vb) in zip(a.constants, b.constants):
        if ka != kb or not values_equal(va, vb, tolerance):
            return False
    return True


def refine_theory(
    old: ActionTheory,
    new: ActionTheory,
    tolerance: float = DEFAULT_TOLERANCE,
) -> ActionTheory:
    """Monotone specialisation: keep only candidates supported by both sides.

    Variables absent from either theory are dropped entirely; a candidate
    survives when the other side holds the same relation and parameter slot
    with constant witnesses equal under the tolerance.  The first-seen
    witness is kept.
    """
    if old.action != new.action:
        raise InductionError(
            f"cannot refine theory for {old.action!r} with one for {new.action!r}"
        )
    if old.parameter_types != new.parameter_types:
        raise InductionError(
            f"parameter signature of {old.action!r} changed between occurrences"
        )
    merged: dict[str, frozenset[Candidate]] = {}
    for variable in set(old.candidates) & set(new.candidates):
        others = new.candidates[variable]
        kept = frozenset(
            cand
            for cand in old.candidates[variable]
            if any(_compatible(cand, other, tolerance) for other in others)
        )
        merged[variable] = kept
    return ActionTheory(
        action=old.action,
        parameter_types=old.parameter_types,
        candidates=merged,
    )


@dataclass
class TheoryStore:
    """Current theory per action plus the raw per-occurrence theories.

    The current entry always equals the refinement fold of its history.
    """

    current: dict[str, ActionTheory] = field(default_factory=dict)
    history: dict[str, list[ActionTheory]] = field(default_factory=dict)

    def actions(self) -> tuple[str, ...]:
        return tuple(sorted(self.current))

    def theory(self, action: str) -> ActionTheory:
        try:
            return self.current[action]
        except KeyError:
            raise InductionError(f"no theory for action {action!r}") from None

    def record(
        self, induced: ActionTheory, tolerance: float = DEFAULT_TOLERANCE
    ) -> ActionTheory:
        name = induced.action
        self.history.setdefault(name, []).append(induced)
        if name in self.current:
            self.current[name] = refine_theory(self.current[name], induced, tolerance)
        else:
            self.current[name] = induced
        return self.current[name]


@dataclass(frozen=True)
class LearnOptions:
    tolerance: float = DEFAULT_TOLERANCE
    assume_success: bool = True
    learn_preservation: bool = False
    include_internal: bool = False


ProgressHook = Callable[[ActionRecord, ActionTheory], None]


def _with_preservation(
    theory: ActionTheory,
    eff: EffectSet,
    prior: StateSnapshot,
    posterior: StateSnapshot,
    action: ActionRecord,
    library: RelationLibrary,
    ctx: EvaluationContext,
) -> ActionTheory:
    rel = library.get("preserves_value")
    if rel is None or not action.parameters:
        return theory
    candidates = dict(theory.candidates)
    for variable in eff.non_effects:
        before = prior.value(variable)
        after = posterior.value(variable)
        found = set(candidates.get(variable, frozenset()))
        for index, parameter in enumerate(action.parameters):
            result = evaluate_relation(rel, (before, parameter, after), ctx)
            if result:
                found.add(
                    Candidate(
                        relation=rel.name,
                        signature=rel.signature.arg_types,
                        constants=result.constants,
                        parameter_index=index,
                    )
                )
        candidates[variable] = frozenset(found)
    return ActionTheory(theory.action, theory.parameter_types, candidates)


def learn_from_trace(
    sample: Sample,
    library: RelationLibrary,
    options: LearnOptions = LearnOptions(),
    progress: Optional[ProgressHook] = None,
) -> TheoryStore:
    """Run the full pipeline over every action occurrence in time order.

    With ``assume_success`` (the default) occurrences that changed nothing
    are treated as failed commands and skipped rather than wiping the
    theory.  With ``learn_preservation`` the unchanged variables of each
    occurrence additionally receive ``preserves_value`` candidates.
    """
    store = TheoryStore()
    for action in sample.actions:
        prior, posterior = adjacent_snapshots(sample, action)
        eff = effect_set(
            prior, posterior, options.tolerance, options.include_internal, t=action.t
        )
        if options.assume_success and not eff.effects:
            continue
        ctx = EvaluationContext(prior, posterior, options.tolerance)
        group = transition_group(eff, prior, posterior, action)
        theory = induce_theory(group, library, ctx)
        if options.learn_preservation:
            theory = _with_preservation(theory, eff, prior, posterior, action, library, ctx)
        refined = store.record(theory, options.tolerance)
        if progress is not None:
            progress(action, refined)
    return store


# ---------------------------------------------------------------------------
# rendering


_SLOT_LETTER = {
    "num": "N",
    "dist": "D",
    "angl": "G",
    "bool": "B",
    "obj": "O",
    "arith": "A",
    "comp": "C",
    "spatial": "S",
    "logic": "L",
    "any": "V",
}


def _slot_placeholder(vt: ValueType, index: int) -> str:
    if vt.is_product:
        inner = ";".join(_slot_placeholder(c, index) for c in vt.components)
        return f"({inner})"
    if vt.name == "pos":
        return f"[X{index},Y{index}]"
    return f"{_SLOT_LETTER[vt.name]}{index}"


def parameter_placeholder(vt: ValueType, index: int, parameter_count: int) -> str:
    if vt.is_product:
        inner = ";".join(
            parameter_placeholder(c, index, parameter_count) for c in vt.components
        )
        return f"({inner})"
    letter = "P" if vt.name == "pos" else _SLOT_LETTER.get(vt.name, "P")
    return letter if parameter_count <= 1 else f"{letter}{index}"


def render_candidate(candidate: Candidate, parameter_count: int) -> str:
    """Clause-style pattern, e.g. ``has_new_position([X1,Y1]:pos, D:dist, [X2,Y2]:pos)``."""
    types = candidate.signature
    if len(types) == 3:
        slots = [
            f"{_slot_placeholder(types[0], 1)}:{types[0]}",
            f"{parameter_placeholder(types[1], candidate.parameter_index, parameter_count)}:{types[1]}",
            f"{_slot_placeholder(types[2], 2)}:{types[2]}",
        ]
    else:
        slots = [
            f"{_slot_placeholder(types[0], 1)}:{types[0]}",
            f"{_slot_placeholder(types[1], 2)}:{types[1]}",
        ]
    return f"{candidate.relation}({', '.join(slots)})"


def _format_constant(value) -> str:
    return repr(float(value)) if isinstance(value, (int, float)) else str(value)


def explain_theory(theory: ActionTheory) -> str:
    """Deterministic human-readable report of one action theory.

    Variables and relations appear in lexicographic order; constant
    witnesses and parameter slots are spelled out per candidate.
    """
    params = ", ".join(str(t) for t in theory.parameter_types)
    lines = [f"action {theory.action}({params})"]
    if not theory.candidates:
        lines.append("  no surviving candidates")
        return "\n".join(lines) + "\n"
    k = len(theory.parameter_types)
    for variable in theory.variables():
        lines.append(f"  {variable}:")
        bucket = sorted(theory.candidates[variable], key=Candidate.sort_key)
        if not bucket:
            lines.append("    (no surviving candidates)")
        for cand in bucket:
            notes = [f"param {cand.parameter_index}"]
            notes += [f"{name}={_format_constant(v)}" for name, v in cand.constants]
            lines.append(f"    {render_candidate(cand, k)}  [{', '.join(notes)}]")
    return "\n".join(lines) + "\n"
