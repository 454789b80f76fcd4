"""Background knowledge: the typed, evaluable relations scanned by the learner.

Every relation is a total decision procedure over a transition triplet
(before value, action parameter, after value) plus an evaluation context
holding the two snapshots that bracket the action.  Relations may solve
free constants (returned as witnesses) and may consult designated
observables in the context, e.g. the robot's heading.

Heading convention: 0 degrees points along +axis1 and 90 degrees along
+axis0, so a heading with positive sine is "eastward".  The travel
relations read their direction sign from the west-east component of the
heading: eastward means +1, westward means -1, anything perpendicular
rejects.
"""

from __future__ import annotations

import json
import math
import operator
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Union

from .trace import StateSnapshot
from .types import (
    ANY,
    DEFAULT_TOLERANCE,
    DIST,
    NUM,
    POS,
    ANGL,
    COMP,
    SPATIAL,
    RelationSignature,
    TypedValue,
    TypeSpecError,
    parse_type,
    values_equal,
)

ConstantValue = Union[float, str]


class RelationError(ValueError):
    """Library misuse: duplicate names, bad manifests, arity mismatches."""


@dataclass(frozen=True)
class EvalResult:
    """Accept (with solved constant witnesses) or reject (with a reason)."""

    accepted: bool
    constants: tuple[tuple[str, ConstantValue], ...] = ()
    reason: str = ""

    def __bool__(self) -> bool:
        return self.accepted

    def constant(self, name: str) -> ConstantValue:
        for key, value in self.constants:
            if key == name:
                return value
        raise KeyError(name)


def accept(**constants: ConstantValue) -> EvalResult:
    return EvalResult(True, tuple(sorted(constants.items())))


def reject(reason: str = "") -> EvalResult:
    return EvalResult(False, reason=reason)


@dataclass(frozen=True)
class EvaluationContext:
    """Read-only view of the snapshots bracketing the action under study."""

    prior: StateSnapshot
    posterior: StateSnapshot
    tolerance: float = DEFAULT_TOLERANCE


Evaluator = Callable[[tuple[TypedValue, ...], EvaluationContext], EvalResult]


@dataclass(frozen=True)
class RelationDef:
    """A named signature plus its deterministic decision procedure.

    ``free_constants`` lists (name, domain) pairs for constants the
    evaluator solves per instance; domains are ``positive``, ``real`` or
    ``symbol``.
    """

    signature: RelationSignature
    evaluator: Evaluator
    free_constants: tuple[tuple[str, str], ...] = ()
    doc: str = ""

    @property
    def name(self) -> str:
        return self.signature.name


def constant_in_domain(domain: str, value: ConstantValue) -> bool:
    if domain == "positive":
        return isinstance(value, (int, float)) and value > 0
    if domain == "real":
        return isinstance(value, (int, float)) and math.isfinite(value)
    if domain == "symbol":
        return isinstance(value, str)
    raise RelationError(f"unknown constant domain {domain!r}")


class RelationLibrary:
    """Immutable name-indexed set of relations; iteration is name-sorted."""

    def __init__(self, relations: Iterable[RelationDef] = ()):
        self._by_name: dict[str, RelationDef] = {}
        for rel in relations:
            if rel.name in self._by_name:
                raise RelationError(f"duplicate relation name {rel.name!r}")
            self._by_name[rel.name] = rel

    def __iter__(self) -> Iterator[RelationDef]:
        for name in sorted(self._by_name):
            yield self._by_name[name]

    def __len__(self) -> int:
        return len(self._by_name)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> Optional[RelationDef]:
        return self._by_name.get(name)

    def register(self, rel: RelationDef) -> "RelationLibrary":
        """A new library with ``rel`` added; the receiver is unchanged."""
        if rel.name in self._by_name:
            raise RelationError(f"duplicate relation name {rel.name!r}")
        return RelationLibrary(list(self._by_name.values()) + [rel])


def register_relation(lib: RelationLibrary, rel: RelationDef) -> RelationLibrary:
    return lib.register(rel)


def evaluate_relation(
    rel: RelationDef, args: tuple[TypedValue, ...], ctx: EvaluationContext
) -> EvalResult:
    """Run a relation's decision procedure on already signature-matched args."""
    if len(args) != rel.signature.arity:
        raise RelationError(
            f"{rel.name} expects {rel.signature.arity} arguments, got {len(args)}"
        )
    return rel.evaluator(args, ctx)


# ---------------------------------------------------------------------------
# built-in relations


def _euclidean(p: tuple, q: tuple) -> float:
    return math.dist(p, q)


def _scalar_arithmetic(name: str, op: Callable[[float, float], float]) -> RelationDef:
    def evaluator(args: tuple[TypedValue, ...], ctx: EvaluationContext) -> EvalResult:
        x, y, z = (a.payload for a in args)
        try:
            expected = op(x, y)
        except ZeroDivisionError:
            return reject("zero divisor")
        if not math.isfinite(expected):
            return reject("result not finite")
        if abs(expected - z) <= ctx.tolerance:
            return accept()
        return reject()

    sig = RelationSignature(name, (NUM, NUM, NUM))
    return RelationDef(sig, evaluator, doc=f"after = before {name} parameter")


def _comparison(name: str, op) -> RelationDef:
    def evaluator(args: tuple[TypedValue, ...], ctx: EvaluationContext) -> EvalResult:
        a, b = args
        if a.type != b.type:
            return reject("mixed comparison operands")
        if name == "equals" and isinstance(a.payload, float):
            if abs(a.payload - b.payload) <= ctx.tolerance:
                return accept()
            return reject()
        return accept() if op(a.payload, b.payload) else reject()

    sig = RelationSignature(name, (COMP, COMP))
    return RelationDef(sig, evaluator, doc=f"before {name} after")


def _left_of() -> RelationDef:
    def evaluator(args: tuple[TypedValue, ...], ctx: EvaluationContext) -> EvalResult:
        p1, p2 = (a.payload for a in args)
        return accept() if p1[0] < p2[0] else reject()

    sig = RelationSignature("left_of", (POS, POS))
    return RelationDef(sig, evaluator, doc="first coordinate strictly smaller")


def _dist() -> RelationDef:
    def evaluator(args: tuple[TypedValue, ...], ctx: EvaluationContext) -> EvalResult:
        p1, p2, d = (a.payload for a in args)
        if abs(_euclidean(p1, p2) - d) <= ctx.tolerance:
            return accept()
        return reject()

    sig = RelationSignature("dist", (POS, POS, DIST))
    return RelationDef(sig, evaluator, doc="Euclidean distance between two positions")


def _has_new_position() -> RelationDef:
    def evaluator(args: tuple[TypedValue, ...], ctx: EvaluationContext) -> EvalResult:
        before, d, after = (a.payload for a in args)
        if values_equal(before, after, ctx.tolerance):
            return reject("position unchanged")
        if abs(d) <= ctx.tolerance:
            return reject("zero distance parameter leaves the scale unconstrained")
        scale = _euclidean(before, after) / d
        if scale <= ctx.tolerance:
            return reject("scale not positive")
        return accept(scale=scale)

    sig = RelationSignature("has_new_position", (POS, DIST, POS))
    return RelationDef(
        sig,
        evaluator,
        free_constants=(("scale", "positive"),),
        doc="displacement magnitude is scale * distance parameter",
    )


def _west_east_sign(ctx: EvaluationContext, heading_var: str) -> Optional[int]:
    """+1 for an eastward heading, -1 for westward, None when perpendicular."""
    heading = ctx.prior.get(heading_var)
    if heading is None or heading.type.name != "angl":
        return None
    component = math.sin(math.radians(heading.payload))
    if component > ctx.tolerance:
        return 1
    if component < -ctx.tolerance:
        return -1
    return None


def make_travel_axis(coordinate: int, heading_var: str = "r_dir") -> RelationDef:
    """Travel relation for one coordinate of the position vector.

    Accepts when exactly the given coordinate changed, the others stayed
    put, and the change equals sign * scale * distance for a positive
    scale, with the sign read from the west-east component of the heading
    observable in the prior snapshot.
    """

    def evaluator(args: tuple[TypedValue, ...], ctx: EvaluationContext) -> EvalResult:
        before, d, after = (a.payload for a in args)
        if coordinate >= len(before):
            return reject("position has no such coordinate")
        deltas = [b - a for a, b in zip(before, after)]
        changed = [i for i, delta in enumerate(deltas) if abs(delta) > ctx.tolerance]
        if changed != [coordinate]:
            return reject("coordinate change pattern does not fit this axis")
        sign = _west_east_sign(ctx, heading_var)
        if sign is None:
            return reject("heading has no west-east component")
        if abs(d) <= ctx.tolerance:
            return reject("zero distance parameter leaves the scale unconstrained")
        scale = deltas[coordinate] / (sign * d)
        if scale <= ctx.tolerance:
            return reject("scale not positive")
        return accept(scale=scale)

    sig = RelationSignature(f"travel_axis{coordinate}", (POS, DIST, POS))
    return RelationDef(
        sig,
        evaluator,
        free_constants=(("scale", "positive"),),
        doc=f"coordinate {coordinate} moves by sign * scale * distance, rest fixed",
    )


def _change_in_orientation(heading_var: str, position_var: str) -> RelationDef:
    # spatial slots so the relation matches both heading (angl) and
    # position (pos) triplets; the decision itself reads the context.
    def evaluator(args: tuple[TypedValue, ...], ctx: EvaluationContext) -> EvalResult:
        h0 = ctx.prior.get(heading_var)
        h1 = ctx.posterior.get(heading_var)
        if h0 is None or h1 is None:
            return reject("no heading observable")
        if values_equal(h0.payload, h1.payload, ctx.tolerance):
            return reject("heading unchanged")
        p0 = ctx.prior.get(position_var)
        p1 = ctx.posterior.get(position_var)
        if p0 is not None and p1 is not None:
            if not values_equal(p0.payload, p1.payload, ctx.tolerance):
                return reject("position changed")
        return accept()

    sig = RelationSignature("change_in_orientation", (SPATIAL, ANGL, SPATIAL))
    return RelationDef(
        sig, evaluator, doc="heading changed while the position stayed put"
    )


def _preserves_value() -> RelationDef:
    def evaluator(args: tuple[TypedValue, ...], ctx: EvaluationContext) -> EvalResult:
        before, _, after = args
        if before.type != after.type:
            return reject("before/after types differ")
        if values_equal(before.payload, after.payload, ctx.tolerance):
            return accept()
        return reject()

    sig = RelationSignature("preserves_value", (ANY, ANY, ANY))
    return RelationDef(sig, evaluator, doc="value identical before and after")


def builtin_library(heading_var: str = "r_dir", position_var: str = "r_pos") -> RelationLibrary:
    """The innate relation set scanned during induction.

    ``heading_var`` and ``position_var`` name the observables the
    context-reading relations consult.
    """
    return RelationLibrary(
        [
            _scalar_arithmetic("add_to", operator.add),
            _scalar_arithmetic("sub_from", operator.sub),
            _scalar_arithmetic("mult_by", operator.mul),
            _scalar_arithmetic("div_by", operator.truediv),
            _comparison("greater_than", operator.gt),
            _comparison("less_than", operator.lt),
            _comparison("equals", operator.eq),
            _left_of(),
            _dist(),
            _has_new_position(),
            make_travel_axis(0, heading_var),
            make_travel_axis(1, heading_var),
            _change_in_orientation(heading_var, position_var),
            _preserves_value(),
        ]
    )


# ---------------------------------------------------------------------------
# declarative extensions


_TEMPLATE_OPS = {
    "add": operator.add,
    "sub": operator.sub,
    "mul": operator.mul,
    "div": operator.truediv,
    "lt": operator.lt,
    "gt": operator.gt,
}


def relation_from_template(
    name: str,
    arg_types: tuple,
    template: str,
    op: Optional[str] = None,
) -> RelationDef:
    """Build a relation from one of the closed body templates.

    ``linear``           after = before <op> parameter, op in add/sub/mul/div
    ``affine_with_constant``  after = before + scale * parameter
    ``equality``         binary predicate, before equals after
    ``inequality``       binary predicate, before <op> after, op in lt/gt
    ``preservation``     ternary, before equals after
    """
    sig = RelationSignature(name, tuple(arg_types))
    if template == "linear":
        if op not in ("add", "sub", "mul", "div"):
            raise RelationError(f"linear template needs op add/sub/mul/div, got {op!r}")
        fn = _TEMPLATE_OPS[op]

        def linear(args, ctx):
            x, a, y = (v.payload for v in args)
            try:
                expected = fn(x, a)
            except ZeroDivisionError:
                return reject("zero divisor")
            return accept() if abs(expected - y) <= ctx.tolerance else reject()

        if sig.arity != 3:
            raise RelationError("linear template is ternary")
        return RelationDef(sig, linear, doc=f"after = before {op} parameter")

    if template == "affine_with_constant":
        if sig.arity != 3:
            raise RelationError("affine template is ternary")

        def affine(args, ctx):
            x, a, y = (v.payload for v in args)
            if abs(a) <= ctx.tolerance:
                if abs(y - x) <= ctx.tolerance:
                    return reject("ambiguous: any scale satisfies a zero parameter")
                return reject("no scale satisfies a zero parameter")
            return accept(scale=(y - x) / a)

        return RelationDef(
            sig, affine, free_constants=(("scale", "real"),),
            doc="after = before + scale * parameter",
        )

    if template == "equality":
        if sig.arity != 2:
            raise RelationError("equality template is binary")

        def equality(args, ctx):
            a, b = args
            return accept() if values_equal(a.payload, b.payload, ctx.tolerance) else reject()

        return RelationDef(sig, equality, doc="before equals after")

    if template == "inequality":
        if sig.arity != 2:
            raise RelationError("inequality template is binary")
        if op not in ("lt", "gt"):
            raise RelationError(f"inequality template needs op lt/gt, got {op!r}")
        fn = _TEMPLATE_OPS[op]

        def inequality(args, ctx):
            a, b = args
            return accept() if fn(a.payload, b.payload) else reject()

        return RelationDef(sig, inequality, doc=f"before {op} after")

    if template == "preservation":
        if sig.arity != 3:
            raise RelationError("preservation template is ternary")

        def preservation(args, ctx):
            a, _, b = args
            return accept() if values_equal(a.payload, b.payload, ctx.tolerance) else reject()

        return RelationDef(sig, preservation, doc="value identical before and after")

    raise RelationError(f"unknown body template {template!r}")


def load_relation_manifest(text: str) -> list[RelationDef]:
    """Parse a JSON manifest of user relations built from the body templates.

    Shape: ``{"relations": [{"name": ..., "arg_types": [...],
    "template": ..., "op": ...}, ...]}``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RelationError(f"bad relation manifest: {exc}") from None
    entries = doc.get("relations")
    if not isinstance(entries, list):
        raise RelationError("relation manifest needs a 'relations' list")
    out = []
    for entry in entries:
        try:
            name = entry["name"]
            raw_types = entry["arg_types"]
            template = entry["template"]
        except (TypeError, KeyError) as exc:
            raise RelationError(f"manifest entry missing field {exc}") from None
        try:
            arg_types = tuple(parse_type(t) for t in raw_types)
        except TypeSpecError as exc:
            raise RelationError(str(exc)) from None
        out.append(relation_from_template(name, arg_types, template, entry.get("op")))
    return out
