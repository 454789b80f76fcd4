"""Typed values and the flat type system used as search bias.

Six base types cover every observation: scalar readings and counts
(``num``), coordinates (``pos``), lengths (``dist``), compass angles in
degrees (``angl``), truth values (``bool``), and object identifiers
(``obj``).  Four type classes group the bases for signature matching:

    arith    num, pos, dist
    comp     num, obj
    spatial  pos, dist, angl, obj
    logic    bool, obj

Class names are legal only inside relation signatures; concrete values are
always tagged with a base type or a flat product of base types such as
``obj*pos``.  Products do not nest.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

Payload = Union[float, int, str, tuple]

DEFAULT_TOLERANCE = 1e-9

BASE_TYPE_NAMES = ("num", "pos", "dist", "angl", "bool", "obj")

CLASS_MEMBERS = {
    "arith": frozenset({"num", "pos", "dist"}),
    "comp": frozenset({"num", "obj"}),
    "spatial": frozenset({"pos", "dist", "angl", "obj"}),
    "logic": frozenset({"bool", "obj"}),
}

# Alternative spellings accepted on input (clause dialect, hand traces).
TYPE_ALIASES = {"object": "obj", "truthVal": "bool", "angle": "angl"}

ANY_NAME = "any"

_SYMBOL_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class TypeSpecError(ValueError):
    """Unknown type name, malformed syntax, or payload out of bounds."""


@dataclass(frozen=True)
class ValueType:
    """A base type, a class type, the ``any`` wildcard, or a flat product.

    Products are encoded with an empty ``name`` and two or more base-typed
    ``components``.
    """

    name: str
    components: tuple["ValueType", ...] = ()

    def __post_init__(self) -> None:
        if self.components:
            if self.name:
                raise TypeSpecError("product types carry no name of their own")
            if len(self.components) < 2:
                raise TypeSpecError("a product needs at least two components")
            for comp in self.components:
                if not comp.is_base:
                    raise TypeSpecError(
                        f"product component {comp} is not a base type; products are flat"
                    )
        elif (
            self.name not in BASE_TYPE_NAMES
            and self.name not in CLASS_MEMBERS
            and self.name != ANY_NAME
        ):
            raise TypeSpecError(f"unknown type name {self.name!r}")

    @property
    def is_base(self) -> bool:
        return self.name in BASE_TYPE_NAMES

    @property
    def is_class(self) -> bool:
        return self.name in CLASS_MEMBERS

    @property
    def is_product(self) -> bool:
        return bool(self.components)

    @property
    def is_any(self) -> bool:
        return self.name == ANY_NAME

    def __str__(self) -> str:
        if self.is_product:
            return "*".join(str(c) for c in self.components)
        return self.name


NUM = ValueType("num")
POS = ValueType("pos")
DIST = ValueType("dist")
ANGL = ValueType("angl")
BOOL = ValueType("bool")
OBJ = ValueType("obj")
ARITH = ValueType("arith")
COMP = ValueType("comp")
SPATIAL = ValueType("spatial")
LOGIC = ValueType("logic")
ANY = ValueType(ANY_NAME)


def base_type(name: str) -> ValueType:
    """Resolve a base type name, accepting the input-dialect aliases."""
    name = TYPE_ALIASES.get(name, name)
    if name not in BASE_TYPE_NAMES:
        raise TypeSpecError(f"unknown base type {name!r}")
    return ValueType(name)


def product_type(*parts: Union[str, ValueType]) -> ValueType:
    components = tuple(p if isinstance(p, ValueType) else base_type(p) for p in parts)
    return ValueType("", components)


def parse_type(text: str) -> ValueType:
    """Parse ``pos``, ``spatial``, ``any``, or a product like ``obj*pos``."""
    text = text.strip()
    if "*" in text:
        return product_type(*[part.strip() for part in text.split("*")])
    name = TYPE_ALIASES.get(text, text)
    if name in BASE_TYPE_NAMES or name in CLASS_MEMBERS or name == ANY_NAME:
        return ValueType(name)
    raise TypeSpecError(f"unknown type name {text!r}")


def conforms(t: ValueType, target: ValueType) -> bool:
    """True when a value of type ``t`` fits a signature slot of ``target``.

    Base types conform to themselves and to the classes that list them;
    products conform componentwise to products of equal width; the ``any``
    wildcard admits everything.  Two distinct classes never conform.
    """
    if target.is_any:
        return True
    if t == target:
        return True
    if target.is_class and t.is_base:
        return t.name in CLASS_MEMBERS[target.name]
    if t.is_product and target.is_product and len(t.components) == len(target.components):
        return all(conforms(a, b) for a, b in zip(t.components, target.components))
    return False


@dataclass(frozen=True)
class TypedValue:
    """A payload tagged with a concrete (base or product) type.

    Payload shapes: ``num``/``dist`` are finite floats, ``angl`` is a float
    in [0, 360), ``bool`` is the int 0 or 1, ``obj`` is an identifier
    string, ``pos`` is a tuple of 2 or 3 floats, and a product is a tuple
    of component payloads.
    """

    type: ValueType
    payload: Payload

    def __post_init__(self) -> None:
        if self.type.is_class or self.type.is_any:
            raise TypeSpecError("values are always concretely typed; classes are search bias")
        object.__setattr__(self, "payload", _check_payload(self.type, self.payload))

    def components(self) -> tuple["TypedValue", ...]:
        """Split a product value into its typed components."""
        if not self.type.is_product:
            raise TypeSpecError(f"{self.type} is not a product type")
        return tuple(
            TypedValue(ct, p) for ct, p in zip(self.type.components, self.payload)
        )

    def __str__(self) -> str:
        return format_typed_value(self)


def _check_number(raw, what: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise TypeSpecError(f"{what} payload {raw!r} is not a number") from None
    if not math.isfinite(value):
        raise TypeSpecError(f"{what} payload must be finite, got {raw!r}")
    return value


def _check_payload(vt: ValueType, payload: Payload) -> Payload:
    if vt.is_product:
        if not isinstance(payload, (tuple, list)) or len(payload) != len(vt.components):
            raise TypeSpecError(
                f"product payload must supply {len(vt.components)} components"
            )
        return tuple(
            _check_payload(ct, p) for ct, p in zip(vt.components, payload)
        )
    name = vt.name
    if name in ("num", "dist"):
        return _check_number(payload, name)
    if name == "angl":
        value = _check_number(payload, name)
        if not 0.0 <= value < 360.0:
            raise TypeSpecError(f"angl payload {value} outside [0, 360)")
        return value
    if name == "bool":
        if payload in (0, 1, False, True):
            return int(payload)
        raise TypeSpecError(f"bool payload must be 0 or 1, got {payload!r}")
    if name == "obj":
        if isinstance(payload, str) and _SYMBOL_RE.match(payload):
            return payload
        raise TypeSpecError(f"obj payload must be an identifier, got {payload!r}")
    # pos
    if not isinstance(payload, (tuple, list)) or len(payload) not in (2, 3):
        raise TypeSpecError(f"pos payload must have 2 or 3 coordinates, got {payload!r}")
    return tuple(_check_number(c, "pos coordinate") for c in payload)


def split_top_level(text: str, sep: str) -> list[str]:
    """Split on ``sep`` outside any brackets or parentheses."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def parse_typed_value(text: str) -> TypedValue:
    """Parse the prefix surface syntax ``type:payload``.

    Scalars are decimal numbers, coordinates are ``[x,y]`` or ``[x,y,z]``,
    symbols are bare identifiers, and product payloads are
    ``(part;part)``.
    """
    head, sep, raw = text.partition(":")
    if not sep or not head or not raw:
        raise TypeSpecError(f"expected 'type:payload', got {text!r}")
    vt = parse_type(head)
    if vt.is_class or vt.is_any:
        raise TypeSpecError(f"class type {vt} cannot tag a concrete value")
    return TypedValue(vt, _parse_payload(vt, raw.strip()))


def _parse_payload(vt: ValueType, raw: str) -> Payload:
    if vt.is_product:
        if not (raw.startswith("(") and raw.endswith(")")):
            raise TypeSpecError(f"product payload must be parenthesised, got {raw!r}")
        parts = split_top_level(raw[1:-1], ";")
        if len(parts) != len(vt.components):
            raise TypeSpecError(
                f"product payload {raw!r} must supply {len(vt.components)} components"
            )
        return tuple(
            _parse_payload(ct, p.strip()) for ct, p in zip(vt.components, parts)
        )
    if vt.name == "pos":
        if not (raw.startswith("[") and raw.endswith("]")):
            raise TypeSpecError(f"pos payload must be bracketed, got {raw!r}")
        coords = split_top_level(raw[1:-1], ",")
        return tuple(_check_number(c.strip(), "pos coordinate") for c in coords)
    if vt.name == "bool":
        if raw in ("0", "1"):
            return int(raw)
        raise TypeSpecError(f"bool payload must be 0 or 1, got {raw!r}")
    if vt.name == "obj":
        return raw
    return _check_number(raw, vt.name)


def _format_number(x: float) -> str:
    return repr(float(x))


def format_typed_value(tv: TypedValue) -> str:
    """Inverse of :func:`parse_typed_value` (round trip on payloads)."""
    return f"{tv.type}:{_format_payload(tv.type, tv.payload)}"


def _format_payload(vt: ValueType, payload: Payload) -> str:
    if vt.is_product:
        inner = ";".join(
            _format_payload(ct, p) for ct, p in zip(vt.components, payload)
        )
        return f"({inner})"
    if vt.name == "pos":
        return "[" + ",".join(_format_number(c) for c in payload) + "]"
    if vt.name == "bool":
        return str(payload)
    if vt.name == "obj":
        return payload
    return _format_number(payload)


def values_equal(a: Payload, b: Payload, tolerance: float = DEFAULT_TOLERANCE) -> bool:
    """Componentwise payload equality with an absolute numeric tolerance."""
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(
            values_equal(x, y, tolerance) for x, y in zip(a, b)
        )
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return abs(a - b) <= tolerance
    return a == b


def typed_values_equal(a: TypedValue, b: TypedValue, tolerance: float = DEFAULT_TOLERANCE) -> bool:
    return a.type == b.type and values_equal(a.payload, b.payload, tolerance)


@dataclass(frozen=True)
class RelationSignature:
    """Name plus ordered argument types of a background relation.

    Ternary signatures read ``before x parameter -> after``; binary
    signatures are predicates over ``(before, after)``.
    """

    name: str
    arg_types: tuple[ValueType, ...]

    def __post_init__(self) -> None:
        if len(self.arg_types) not in (2, 3):
            raise TypeSpecError("relation arity must be 2 or 3")

    @property
    def arity(self) -> int:
        return len(self.arg_types)

    @property
    def is_predicate(self) -> bool:
        return self.arity == 2

    def __str__(self) -> str:
        if self.arity == 3:
            s1, s2, s3 = self.arg_types
            return f"{self.name}: {s1} x {s2} -> {s3}"
        s1, s2 = self.arg_types
        return f"{self.name}: {s1} x {s2}"


def signature_match(sig: RelationSignature, triplet_types: tuple[ValueType, ...]) -> bool:
    """Quick unification test of a signature against (before, param, after).

    A binary predicate is matched against the before/after pair with the
    parameter slot unused.
    """
    before, param, after = triplet_types
    if sig.arity == 3:
        s1, s2, s3 = sig.arg_types
        return conforms(before, s1) and conforms(param, s2) and conforms(after, s3)
    s1, s2 = sig.arg_types
    return conforms(before, s1) and conforms(after, s2)
