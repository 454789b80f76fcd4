"""Observation traces: time-stamped state snapshots plus action records.

Canonical trace files are line-delimited, one record per line:

    state t=31 r_pos=pos:[9.0,14.0] obj_num=num:1.0 obj_grab=obj*bool:(none;0)
    action t=32 name=move_forward params=[dist:3.0]

Lines starting with ``#`` are headers/comments and are ignored on ingest.
Variable names beginning with an underscore mark internal (non-observable)
variables; they ride along in snapshots but are skipped by the learner
unless explicitly included.

A secondary importer accepts the clause-fact dialect with postfix types:

    state_spec(31, [[r_pos, [9,14]:pos], [obj_grab, [none]:obj, 0:truthVal]]).
    action(move_forward, 32, [3:dist]).

A clause variable with several value parts becomes one product-typed value.
"""

from __future__ import annotations

import io
import re
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Union

from .types import (
    TypedValue,
    TypeSpecError,
    ValueType,
    base_type,
    format_typed_value,
    parse_typed_value,
    product_type,
    split_top_level,
)

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class TraceError(ValueError):
    """Malformed or inconsistent trace data; carries a line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def is_internal(name: str) -> bool:
    """Internal (local) variables are named with a leading underscore."""
    return name.startswith("_")


@dataclass(frozen=True)
class StateSnapshot:
    """Total assignment to the trace's variables at one timestamp."""

    t: int
    bindings: tuple[tuple[str, TypedValue], ...]

    def __post_init__(self) -> None:
        if not self.bindings:
            raise TraceError(f"snapshot at t={self.t} binds no variables")
        names = [name for name, _ in self.bindings]
        if len(set(names)) != len(names):
            raise TraceError(f"duplicate variable name in snapshot at t={self.t}")

    @cached_property
    def _by_name(self) -> dict[str, TypedValue]:
        return dict(self.bindings)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.bindings)

    def get(self, name: str) -> Optional[TypedValue]:
        return self._by_name.get(name)

    def value(self, name: str) -> TypedValue:
        try:
            return self._by_name[name]
        except KeyError:
            raise TraceError(f"snapshot at t={self.t} binds no variable {name!r}") from None

    def schema(self) -> tuple[tuple[str, ValueType], ...]:
        return tuple(sorted((name, tv.type) for name, tv in self.bindings))


@dataclass(frozen=True)
class ActionRecord:
    name: str
    t: int
    parameters: tuple[TypedValue, ...]

    def __post_init__(self) -> None:
        if not _NAME_RE.match(self.name):
            raise TraceError(f"bad action name {self.name!r}")


@dataclass(frozen=True)
class Sample:
    """A strictly time-ordered collection of snapshots and action records.

    Every snapshot binds the same variable set with the same types; every
    action sits strictly between two snapshots; no timestamps collide.
    """

    snapshots: tuple[StateSnapshot, ...]
    actions: tuple[ActionRecord, ...] = ()
    pos_dimension: int = 2

    def __post_init__(self) -> None:
        if not self.snapshots:
            raise TraceError("a sample needs at least one snapshot")
        if self.pos_dimension not in (2, 3):
            raise TraceError(f"pos dimension must be 2 or 3, got {self.pos_dimension}")
        times = [s.t for s in self.snapshots]
        for a, b in zip(times, times[1:]):
            if a >= b:
                raise TraceError(f"snapshot timestamps not strictly increasing: {a}, {b}")
        schema = self.snapshots[0].schema()
        for snap in self.snapshots[1:]:
            if snap.schema() != schema:
                raise TraceError(
                    f"snapshot at t={snap.t} binds a different variable schema "
                    f"than the one at t={self.snapshots[0].t}"
                )
        for snap in self.snapshots:
            _check_pos_dimension(snap, self.pos_dimension)
        snap_times = set(times)
        seen = set()
        previous = None
        for action in self.actions:
            if previous is not None and action.t < previous:
                raise TraceError("action timestamps not increasing")
            previous = action.t
            if action.t in seen:
                raise TraceError(f"two actions share timestamp {action.t}")
            seen.add(action.t)
            if action.t in snap_times:
                raise TraceError(f"action timestamp {action.t} collides with a snapshot")
            if action.t < times[0] or action.t > times[-1]:
                raise TraceError(
                    f"dangling action {action.name!r} at t={action.t}: "
                    "no snapshot on both sides"
                )

    @cached_property
    def _snapshot_times(self) -> list[int]:
        return [s.t for s in self.snapshots]

    @property
    def variable_names(self) -> tuple[str, ...]:
        return self.snapshots[0].names

    def observable_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.variable_names if not is_internal(n))


def _check_pos_dimension(snapshot: StateSnapshot, dim: int) -> None:
    for name, tv in snapshot.bindings:
        for vt, payload in _walk_base_values(tv.type, tv.payload):
            if vt.name == "pos" and len(payload) != dim:
                raise TraceError(
                    f"variable {name!r} at t={snapshot.t} has a "
                    f"{len(payload)}-dimensional position in a {dim}-dimensional sample"
                )


def _walk_base_values(vt: ValueType, payload):
    if vt.is_product:
        for ct, p in zip(vt.components, payload):
            yield from _walk_base_values(ct, p)
    else:
        yield vt, payload


def adjacent_snapshots(sample: Sample, action: ActionRecord) -> tuple[StateSnapshot, StateSnapshot]:
    """The latest snapshot before and the earliest after the action time."""
    times = sample._snapshot_times
    left = bisect_left(times, action.t) - 1
    right = bisect_right(times, action.t)
    if left < 0 or right >= len(times):
        raise TraceError(f"action at t={action.t} is not bracketed by snapshots")
    return sample.snapshots[left], sample.snapshots[right]


# ---------------------------------------------------------------------------
# canonical line dialect


def ingest_trace(source: Union[str, io.TextIOBase, Iterable[str]]) -> Sample:
    """Parse trace text into a validated sample.

    Accepts a string, an open text stream, or an iterable of lines.  The
    clause-fact dialect is detected automatically and routed to its
    importer.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str):
        text = source
    else:
        text = "\n".join(source)
    if _looks_like_clauses(text):
        return ingest_clause_trace(text)

    snapshots: list[StateSnapshot] = []
    actions: list[ActionRecord] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        tag = fields[0]
        try:
            if tag == "state":
                snapshots.append(_parse_state_line(fields[1:]))
            elif tag == "action":
                actions.append(_parse_action_line(fields[1:]))
            else:
                raise TraceError(f"unknown record tag {tag!r}")
        except (TraceError, TypeSpecError) as exc:
            raise TraceError(str(exc), line=lineno) from None
    if not snapshots:
        raise TraceError("empty trace: no state records")
    return Sample(
        snapshots=tuple(snapshots),
        actions=tuple(actions),
        pos_dimension=_infer_pos_dimension(snapshots),
    )


def _infer_pos_dimension(snapshots: list[StateSnapshot]) -> int:
    for _, tv in snapshots[0].bindings:
        for vt, payload in _walk_base_values(tv.type, tv.payload):
            if vt.name == "pos":
                return len(payload)
    return 2


def _parse_field(field_text: str, expect_key: Optional[str] = None) -> tuple[str, str]:
    key, sep, value = field_text.partition("=")
    if not sep:
        raise TraceError(f"expected key=value, got {field_text!r}")
    if expect_key is not None and key != expect_key:
        raise TraceError(f"expected {expect_key}=..., got {field_text!r}")
    return key, value


def _parse_state_line(fields: list[str]) -> StateSnapshot:
    if not fields:
        raise TraceError("state record without timestamp")
    _, t_text = _parse_field(fields[0], "t")
    bindings = []
    for field_text in fields[1:]:
        name, value_text = _parse_field(field_text)
        if not _NAME_RE.match(name):
            raise TraceError(f"bad variable name {name!r}")
        bindings.append((name, parse_typed_value(value_text)))
    return StateSnapshot(t=_parse_timestamp(t_text), bindings=tuple(bindings))


def _parse_action_line(fields: list[str]) -> ActionRecord:
    if len(fields) != 3:
        raise TraceError("action record needs t=, name= and params= fields")
    _, t_text = _parse_field(fields[0], "t")
    _, name = _parse_field(fields[1], "name")
    _, params_text = _parse_field(fields[2], "params")
    if not (params_text.startswith("[") and params_text.endswith("]")):
        raise TraceError(f"params must be a bracketed list, got {params_text!r}")
    inner = params_text[1:-1]
    params = tuple(
        parse_typed_value(part.strip())
        for part in split_top_level(inner, ",")
        if part.strip()
    )
    return ActionRecord(name=name, t=_parse_timestamp(t_text), parameters=params)


def _parse_timestamp(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise TraceError(f"timestamp {text!r} is not an integer") from None


def serialize_trace(sample: Sample, header: Optional[dict] = None) -> str:
    """Render a sample in the canonical line dialect.

    ``ingest_trace(serialize_trace(s)) == s``.  Records are interleaved in
    timestamp order; an optional header dict becomes a leading comment.
    """
    lines = []
    if header:
        meta = " ".join(f"{k}={v}" for k, v in header.items())
        lines.append(f"# trace v1 {meta}")
    records: list[tuple[int, str]] = []
    for snap in sample.snapshots:
        parts = [f"state t={snap.t}"]
        parts += [f"{name}={format_typed_value(tv)}" for name, tv in snap.bindings]
        records.append((snap.t, " ".join(parts)))
    for action in sample.actions:
        params = ",".join(format_typed_value(p) for p in action.parameters)
        records.append((action.t, f"action t={action.t} name={action.name} params=[{params}]"))
    records.sort(key=lambda item: item[0])
    lines += [text for _, text in records]
    return "\n".join(lines) + "\n"


def read_trace_header(text: str) -> dict[str, str]:
    """Key=value pairs from leading ``#`` comment lines, if any."""
    meta: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if not line.startswith("#"):
            break
        for token in line.lstrip("#").split():
            key, sep, value = token.partition("=")
            if sep:
                meta[key] = value
    return meta


# ---------------------------------------------------------------------------
# clause-fact dialect (secondary importer)


def _looks_like_clauses(text: str) -> bool:
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("%"):
            continue
        return bool(re.match(r"(state_spec|action)\s*\(", line))
    return False


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[()\[\],:;=.*])"
    r"|(?P<quoted>'[^']*'))"
)


@dataclass
class _Tokens:
    items: list[tuple[str, str]]
    pos: int = 0

    def peek(self) -> Optional[tuple[str, str]]:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise TraceError("unexpected end of clause input")
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        kind, value = self.next()
        if value != text:
            raise TraceError(f"expected {text!r}, got {value!r}")

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[1] == text


def tokenize_clauses(text: str) -> _Tokens:
    items: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        if text[pos] == "%":
            eol = text.find("\n", pos)
            pos = len(text) if eol < 0 else eol
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise TraceError(f"cannot tokenize clause text at {text[pos:pos + 20]!r}")
        if m.group("num") is not None:
            items.append(("num", m.group("num")))
        elif m.group("ident") is not None:
            items.append(("ident", m.group("ident")))
        elif m.group("quoted") is not None:
            items.append(("ident", m.group("quoted").strip("'")))
        else:
            items.append(("punct", m.group("punct")))
        pos = m.end()
    return _Tokens(items)


def parse_term(tokens: _Tokens):
    """One term of the clause dialect, as nested Python structures.

    Numbers become floats, identifiers strings, lists Python lists, and a
    compound ``f(a, b)`` becomes the tuple ``("compound", "f", [a, b])``.
    Postfix ``value:type`` becomes ``("typed", value, typename)`` and
    ``key=value`` becomes ``("assign", key, value)``.
    """
    kind, value = tokens.next()
    if kind == "num":
        term = float(value)
    elif kind == "ident":
        if tokens.at("("):
            tokens.next()
            args = _parse_term_list(tokens, ")")
            term = ("compound", value, args)
        elif tokens.at("="):
            tokens.next()
            term = ("assign", value, parse_term(tokens))
        else:
            term = value
    elif value == "[":
        term = _parse_term_list(tokens, "]")
    else:
        raise TraceError(f"unexpected token {value!r} in clause")
    while tokens.at(":"):
        tokens.next()
        kind, tname = tokens.next()
        if kind != "ident":
            raise TraceError(f"expected a type name after ':', got {tname!r}")
        term = ("typed", term, tname)
    return term


def _parse_term_list(tokens: _Tokens, closing: str) -> list:
    items = []
    if tokens.at(closing):
        tokens.next()
        return items
    while True:
        items.append(parse_term(tokens))
        kind, value = tokens.next()
        if value == closing:
            return items
        if value != ",":
            raise TraceError(f"expected ',' or {closing!r}, got {value!r}")


def _typed_term_to_value(term) -> TypedValue:
    if not (isinstance(term, tuple) and term[0] == "typed"):
        raise TraceError(f"expected a typed value, got {term!r}")
    _, payload, tname = term
    vt = base_type(tname)
    if vt.name == "pos":
        if not isinstance(payload, list):
            raise TraceError(f"pos value must be a coordinate list, got {payload!r}")
        return TypedValue(vt, tuple(payload))
    if vt.name == "obj":
        if isinstance(payload, list) and len(payload) == 1 and isinstance(payload[0], str):
            payload = payload[0]
        if not isinstance(payload, str):
            raise TraceError(f"obj value must be a symbol, got {payload!r}")
        return TypedValue(vt, payload)
    if vt.name == "bool":
        return TypedValue(vt, int(payload))
    return TypedValue(vt, payload)


def _entry_to_binding(entry) -> tuple[str, TypedValue]:
    if not isinstance(entry, list) or len(entry) < 2 or not isinstance(entry[0], str):
        raise TraceError(f"bad state variable entry {entry!r}")
    name = entry[0]
    parts = [_typed_term_to_value(part) for part in entry[1:]]
    if len(parts) == 1:
        return name, parts[0]
    vt = product_type(*[p.type for p in parts])
    return name, TypedValue(vt, tuple(p.payload for p in parts))


def ingest_clause_trace(text: str) -> Sample:
    """Importer for the clause-fact dialect (``state_spec``/``action``)."""
    tokens = tokenize_clauses(text)
    snapshots: list[StateSnapshot] = []
    actions: list[ActionRecord] = []
    while tokens.peek() is not None:
        term = parse_term(tokens)
        tokens.expect(".")
        if not (isinstance(term, tuple) and term[0] == "compound"):
            raise TraceError(f"expected a fact, got {term!r}")
        _, functor, args = term
        if functor == "state_spec":
            if len(args) != 2 or not isinstance(args[1], list):
                raise TraceError("state_spec needs a timestamp and a variable list")
            t = int(args[0])
            bindings = tuple(_entry_to_binding(entry) for entry in args[1])
            snapshots.append(StateSnapshot(t=t, bindings=bindings))
        elif functor == "action":
            if len(args) != 3 or not isinstance(args[2], list):
                raise TraceError("action fact needs name, timestamp and parameter list")
            name, t, params = args
            actions.append(
                ActionRecord(
                    name=str(name),
                    t=int(t),
                    parameters=tuple(_typed_term_to_value(p) for p in params),
                )
            )
        else:
            raise TraceError(f"unknown clause functor {functor!r}")
    if not snapshots:
        raise TraceError("empty trace: no state_spec facts")
    snapshots.sort(key=lambda s: s.t)
    actions.sort(key=lambda a: a.t)
    return Sample(
        snapshots=tuple(snapshots),
        actions=tuple(actions),
        pos_dimension=_infer_pos_dimension(snapshots),
    )
