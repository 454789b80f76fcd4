"""Reading and writing learned theories.

Canonical theory documents are line-delimited and deterministic:

    # theory v1 tool=actsem/0.1.0 tolerance=1e-09 seed=42
    theory action=move_forward params=[dist]
    variable var=r_pos
    candidate var=r_pos relation=has_new_position sig=pos,dist->pos param=0 constants=[scale=2.0]

The clause dialect mirrors the classic fact form, one ``action_theory``
fact per action, with a trailing option list inside each relation term so
parameter slots and constant witnesses survive a round trip:

    action_theory(move_forward, [D:dist], relation_is([[r_pos,
        [has_new_position([X1,Y1]:pos, D:dist, [X2,Y2]:pos, [param=0, scale=2.0])]]])).
"""

from __future__ import annotations

from typing import Optional

from .induction import ActionTheory, Candidate, parameter_placeholder, render_candidate
from .trace import TraceError, parse_term, tokenize_clauses
from .types import TypeSpecError, ValueType, parse_type

Theories = dict[str, ActionTheory]


class TheoryFormatError(ValueError):
    """Malformed theory document or clause."""


def _format_sig(types: tuple[ValueType, ...]) -> str:
    if len(types) == 3:
        return f"{types[0]},{types[1]}->{types[2]}"
    return f"{types[0]},{types[1]}"


def _parse_sig(text: str) -> tuple[ValueType, ...]:
    head, arrow, result = text.partition("->")
    parts = [p for p in head.split(",") if p]
    if arrow:
        parts.append(result)
    try:
        types = tuple(parse_type(p) for p in parts)
    except TypeSpecError as exc:
        raise TheoryFormatError(str(exc)) from None
    if len(types) not in (2, 3):
        raise TheoryFormatError(f"bad signature {text!r}")
    return types


def _format_constant_value(value) -> str:
    return repr(float(value)) if isinstance(value, (int, float)) else str(value)


def _parse_constant_value(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def write_theories(theories: Theories, header: Optional[dict] = None) -> str:
    """Render theories deterministically (actions, variables, candidates sorted)."""
    lines = []
    meta = dict(header or {})
    parts = " ".join(f"{k}={v}" for k, v in meta.items())
    lines.append(f"# theory v1 {parts}".rstrip())
    for action in sorted(theories):
        theory = theories[action]
        params = ",".join(str(t) for t in theory.parameter_types)
        lines.append(f"theory action={action} params=[{params}]")
        for variable in theory.variables():
            lines.append(f"variable var={variable}")
            for cand in sorted(theory.candidates[variable], key=Candidate.sort_key):
                constants = ",".join(
                    f"{name}={_format_constant_value(value)}"
                    for name, value in cand.constants
                )
                lines.append(
                    f"candidate var={variable} relation={cand.relation} "
                    f"sig={_format_sig(cand.signature)} "
                    f"param={cand.parameter_index} constants=[{constants}]"
                )
    return "\n".join(lines) + "\n"


def _fields(line: str) -> dict[str, str]:
    out = {}
    for token in line.split()[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise TheoryFormatError(f"expected key=value, got {token!r}")
        out[key] = value
    return out


def read_theories(text: str) -> Theories:
    """Parse a canonical theory document back into per-action theories."""
    theories: Theories = {}
    current: Optional[str] = None
    pending: dict[str, dict[str, set[Candidate]]] = {}
    params: dict[str, tuple[ValueType, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag = line.split(None, 1)[0]
        try:
            fields = _fields(line)
            if tag == "theory":
                current = fields["action"]
                inner = fields["params"].strip("[]")
                params[current] = tuple(
                    parse_type(p) for p in inner.split(",") if p
                )
                pending.setdefault(current, {})
            elif tag == "variable":
                if current is None:
                    raise TheoryFormatError("variable record before any theory record")
                pending[current].setdefault(fields["var"], set())
            elif tag == "candidate":
                if current is None:
                    raise TheoryFormatError("candidate record before any theory record")
                inner = fields["constants"].strip("[]")
                constants = []
                for item in inner.split(","):
                    if not item:
                        continue
                    name, sep, value = item.partition("=")
                    if not sep:
                        raise TheoryFormatError(f"bad constant item {item!r}")
                    constants.append((name, _parse_constant_value(value)))
                cand = Candidate(
                    relation=fields["relation"],
                    signature=_parse_sig(fields["sig"]),
                    constants=tuple(constants),
                    parameter_index=int(fields["param"]),
                )
                pending[current].setdefault(fields["var"], set()).add(cand)
            else:
                raise TheoryFormatError(f"unknown record tag {tag!r}")
        except (KeyError, ValueError) as exc:
            raise TheoryFormatError(f"line {lineno}: {exc}") from None
    for action, variables in pending.items():
        theories[action] = ActionTheory(
            action=action,
            parameter_types=params[action],
            candidates={v: frozenset(c) for v, c in variables.items()},
        )
    return theories


# ---------------------------------------------------------------------------
# clause dialect


def _clause_candidate(cand: Candidate, parameter_count: int) -> str:
    pattern = render_candidate(cand, parameter_count)
    options = [f"param={cand.parameter_index}"]
    options += [
        f"{name}={_format_constant_value(value)}" for name, value in cand.constants
    ]
    # splice the option list in as a final argument
    return pattern[:-1] + f", [{', '.join(options)}])"


def theories_to_clauses(theories: Theories) -> str:
    """Export to the classic fact form, one ``action_theory`` per action."""
    clauses = []
    for action in sorted(theories):
        theory = theories[action]
        k = len(theory.parameter_types)
        param_terms = ", ".join(
            f"{parameter_placeholder(t, i, k)}:{t}"
            for i, t in enumerate(theory.parameter_types)
        )
        entries = []
        for variable in theory.variables():
            cands = sorted(theory.candidates[variable], key=Candidate.sort_key)
            rendered = ", ".join(_clause_candidate(c, k) for c in cands)
            entries.append(f"[{variable}, [{rendered}]]")
        body = ", ".join(entries)
        clauses.append(
            f"action_theory({action}, [{param_terms}], relation_is([{body}]))."
        )
    return "\n".join(clauses) + "\n"


def _term_to_candidate(term, parameter_types) -> Candidate:
    if not (isinstance(term, tuple) and term[0] == "compound"):
        raise TheoryFormatError(f"expected a relation term, got {term!r}")
    _, name, args = term
    options = []
    if args and isinstance(args[-1], list):
        options = args[-1]
        args = args[:-1]
    types = []
    for arg in args:
        if not (isinstance(arg, tuple) and arg[0] == "typed"):
            raise TheoryFormatError(f"relation argument {arg!r} lacks a type")
        types.append(parse_type(arg[2]))
    parameter_index = 0
    constants = []
    for opt in options:
        if not (isinstance(opt, tuple) and opt[0] == "assign"):
            raise TheoryFormatError(f"bad option {opt!r} in relation term")
        _, key, value = opt
        if key == "param":
            parameter_index = int(value)
        else:
            constants.append((key, value))
    return Candidate(
        relation=name,
        signature=tuple(types),
        constants=tuple(sorted(constants)),
        parameter_index=parameter_index,
    )


def clauses_to_theories(text: str) -> Theories:
    """Importer for the clause dialect produced by :func:`theories_to_clauses`."""
    try:
        tokens = tokenize_clauses(text)
        theories: Theories = {}
        while tokens.peek() is not None:
            term = parse_term(tokens)
            tokens.expect(".")
            if not (
                isinstance(term, tuple)
                and term[0] == "compound"
                and term[1] == "action_theory"
                and len(term[2]) == 3
            ):
                raise TheoryFormatError(f"expected an action_theory fact, got {term!r}")
            action, param_list, relation_is = term[2]
            action = str(action)
            if not isinstance(param_list, list):
                raise TheoryFormatError("parameter list missing")
            parameter_types = []
            for p in param_list:
                if not (isinstance(p, tuple) and p[0] == "typed"):
                    raise TheoryFormatError(f"parameter {p!r} lacks a type")
                parameter_types.append(parse_type(p[2]))
            if not (
                isinstance(relation_is, tuple)
                and relation_is[0] == "compound"
                and relation_is[1] == "relation_is"
            ):
                raise TheoryFormatError("third argument must be relation_is([...])")
            candidates: dict[str, frozenset[Candidate]] = {}
            for entry in relation_is[2][0]:
                if not (isinstance(entry, list) and len(entry) == 2):
                    raise TheoryFormatError(f"bad variable entry {entry!r}")
                variable, terms = entry
                candidates[str(variable)] = frozenset(
                    _term_to_candidate(t, parameter_types) for t in terms
                )
            theories[action] = ActionTheory(
                action=action,
                parameter_types=tuple(parameter_types),
                candidates=candidates,
            )
        return theories
    except (TraceError, TypeSpecError, ValueError) as exc:
        if isinstance(exc, TheoryFormatError):
            raise
        raise TheoryFormatError(str(exc)) from None
