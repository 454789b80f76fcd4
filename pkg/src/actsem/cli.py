"""Command-line entry points: simulate, learn, inspect.

Exit codes: 0 success, 1 usage or not-found, 2 malformed data.  All
randomness flows from ``--seed``; outputs embed a header with the tool
version, seed and tolerance so runs stay reproducible.  Option precedence
is flags over config file over defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .induction import (
    ActionTheory,
    InductionError,
    LearnOptions,
    explain_theory,
    learn_from_trace,
)
from .relations import RelationError, builtin_library, load_relation_manifest
from .simulator import (
    ScenarioError,
    builtin_scenario,
    builtin_scenario_names,
    random_policy,
    run_script,
    scenario_from_json,
)
from .theoryio import (
    TheoryFormatError,
    clauses_to_theories,
    read_theories,
    theories_to_clauses,
    write_theories,
)
from .trace import TraceError, ingest_trace, read_trace_header, serialize_trace
from .types import DEFAULT_TOLERANCE, TypeSpecError

_TOOL = f"actsem/{__version__}"


@dataclass(frozen=True)
class RunConfig:
    command: str
    trace: Optional[str] = None
    theories: Optional[str] = None
    out: Optional[str] = None
    scenario: str = "two-obstacles"
    seed: int = 0
    steps: int = 100
    tolerance: float = DEFAULT_TOLERANCE
    policy: Optional[str] = None
    noise: float = 0.0
    learn_preservation: bool = False
    assume_success: bool = True
    include_internal_vars: bool = False
    relations: Optional[str] = None
    heading_var: str = "r_dir"
    position_var: str = "r_pos"
    verbose: bool = False
    format: str = "text"
    action: Optional[str] = None


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2 (2 means bad data here)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _bool_flag(text: str) -> bool:
    if text in ("true", "1", "yes"):
        return True
    if text in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="actsem", description=__doc__)
    parser.add_argument("--version", action="version", version=_TOOL)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run the world simulator and write a trace")
    sim.add_argument("--scenario", default=None, help="built-in name or scenario file")
    sim.add_argument("--steps", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", default=None, help="trace file to write (default stdout)")
    sim.add_argument(
        "--policy", default=None, help="comma-separated command names to sample from"
    )
    sim.add_argument("--noise", type=float, default=None)

    learn = sub.add_parser("learn", help="induce per-action theories from a trace")
    learn.add_argument("trace", help="trace file (line or clause dialect)")
    learn.add_argument("--out", default=None, help="theory file to write (default stdout)")
    learn.add_argument("--relations", default=None, help="extra relation manifest (JSON)")
    learn.add_argument("--heading-var", dest="heading_var", default=None)
    learn.add_argument("--position-var", dest="position_var", default=None)
    learn.add_argument("--learn-preservation", dest="learn_preservation",
                       action="store_const", const=True, default=None)
    learn.add_argument("--assume-success", dest="assume_success", type=_bool_flag,
                       nargs="?", const=True, default=None, metavar="true|false")
    learn.add_argument("--include-internal-vars", dest="include_internal_vars",
                       action="store_const", const=True, default=None)
    learn.add_argument("--verbose", action="store_const", const=True, default=None)

    inspect = sub.add_parser("inspect", help="render a learned theory file")
    inspect.add_argument("theories", help="theory file written by the learn command")
    inspect.add_argument("--action", default=None, help="restrict to one action name")
    inspect.add_argument("--format", choices=("text", "clause"), default=None)

    for p in (sim, learn, inspect):
        p.add_argument("--tolerance", type=float, default=None)
        p.add_argument("--config", default=None, help="JSON config file")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Layer CLI flags over the config file over the dataclass defaults."""
    file_values = {}
    if getattr(args, "config", None):
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise TraceError(f"bad config file {args.config}: {exc}") from None
    values = {"command": args.command}
    for f in dataclasses.fields(RunConfig):
        if f.name == "command":
            continue
        cli_value = getattr(args, f.name, None)
        if cli_value is not None:
            values[f.name] = cli_value
        elif f.name in file_values:
            values[f.name] = file_values[f.name]
    return RunConfig(**values)


def _resolve_scenario(name: str):
    path = Path(name)
    if path.suffix == ".json" or path.exists():
        try:
            text = path.read_text()
        except OSError:
            return None
        return scenario_from_json(text)
    try:
        return builtin_scenario(name)
    except ScenarioError:
        return None


def _write_output(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_simulate(config: RunConfig) -> int:
    scenario = _resolve_scenario(config.scenario)
    if scenario is None:
        print(
            f"actsem simulate: no scenario named {config.scenario!r} "
            f"(built-ins: {', '.join(builtin_scenario_names())})",
            file=sys.stderr,
        )
        return 1
    action_names = config.policy.split(",") if config.policy else None
    script = random_policy(scenario, config.steps, config.seed, action_names)
    sample = run_script(scenario, script, seed=config.seed, noise=config.noise)
    header = {
        "tool": _TOOL,
        "scenario": scenario.name,
        "seed": config.seed,
        "steps": config.steps,
        "tolerance": config.tolerance,
    }
    _write_output(config.out, serialize_trace(sample, header))
    counts: dict[str, int] = {}
    for action in sample.actions:
        counts[action.name] = counts.get(action.name, 0) + 1
    summary = ", ".join(f"{name}={n}" for name, n in sorted(counts.items()))
    print(
        f"wrote {len(sample.snapshots)} snapshots and {len(sample.actions)} actions"
        + (f" to {config.out}" if config.out else "")
    )
    if summary:
        print(f"per-action counts: {summary}")
    return 0


def _load_library(config: RunConfig):
    library = builtin_library(config.heading_var, config.position_var)
    if config.relations:
        manifest = Path(config.relations).read_text()
        for rel in load_relation_manifest(manifest):
            library = library.register(rel)
    return library


def cmd_learn(config: RunConfig) -> int:
    trace_path = Path(config.trace)
    if not trace_path.exists():
        print(f"actsem learn: no such trace file {config.trace!r}", file=sys.stderr)
        return 1
    text = trace_path.read_text()
    sample = ingest_trace(text)
    library = _load_library(config)
    options = LearnOptions(
        tolerance=config.tolerance,
        assume_success=config.assume_success,
        learn_preservation=config.learn_preservation,
        include_internal=config.include_internal_vars,
    )

    def report(action, refined: ActionTheory) -> None:
        per_var = ", ".join(
            f"{var}={len(refined.candidates[var])}" for var in refined.variables()
        )
        print(f"refined {action.name} at t={action.t}: {per_var or 'no variables'}")

    store = learn_from_trace(
        sample, library, options, progress=report if config.verbose else None
    )
    header = {
        "tool": _TOOL,
        "tolerance": config.tolerance,
        "seed": read_trace_header(text).get("seed", config.seed),
        "source": trace_path.name,
    }
    _write_output(config.out, write_theories(store.current, header))
    for name in store.actions():
        theory = store.theory(name)
        print(
            f"{name}: {len(theory.candidates)} variables, "
            f"{theory.total_candidates()} candidates"
        )
    if config.out:
        print(f"wrote theories for {len(store.current)} actions to {config.out}")
    return 0


def cmd_inspect(config: RunConfig) -> int:
    path = Path(config.theories)
    if not path.exists():
        print(f"actsem inspect: no such theory file {config.theories!r}", file=sys.stderr)
        return 1
    text = path.read_text()
    if text.lstrip().startswith("action_theory("):
        theories = clauses_to_theories(text)
    else:
        theories = read_theories(text)
    if config.action is not None:
        if config.action not in theories:
            print(f"no such action: {config.action}", file=sys.stderr)
            return 1
        theories = {config.action: theories[config.action]}
    if config.format == "clause":
        sys.stdout.write(theories_to_clauses(theories))
    else:
        for name in sorted(theories):
            sys.stdout.write(explain_theory(theories[name]))
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        if config.command == "simulate":
            return cmd_simulate(config)
        if config.command == "learn":
            return cmd_learn(config)
        return cmd_inspect(config)
    except (TraceError, TypeSpecError, RelationError, InductionError,
            TheoryFormatError, ScenarioError) as exc:
        print(f"actsem {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"actsem {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
