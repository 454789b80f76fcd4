"""Deterministic desk-scale world that generates observation traces.

The robot lives on a small planar (optionally 3-d) floor, carries a
heading in compass degrees, and understands five commands: move_forward
(distance), turn_left/turn_right (angle), grab/drop (object symbol).
Heading 0 points along +axis1 and heading 90 along +axis0, so a forward
move adds ``speed_factor * distance * (sin h, cos h)`` to the position.

Commands that violate their precondition (grabbing with a full gripper,
moving into an obstacle) leave the world unchanged; the trace still gets
the action record plus an identical posterior snapshot, modelling a failed
action.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .trace import ActionRecord, Sample, StateSnapshot
from .types import ANGL, BOOL, DIST, NUM, OBJ, POS, TypedValue, product_type

EMPTY_GRIPPER = "none"

ACTION_NAMES = ("move_forward", "turn_left", "turn_right", "grab", "drop")

_PARAM_TYPES = {
    "move_forward": DIST,
    "turn_left": ANGL,
    "turn_right": ANGL,
    "grab": OBJ,
    "drop": OBJ,
}


class ScenarioError(ValueError):
    """Unknown scenario names or malformed scenario files."""


class CommandError(ValueError):
    """A command whose precondition does not hold in the current world."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned obstacle; collision means the robot centre is inside."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def contains(self, point: Sequence[float]) -> bool:
        return all(
            lo <= c <= hi for lo, c, hi in zip(self.lo, point, self.hi)
        )


@dataclass(frozen=True)
class WorldState:
    position: tuple[float, ...]
    heading: float
    gripper: tuple[str, int] = (EMPTY_GRIPPER, 0)
    objects: tuple[tuple[str, tuple[float, ...]], ...] = ()
    speed_factor: float = 2.0

    def __post_init__(self) -> None:
        if len(self.position) not in (2, 3):
            raise ScenarioError("robot position must be 2- or 3-dimensional")
        if not all(math.isfinite(c) for c in self.position):
            raise ScenarioError("robot position must be finite")
        if not 0.0 <= self.heading < 360.0:
            raise ScenarioError(f"heading {self.heading} outside [0, 360)")
        if self.speed_factor <= 0:
            raise ScenarioError("speed factor must be positive")
        held, flag = self.gripper
        if (held != EMPTY_GRIPPER) != bool(flag):
            raise ScenarioError("gripper symbol and flag disagree")
        names = [name for name, _ in self.objects]
        if held != EMPTY_GRIPPER and held not in names:
            raise ScenarioError(f"held object {held!r} is not in the world")
        if sorted(names) != names or len(set(names)) != len(names):
            raise ScenarioError("objects must be unique and name-sorted")

    def object_position(self, name: str) -> tuple[float, ...]:
        for sym, pos in self.objects:
            if sym == name:
                return pos
        raise CommandError(f"no object named {name!r}")


@dataclass(frozen=True)
class VariableNames:
    """Which world fields publish as which snapshot variables."""

    position: str = "r_pos"
    heading: str = "r_dir"
    gripper: str = "obj_grab"
    object_count: str = "obj_num"
    object_position_prefix: str = "obj_pos_"


@dataclass(frozen=True)
class Scenario:
    name: str
    initial: WorldState
    obstacles: tuple[Box, ...] = ()
    variable_names: VariableNames = field(default_factory=VariableNames)
    grab_radius: float = 3.0


@dataclass(frozen=True)
class Command:
    name: str
    parameter: TypedValue


CommandScript = tuple[Command, ...]


def make_command(name: str, value) -> Command:
    """Build a well-typed command from a raw parameter value."""
    if name not in _PARAM_TYPES:
        raise CommandError(f"unknown command {name!r}")
    return Command(name, TypedValue(_PARAM_TYPES[name], value))


def _rotate(w: WorldState, degrees: float) -> WorldState:
    return replace(w, heading=(w.heading + degrees) % 360.0)


def apply_command(
    w: WorldState,
    cmd: Command,
    obstacles: tuple[Box, ...] = (),
    grab_radius: float = 3.0,
) -> WorldState:
    """One step of world dynamics.

    Moves blocked by an obstacle are silent no-ops (the failed-action
    model); grab and drop raise :class:`CommandError` when their
    precondition fails.
    """
    if cmd.name == "move_forward":
        distance = cmd.parameter.payload
        h = math.radians(w.heading)
        step = w.speed_factor * distance
        delta = (step * math.sin(h), step * math.cos(h))
        target = tuple(
            c + (delta[i] if i < 2 else 0.0) for i, c in enumerate(w.position)
        )
        if any(box.contains(target) for box in obstacles):
            return w
        objects = w.objects
        held = w.gripper[0]
        if held != EMPTY_GRIPPER:
            objects = tuple(
                (
                    name,
                    tuple(
                        c + (delta[i] if i < 2 else 0.0) for i, c in enumerate(pos)
                    )
                    if name == held
                    else pos,
                )
                for name, pos in objects
            )
        return replace(w, position=target, objects=objects)
    if cmd.name == "turn_left":
        return _rotate(w, cmd.parameter.payload)
    if cmd.name == "turn_right":
        return _rotate(w, -cmd.parameter.payload)
    if cmd.name == "grab":
        target = cmd.parameter.payload
        if w.gripper[0] != EMPTY_GRIPPER:
            raise CommandError("gripper already holds an object")
        if math.dist(w.position[:2], w.object_position(target)[:2]) > grab_radius:
            raise CommandError(f"object {target!r} is out of reach")
        return replace(w, gripper=(target, 1))
    if cmd.name == "drop":
        target = cmd.parameter.payload
        if w.gripper[0] == EMPTY_GRIPPER:
            raise CommandError("gripper is empty")
        if w.gripper[0] != target:
            raise CommandError(f"gripper holds {w.gripper[0]!r}, not {target!r}")
        return replace(w, gripper=(EMPTY_GRIPPER, 0))
    raise CommandError(f"unknown command {cmd.name!r}")


def observe(
    w: WorldState,
    t: int,
    names: VariableNames,
    noise: float = 0.0,
    rng: Optional[random.Random] = None,
) -> StateSnapshot:
    """Publish the world as a snapshot under the scenario's naming map."""
    position = w.position
    if noise > 0.0 and rng is not None:
        position = tuple(c + rng.uniform(-noise, noise) for c in position)
    gripper_type = product_type(OBJ, BOOL)
    bindings = [
        (names.position, TypedValue(POS, position)),
        (names.heading, TypedValue(ANGL, w.heading)),
        (names.gripper, TypedValue(gripper_type, w.gripper)),
        (names.object_count, TypedValue(NUM, float(len(w.objects)))),
    ]
    obj_pos_type = product_type(OBJ, POS)
    for sym, pos in w.objects:
        bindings.append(
            (f"{names.object_position_prefix}{sym}", TypedValue(obj_pos_type, (sym, pos)))
        )
    return StateSnapshot(t=t, bindings=tuple(bindings))



def run_script(
    scenario: Scenario,
    script: CommandScript,
    seed: Optional[int] = None,
    noise: float = 0.0,
) -> Sample:
    """Execute a command script and record the full trace.

    The initial snapshot lands at t=1; each command contributes an action
    record at the next even timestamp and a posterior snapshot at the
    following odd one.  Failed commands still emit both records, with the
    posterior equal to the prior.
    """
    rng = random.Random(seed) if noise > 0.0 else None
    names = scenario.variable_names
    world = scenario.initial
    snapshots = [observe(world, 1, names, noise, rng)]
    actions = []
    for index, cmd in enumerate(script):
        try:
            world = apply_command(world, cmd, scenario.obstacles, scenario.grab_radius)
        except CommandError:
            pass
        t_action = 2 * index + 2
        actions.append(
            ActionRecord(name=cmd.name, t=t_action, parameters=(cmd.parameter,))
        )
        snapshots.append(observe(world, t_action + 1, names, noise, rng))
    return Sample(
        snapshots=tuple(snapshots),
        actions=tuple(actions),
        pos_dimension=len(scenario.initial.position),
    )


def random_policy(
    scenario: Scenario,
    n_steps: int,
    seed: int,
    action_names: Optional[Sequence[str]] = None,
) -> CommandScript:
    """A reproducible pseudo-random legal command sequence.

    Parameters are drawn from small exact-float menus so learned constant
    witnesses stay crisp.  Moves that would collide are generated anyway;
    they no-op at execution time and exercise the failed-action path.
    """
    rng = random.Random(seed)
    names = list(action_names or ACTION_NAMES)
    symbols = [sym for sym, _ in scenario.initial.objects]
    if not symbols:
        names = [n for n in names if n not in ("grab", "drop")]
    if not names:
        raise ScenarioError("no commands available for this scenario")
    script = []
    for _ in range(n_steps):
        name = rng.choice(names)
        if name == "move_forward":
            value = rng.choice((1.0, 2.0, 3.0, 4.0))
        elif name in ("turn_left", "turn_right"):
            value = rng.choice((30.0, 45.0, 60.0, 90.0))
        else:
            value = rng.choice(symbols)
        script.append(make_command(name, value))
    return tuple(script)


# ---------------------------------------------------------------------------
# scenarios


def _two_obstacles() -> Scenario:
    objects = (
        ("box_a", (4.0, 10.0)),
        ("box_b", (16.0, 10.0)),
    )
    return Scenario(
        name="two-obstacles",
        initial=WorldState(
            position=(10.0, 10.0),
            heading=0.0,
            objects=objects,
            speed_factor=2.0,
        ),
        obstacles=(
            Box(lo=(3.0, 9.0), hi=(5.0, 11.0)),
            Box(lo=(15.0, 9.0), hi=(17.0, 11.0)),
        ),
        grab_radius=7.0,
    )


def _cluttered() -> Scenario:
    objects = tuple(
        sorted(
            {
                "ball": (3.0, 3.0),
                "block": (17.0, 3.0),
                "cone": (3.0, 17.0),
                "cup": (17.0, 17.0),
                "disc": (6.0, 12.0),
                "ring": (14.0, 8.0),
            }.items()
        )
    )
    return Scenario(
        name="cluttered",
        initial=WorldState(
            position=(10.0, 10.0),
            heading=90.0,
            objects=objects,
            speed_factor=2.0,
        ),
        obstacles=(Box(lo=(9.0, 1.0), hi=(11.0, 2.0)),),
        grab_radius=6.0,
    )


def _open_floor() -> Scenario:
    return Scenario(
        name="open-floor",
        initial=WorldState(position=(0.0, 0.0), heading=90.0, speed_factor=2.0),
    )


_BUILTIN_SCENARIOS = {
    "two-obstacles": _two_obstacles,
    "cluttered": _cluttered,
    "open-floor": _open_floor,
}


def builtin_scenario_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTIN_SCENARIOS))


def builtin_scenario(name: str) -> Scenario:
    try:
        return _BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise ScenarioError(f"no scenario named {name!r}") from None


def scenario_from_json(text: str) -> Scenario:
    """Load a scenario description from its JSON file form."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"bad scenario file: {exc}") from None
    try:
        objects = tuple(
            sorted((sym, tuple(pos)) for sym, pos in doc.get("objects", {}).items())
        )
        initial = WorldState(
            position=tuple(doc["position"]),
            heading=float(doc.get("heading", 0.0)),
            objects=objects,
            speed_factor=float(doc.get("speed_factor", 2.0)),
        )
        obstacles = tuple(
            Box(lo=tuple(b["lo"]), hi=tuple(b["hi"])) for b in doc.get("obstacles", [])
        )
        raw_names = doc.get("variable_names", {})
        names = VariableNames(**raw_names)
        return Scenario(
            name=str(doc.get("name", "custom")),
            initial=initial,
            obstacles=obstacles,
            variable_names=names,
            grab_radius=float(doc.get("grab_radius", 3.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"bad scenario file: {exc}") from None


def scenario_to_json(scenario: Scenario) -> str:
    doc = {
        "name": scenario.name,
        "position": list(scenario.initial.position),
        "heading": scenario.initial.heading,
        "speed_factor": scenario.initial.speed_factor,
        "grab_radius": scenario.grab_radius,
        "objects": {sym: list(pos) for sym, pos in scenario.initial.objects},
        "obstacles": [
            {"lo": list(box.lo), "hi": list(box.hi)} for box in scenario.obstacles
        ],
        "variable_names": {
            "position": scenario.variable_names.position,
            "heading": scenario.variable_names.heading,
            "gripper": scenario.variable_names.gripper,
            "object_count": scenario.variable_names.object_count,
            "object_position_prefix": scenario.variable_names.object_position_prefix,
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
