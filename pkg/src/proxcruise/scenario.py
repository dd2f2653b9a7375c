"""World model: people, obstacles, map bounds, motion scripts and the scenario file.

A scenario file is a YAML document with top-level keys ``size``,
``robot_start``, ``persons``, ``obstacles`` and ``params``. All lengths are
meters, angles radians in (-pi, pi], times seconds. Unknown keys are rejected
at every level so typos fail loudly instead of being silently ignored.

Example::

    size: [14.0, 14.0]
    robot_start: [7.0, 7.0, 0.0]
    persons:
      - {id: 1, x: 2.8, y: 2.1, theta: 2.3562}
      - id: 2
        x: 11.0
        y: 3.0
        theta: 3.1416
        script:
          - [2.0, 11.0, 3.0, 3.1416]
          - [10.0, 7.0, 3.0, 3.1416]
    obstacles:
      - {rect: [0.0, 0.8, 0.0, 0.8], inflation: 0.3}
      - {circle: [7.0, 1.0, 0.4]}
    params:
      a_thres: 0.5

The person's ``x, y, theta`` give the pose at t = 0; script waypoint times
must be strictly increasing and start after 0. Scripted motion interpolates
linearly in position and along the shortest arc in heading, holding the last
waypoint forever.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import yaml

from .params import ParamError, ParamSet, params_from_mapping

DEFAULT_INFLATION = 0.3
_COINCIDENT_EPS = 1e-9

# simulation clock step, seconds
DT = 0.1


class ScenarioError(ValueError):
    """Malformed scenario file or a world state that violates an invariant."""


def wrap_angle(theta: float) -> float:
    """Normalize an angle into (-pi, pi]."""
    r = (theta + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if r == -math.pi else r


@dataclass(frozen=True)
class PersonState:
    """A person's pose plus an optional timed waypoint script."""

    id: int
    x: float
    y: float
    theta: float
    script: tuple[tuple[float, float, float, float], ...] | None = None

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def heading_vector(self) -> tuple[float, float]:
        return (math.cos(self.theta), math.sin(self.theta))


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned rectangle or circle with a reactive inflation margin."""

    kind: str  # "rect" | "circle"
    rect: tuple[float, float, float, float] | None = None  # x_min, x_max, y_min, y_max
    circle: tuple[float, float, float] | None = None  # cx, cy, radius
    inflation: float = DEFAULT_INFLATION

    def contains(self, x: float, y: float, inflated: bool = False) -> bool:
        pad = self.inflation if inflated else 0.0
        if self.kind == "rect":
            x0, x1, y0, y1 = self.rect
            return (x0 - pad) <= x <= (x1 + pad) and (y0 - pad) <= y <= (y1 + pad)
        cx, cy, r = self.circle
        return math.hypot(x - cx, y - cy) <= r + pad

    def clearance(self, x: float, y: float) -> float:
        """Distance from (x, y) to the inflated boundary; 0 if inside."""
        if self.kind == "rect":
            x0, x1, y0, y1 = self.rect
            dx = max(x0 - self.inflation - x, 0.0, x - x1 - self.inflation)
            dy = max(y0 - self.inflation - y, 0.0, y - y1 - self.inflation)
            return math.hypot(dx, dy)
        cx, cy, r = self.circle
        return max(0.0, math.hypot(x - cx, y - cy) - r - self.inflation)


@dataclass(frozen=True)
class Scenario:
    width: float
    height: float
    robot_start: tuple[float, float, float]
    persons: tuple[PersonState, ...] = ()
    obstacles: tuple[Obstacle, ...] = ()
    params: ParamSet = field(default_factory=ParamSet)

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height

    def person_by_id(self, pid: int) -> PersonState:
        for p in self.persons:
            if p.id == pid:
                return p
        raise KeyError(pid)


def in_obstacle(scenario: Scenario, p: Sequence[float], inflated: bool = False) -> bool:
    """True iff ``p`` lies inside the (optionally inflated) boundary of any obstacle."""
    x, y = float(p[0]), float(p[1])
    return any(o.contains(x, y, inflated=inflated) for o in scenario.obstacles)


def _interp_heading(t0: float, t1: float, frac: float) -> float:
    return wrap_angle(t0 + frac * wrap_angle(t1 - t0))


def _person_at(person: PersonState, t: float) -> PersonState:
    if person.script is None:
        return person
    times = [w[0] for w in person.script]
    pts = ((0.0, person.x, person.y, person.theta),) + person.script
    times = [0.0] + times
    if t >= times[-1]:
        _, x, y, th = pts[-1]
        return replace(person, x=x, y=y, theta=th, script=None)
    i = bisect_right(times, t) - 1
    t0, x0, y0, th0 = pts[i]
    t1, x1, y1, th1 = pts[i + 1]
    frac = (t - t0) / (t1 - t0)
    return replace(
        person,
        x=x0 + frac * (x1 - x0),
        y=y0 + frac * (y1 - y0),
        theta=_interp_heading(th0, th1, frac),
    )


def state_at(scenario: Scenario, t: float) -> list[PersonState]:
    """Person states at time ``t``; a person whose script has finished is
    returned with ``script=None`` (static from then on)."""
    if t < 0.0:
        raise ValueError(f"time must be non-negative, got {t}")
    return [_person_at(p, t) for p in scenario.persons]


# ---------------------------------------------------------------------------
# file parsing

def _require_keys(data: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {', '.join(unknown)}")
    missing = sorted(required - set(data))
    if missing:
        raise ScenarioError(f"{where}: missing keys {', '.join(missing)}")


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected number, got {value!r}")
    return float(value)


def _number_list(value: Any, n: int, where: str) -> list[float]:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ScenarioError(f"{where}: expected list of {n} numbers")
    return [_number(v, where) for v in value]


def _parse_person(data: Any, idx: int) -> PersonState:
    where = f"persons[{idx}]"
    if not isinstance(data, dict):
        raise ScenarioError(f"{where}: expected mapping")
    _require_keys(data, {"id", "x", "y", "theta", "script"}, {"id", "x", "y", "theta"}, where)
    pid = data["id"]
    if isinstance(pid, bool) or not isinstance(pid, int):
        raise ScenarioError(f"{where}: id must be an integer")
    script = None
    if data.get("script") is not None:
        raw = data["script"]
        if not isinstance(raw, list) or not raw:
            raise ScenarioError(f"{where}.script: expected non-empty list of [t, x, y, theta]")
        wps = []
        for j, wp in enumerate(raw):
            t, x, y, th = _number_list(wp, 4, f"{where}.script[{j}]")
            wps.append((t, x, y, wrap_angle(th)))
        if wps[0][0] <= 0.0:
            raise ScenarioError(f"{where}.script: first waypoint time must be > 0")
        for j in range(1, len(wps)):
            if wps[j][0] <= wps[j - 1][0]:
                raise ScenarioError(f"{where}.script: times must be strictly increasing")
        script = tuple(wps)
    return PersonState(
        id=pid,
        x=_number(data["x"], f"{where}.x"),
        y=_number(data["y"], f"{where}.y"),
        theta=wrap_angle(_number(data["theta"], f"{where}.theta")),
        script=script,
    )


def _parse_obstacle(data: Any, idx: int) -> Obstacle:
    where = f"obstacles[{idx}]"
    if not isinstance(data, dict):
        raise ScenarioError(f"{where}: expected mapping")
    _require_keys(data, {"rect", "circle", "inflation"}, set(), where)
    has_rect = "rect" in data
    has_circle = "circle" in data
    if has_rect == has_circle:
        raise ScenarioError(f"{where}: exactly one of rect/circle required")
    inflation = _number(data.get("inflation", DEFAULT_INFLATION), f"{where}.inflation")
    if inflation < 0.0:
        raise ScenarioError(f"{where}: inflation must be >= 0")
    if has_rect:
        x0, x1, y0, y1 = _number_list(data["rect"], 4, f"{where}.rect")
        if x0 >= x1 or y0 >= y1:
            raise ScenarioError(f"{where}.rect: need x_min < x_max and y_min < y_max")
        return Obstacle(kind="rect", rect=(x0, x1, y0, y1), inflation=inflation)
    cx, cy, r = _number_list(data["circle"], 3, f"{where}.circle")
    if r <= 0.0:
        raise ScenarioError(f"{where}.circle: radius must be > 0")
    return Obstacle(kind="circle", circle=(cx, cy, r), inflation=inflation)


def validate_scenario(sc: Scenario) -> None:
    """Check the t = 0 world invariants; raises ScenarioError on violation."""
    if sc.width <= 0.0 or sc.height <= 0.0:
        raise ScenarioError("size: width and height must be > 0")
    rx, ry, _ = sc.robot_start
    if not sc.in_bounds(rx, ry):
        raise ScenarioError(f"robot_start ({rx}, {ry}) outside map bounds")
    if in_obstacle(sc, (rx, ry), inflated=True):
        raise ScenarioError("robot_start inside an inflated obstacle")
    seen_ids: set[int] = set()
    for p in sc.persons:
        if p.id in seen_ids:
            raise ScenarioError(f"duplicate person id {p.id}")
        seen_ids.add(p.id)
        if not sc.in_bounds(p.x, p.y):
            raise ScenarioError(f"person {p.id} at ({p.x}, {p.y}) outside map bounds")
        if in_obstacle(sc, (p.x, p.y), inflated=True):
            raise ScenarioError(f"person {p.id} inside an inflated obstacle")
    for i, pa in enumerate(sc.persons):
        for pb in sc.persons[i + 1:]:
            if math.hypot(pa.x - pb.x, pa.y - pb.y) < _COINCIDENT_EPS:
                raise ScenarioError(f"persons {pa.id} and {pb.id} have coincident positions")


def scenario_from_dict(data: Any) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("top level: expected mapping")
    _require_keys(
        data,
        {"size", "robot_start", "persons", "obstacles", "params"},
        {"size", "robot_start"},
        "top level",
    )
    width, height = _number_list(data["size"], 2, "size")
    sx, sy, sth = _number_list(data["robot_start"], 3, "robot_start")
    persons_raw = data.get("persons") or []
    if not isinstance(persons_raw, list):
        raise ScenarioError("persons: expected list")
    persons = tuple(_parse_person(p, i) for i, p in enumerate(persons_raw))
    obstacles_raw = data.get("obstacles") or []
    if not isinstance(obstacles_raw, list):
        raise ScenarioError("obstacles: expected list")
    obstacles = tuple(_parse_obstacle(o, i) for i, o in enumerate(obstacles_raw))
    try:
        params = params_from_mapping(data.get("params"))
    except ParamError as exc:
        raise ScenarioError(f"params: {exc}") from exc
    sc = Scenario(
        width=width,
        height=height,
        robot_start=(sx, sy, wrap_angle(sth)),
        persons=persons,
        obstacles=obstacles,
        params=params,
    )
    validate_scenario(sc)
    return sc


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: parse error: {exc}") from exc
    return scenario_from_dict(data)


def scenario_to_dict(sc: Scenario) -> dict:
    data: dict[str, Any] = {
        "size": [sc.width, sc.height],
        "robot_start": list(sc.robot_start),
        "persons": [],
        "obstacles": [],
        "params": {},
    }
    for p in sc.persons:
        entry: dict[str, Any] = {"id": p.id, "x": p.x, "y": p.y, "theta": p.theta}
        if p.script is not None:
            entry["script"] = [list(wp) for wp in p.script]
        data["persons"].append(entry)
    for o in sc.obstacles:
        if o.kind == "rect":
            data["obstacles"].append({"rect": list(o.rect), "inflation": o.inflation})
        else:
            data["obstacles"].append({"circle": list(o.circle), "inflation": o.inflation})
    defaults = ParamSet()
    for name in vars(defaults):
        value = getattr(sc.params, name)
        if value != getattr(defaults, name):
            data["params"][name] = value
    if not data["params"]:
        del data["params"]
    return data


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(
        yaml.safe_dump(scenario_to_dict(sc), sort_keys=False), encoding="utf-8"
    )
