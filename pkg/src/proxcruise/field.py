"""Dipole-style proxemics vector field of persons, groups and whole scenes.

Each person carries a planar dipole field evaluated in their local frame and
rigidly rotated with their heading; group and scene fields are plain
superpositions of member fields. Everything is linear in the per-person
fields, which the property tests lean on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .clustering import Group, GroupSet
from .params import ParamSet
from .scenario import PersonState, Scenario, in_obstacle, state_at

# queries closer than this to a person are treated as singular / forbidden
R_MIN = 0.2


class SingularityError(ValueError):
    """Query point too close to a field source."""


@dataclass(frozen=True)
class FieldSample:
    vx: float
    vy: float

    @property
    def magnitude(self) -> float:
        return math.hypot(self.vx, self.vy)

    @property
    def direction(self) -> float:
        return math.atan2(self.vy, self.vx)

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy], dtype=np.float64)


def _local_dipole(lx: np.ndarray, ly: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    r2 = lx * lx + ly * ly
    r5 = np.maximum(r2, 1e-24) ** 2.5
    mx = alpha * (2.0 * lx * lx - ly * ly) / r5
    my = alpha * (3.0 * lx * ly) / r5
    return mx, my


@dataclass(frozen=True)
class FieldMap:
    """Vectorized evaluator for the superposed field of a set of persons."""

    positions: np.ndarray  # (P, 2)
    headings: np.ndarray  # (P,)
    alpha: float

    @classmethod
    def from_persons(cls, persons: Sequence[PersonState], params: ParamSet) -> "FieldMap":
        pos = np.array([[p.x, p.y] for p in persons], dtype=np.float64).reshape(-1, 2)
        hdg = np.array([p.theta for p in persons], dtype=np.float64)
        return cls(positions=pos, headings=hdg, alpha=params.alpha)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Summed field vectors at ``points`` (N, 2); no singularity guard."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if self.positions.shape[0] == 0:
            return np.zeros_like(pts)
        dx = pts[:, None, 0] - self.positions[None, :, 0]
        dy = pts[:, None, 1] - self.positions[None, :, 1]
        c = np.cos(self.headings)[None, :]
        s = np.sin(self.headings)[None, :]
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        mx, my = _local_dipole(lx, ly, self.alpha)
        vx = c * mx - s * my
        vy = s * mx + c * my
        return np.stack([vx.sum(axis=1), vy.sum(axis=1)], axis=1)

    def min_source_distance(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if self.positions.shape[0] == 0:
            return np.full(pts.shape[0], np.inf)
        d = np.hypot(
            pts[:, None, 0] - self.positions[None, :, 0],
            pts[:, None, 1] - self.positions[None, :, 1],
        )
        return d.min(axis=1)


def dipole_local(q: Sequence[float], center: Sequence[float], alpha: float) -> FieldSample:
    """Raw dipole components at ``q`` for a source at ``center`` (no rotation)."""
    lx = float(q[0]) - float(center[0])
    ly = float(q[1]) - float(center[1])
    if math.hypot(lx, ly) < R_MIN:
        raise SingularityError(f"query within {R_MIN} m of field center")
    mx, my = _local_dipole(np.array([lx]), np.array([ly]), alpha)
    return FieldSample(float(mx[0]), float(my[0]))


def person_field(q: Sequence[float], person: PersonState, params: ParamSet) -> FieldSample:
    """Dipole field rigidly attached to the person's pose: the query is taken
    into the local frame, and the resulting vector rotated back by the heading."""
    dx = float(q[0]) - person.x
    dy = float(q[1]) - person.y
    if math.hypot(dx, dy) < R_MIN:
        raise SingularityError(f"query within {R_MIN} m of person {person.id}")
    c, s = math.cos(person.theta), math.sin(person.theta)
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    mx, my = _local_dipole(np.array([lx]), np.array([ly]), params.alpha)
    return FieldSample(c * float(mx[0]) - s * float(my[0]), s * float(mx[0]) + c * float(my[0]))


def _resolve_members(group: Group, persons: Sequence[PersonState]) -> list[PersonState]:
    by_id = {p.id: p for p in persons}
    try:
        return [by_id[m] for m in group.members]
    except KeyError as exc:
        raise KeyError(f"group member {exc.args[0]} not among persons") from exc


def group_field(
    q: Sequence[float], group: Group, persons: Sequence[PersonState], params: ParamSet
) -> FieldSample:
    """Componentwise sum of member fields."""
    vx = vy = 0.0
    for member in _resolve_members(group, persons):
        if math.hypot(float(q[0]) - member.x, float(q[1]) - member.y) < R_MIN:
            raise SingularityError(f"query within {R_MIN} m of person {member.id}")
        sample = person_field(q, member, params)
        vx += sample.vx
        vy += sample.vy
    return FieldSample(vx, vy)


def global_field(
    q: Sequence[float],
    groups: GroupSet | Iterable[Group],
    persons: Sequence[PersonState],
    params: ParamSet,
) -> FieldSample:
    vx = vy = 0.0
    for group in groups:
        sample = group_field(q, group, persons, params)
        vx += sample.vx
        vy += sample.vy
    return FieldSample(vx, vy)


@dataclass(frozen=True)
class FieldGrid:
    xs: np.ndarray  # (nx,)
    ys: np.ndarray  # (ny,)
    vx: np.ndarray  # (ny, nx)
    vy: np.ndarray  # (ny, nx)
    valid: np.ndarray  # (ny, nx) bool


def export_field_grid(
    scenario: Scenario,
    t: float = 0.0,
    resolution: float = 0.1,
    groups: Iterable[Group] | None = None,
) -> FieldGrid:
    """Sample the scene field on a fencepost-inclusive grid over the map.

    Cells within R_MIN of a person or inside an (uninflated) obstacle are
    flagged invalid and carry zero vectors. Restricting ``groups`` sums only
    those groups' members, which makes per-group grids superpose exactly to
    the full grid.
    """
    if resolution <= 0.0:
        raise ValueError("resolution must be > 0")
    persons = state_at(scenario, t)
    if groups is not None:
        wanted = {m for g in groups for m in g.members}
        persons = [p for p in persons if p.id in wanted]
    nx = int(round(scenario.width / resolution)) + 1
    ny = int(round(scenario.height / resolution)) + 1
    xs = np.linspace(0.0, scenario.width, nx)
    ys = np.linspace(0.0, scenario.height, ny)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    fmap = FieldMap.from_persons(persons, scenario.params)
    values = fmap.values(pts)
    near = fmap.min_source_distance(pts) < R_MIN
    blocked = np.array([in_obstacle(scenario, p) for p in pts]) if scenario.obstacles else np.zeros(len(pts), bool)
    invalid = near | blocked
    values[invalid] = 0.0
    shape = (ny, nx)
    return FieldGrid(
        xs=xs,
        ys=ys,
        vx=values[:, 0].reshape(shape),
        vy=values[:, 1].reshape(shape),
        valid=(~invalid).reshape(shape),
    )


def write_field_grid_csv(grid: FieldGrid, out: TextIO) -> None:
    """Row-major CSV export: header x,y,vx,vy,valid with 9 significant digits."""
    out.write("x,y,vx,vy,valid\n")
    for iy, y in enumerate(grid.ys):
        for ix, x in enumerate(grid.xs):
            out.write(
                f"{x:.9g},{y:.9g},{grid.vx[iy, ix]:.9g},{grid.vy[iy, ix]:.9g},"
                f"{1 if grid.valid[iy, ix] else 0}\n"
            )
