"""Optimal observation positions and social gaze spaces for groups.

The observation position O of a group balances the group field against the
social damping vector: ``V(O) + xi(O) = 0``. The equation is implicit (the
damping direction depends on O itself), so it is solved numerically: a coarse
polar residual scan around the group centroid picks starting cells, and a
shrinking-step compass pattern search refines them below tolerance. Because
the damping amplitude shrinks like e^-n/n while the field decays like a power
law, balance points can sit well outside the initial scan ring; a wider
fallback scan covers that case.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .clustering import Group
from .field import R_MIN, FieldMap
from .params import ParamSet
from .scenario import Obstacle, PersonState

TOL_OOP = 1e-3

_SCAN_RADII = np.arange(0.3, 4.0 + 1e-9, 0.1)
_SCAN_ANGLES = np.deg2rad(np.arange(0.0, 360.0, 5.0))
_FAR_RADII = np.arange(4.0, 12.0 + 1e-9, 0.2)
_REFINE_CANDIDATES = 6
_EVAL_BUDGET = 20000


class OopConvergenceError(RuntimeError):
    """Residual stayed above tolerance after the full search budget."""

    def __init__(self, best: tuple[float, float], residual: float):
        super().__init__(f"no balance point below tolerance; best residual {residual:.3g} at {best}")
        self.best = best
        self.residual = residual


@dataclass(frozen=True)
class ObservationPose:
    oop: tuple[float, float]
    damping: tuple[float, float]
    damping_amp: float
    damping_arg: float
    gaze_center: tuple[float, float]
    gaze_radius: float
    residual: float


def damping_amplitude(n: int, params: ParamSet) -> float:
    return params.beta * math.exp(-n) / n


def damping_for(
    group: Group,
    persons: Sequence[PersonState],
    candidate: Sequence[float],
    params: ParamSet,
) -> np.ndarray:
    """Signed damping vector at a candidate observation point."""
    members = _members(group, persons)
    arg = _damping_arg(
        np.array([[p.x, p.y] for p in members]), np.asarray(candidate, dtype=np.float64)
    )
    amp = damping_amplitude(len(members), params)
    return np.array([amp * math.cos(arg), amp * math.sin(arg)])


def _members(group: Group, persons: Sequence[PersonState]) -> list[PersonState]:
    by_id = {p.id: p for p in persons}
    return [by_id[m] for m in group.members]


def _damping_arg(member_xy: np.ndarray, candidate: np.ndarray) -> float:
    # arithmetic mean of the member-to-candidate bearings, plus pi
    angles = np.arctan2(candidate[1] - member_xy[:, 1], candidate[0] - member_xy[:, 0])
    return float(np.mean(angles) + math.pi)


def _residual_fn(
    group: Group, persons: Sequence[PersonState], params: ParamSet
) -> tuple[Callable[[np.ndarray], np.ndarray], FieldMap, np.ndarray, float]:
    members = _members(group, persons)
    fmap = FieldMap.from_persons(members, params)
    member_xy = fmap.positions
    amp = damping_amplitude(len(members), params)

    def residual(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        field = fmap.values(pts)
        bearings = np.arctan2(
            pts[:, None, 1] - member_xy[None, :, 1],
            pts[:, None, 0] - member_xy[None, :, 0],
        )
        arg = bearings.mean(axis=1) + math.pi
        rx = field[:, 0] + amp * np.cos(arg)
        ry = field[:, 1] + amp * np.sin(arg)
        return np.hypot(rx, ry)

    return residual, fmap, member_xy, amp


def oop_residual(
    points: np.ndarray, group: Group, persons: Sequence[PersonState], params: ParamSet
) -> np.ndarray:
    """Balance residual ``|V + xi|`` at each point; shared with the oracle tests."""
    residual, _, _, _ = _residual_fn(group, persons, params)
    return residual(np.asarray(points, dtype=np.float64))


def _obstacle_clearance(points: np.ndarray, obstacles: Sequence[Obstacle]) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if not obstacles:
        return np.full(pts.shape[0], np.inf)
    out = np.empty(pts.shape[0])
    for i, (x, y) in enumerate(pts):
        out[i] = min(o.clearance(float(x), float(y)) for o in obstacles)
    return out


def _excluded(points: np.ndarray, member_xy: np.ndarray, obstacles: Sequence[Obstacle]) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    d = np.hypot(
        pts[:, None, 0] - member_xy[None, :, 0], pts[:, None, 1] - member_xy[None, :, 1]
    ).min(axis=1)
    bad = d < R_MIN
    if obstacles:
        inside = np.array(
            [any(o.contains(float(x), float(y), inflated=True) for o in obstacles) for x, y in pts]
        )
        bad |= inside
    return bad


def _pattern_search(
    f: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    excluded: Callable[[np.ndarray], np.ndarray],
    tol: float,
    budget: int,
    step0: float = 0.05,
    min_step: float = 1e-4,
) -> tuple[np.ndarray, float, int]:
    x = np.array(x0, dtype=np.float64)
    fx = float(f(x[None])[0])
    evals = 1
    step = step0
    while step >= min_step and fx > tol and evals < budget:
        moves = np.array(
            [[step, 0.0], [-step, 0.0], [0.0, step], [0.0, -step]], dtype=np.float64
        )
        cands = x[None, :] + moves
        vals = f(cands)
        vals = np.where(excluded(cands), np.inf, vals)
        evals += 4
        best = int(np.argmin(vals))
        if vals[best] < fx:
            x = cands[best]
            fx = float(vals[best])
        else:
            step *= 0.5
    return x, fx, evals


def solve_oop(
    group: Group,
    persons: Sequence[PersonState],
    params: ParamSet,
    obstacles: Sequence[Obstacle] = (),
    tol: float = TOL_OOP,
) -> ObservationPose:
    """Find the group's observation position with residual below ``tol``.

    Deterministic: coarse scan cells are refined in residual order and ties
    between converged candidates are broken by obstacle clearance, then by
    lowest (x, y).
    """
    if not group.members:
        raise ValueError("group must be non-empty")
    residual, fmap, member_xy, amp = _residual_fn(group, persons, params)
    centroid = member_xy.mean(axis=0)

    def scan(radii: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rr, aa = np.meshgrid(radii, _SCAN_ANGLES, indexing="ij")
        pts = np.stack(
            [centroid[0] + rr.ravel() * np.cos(aa.ravel()),
             centroid[1] + rr.ravel() * np.sin(aa.ravel())],
            axis=1,
        )
        res = residual(pts)
        res = np.where(_excluded(pts, member_xy, obstacles), np.inf, res)
        return pts, res

    def exclusion(pts: np.ndarray) -> np.ndarray:
        return _excluded(pts, member_xy, obstacles)

    budget = _EVAL_BUDGET
    converged: list[tuple[np.ndarray, float]] = []
    best_any: tuple[np.ndarray, float] | None = None
    for radii in (_SCAN_RADII, _FAR_RADII):
        pts, res = scan(radii)
        order = np.argsort(res, kind="stable")[:_REFINE_CANDIDATES]
        for idx in order:
            if not np.isfinite(res[idx]):
                continue
            x, fx, used = _pattern_search(residual, pts[idx], exclusion, tol, budget)
            budget = max(budget - used, 0)
            if best_any is None or fx < best_any[1]:
                best_any = (x, fx)
            if fx <= tol:
                converged.append((x, fx))
        if converged:
            break

    if not converged:
        assert best_any is not None
        raise OopConvergenceError((float(best_any[0][0]), float(best_any[0][1])), best_any[1])

    # deduplicate candidates that refined into the same balance point
    unique: list[tuple[np.ndarray, float]] = []
    for x, fx in converged:
        if all(np.hypot(*(x - u)) > 1e-3 for u, _ in unique):
            unique.append((x, fx))
    clear = _obstacle_clearance(np.array([x for x, _ in unique]), obstacles)
    ranked = sorted(
        range(len(unique)), key=lambda i: (-clear[i], unique[i][0][0], unique[i][0][1])
    )
    oop, res_final = unique[ranked[0]]

    arg = _damping_arg(member_xy, oop)
    damping = (amp * math.cos(arg), amp * math.sin(arg))
    center, radius = gaze_space(group, persons, oop, params)
    return ObservationPose(
        oop=(float(oop[0]), float(oop[1])),
        damping=damping,
        damping_amp=amp,
        damping_arg=arg,
        gaze_center=center,
        gaze_radius=radius,
        residual=res_final,
    )


def gaze_space(
    group: Group,
    persons: Sequence[PersonState],
    oop: Sequence[float],
    params: ParamSet,
) -> tuple[tuple[float, float], float]:
    """Mutual gaze center (mean of per-member gaze points) and disc radius."""
    members = _members(group, persons)
    gx = gy = 0.0
    for p in members:
        gx += p.x + params.r_gaze * math.cos(p.theta)
        gy += p.y + params.r_gaze * math.sin(p.theta)
    n = len(members)
    cx, cy = gx / n, gy / n
    radius = math.hypot(cx - float(oop[0]), cy - float(oop[1]))
    return (cx, cy), radius
