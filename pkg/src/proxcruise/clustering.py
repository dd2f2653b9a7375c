"""Social-group clustering from pairwise relevance and spatial confidence.

Pairwise social relevance combines mutual heading alignment with inverse
squared distance; a Weibull map turns it into a confidence in [0, 1), and
groups are the connected components of the graph that keeps edges at or
above the confidence threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ParamSet
from .scenario import PersonState


class CoincidentPositionsError(ValueError):
    """Two persons share a position, so relevance is undefined."""


@dataclass(frozen=True)
class ConfidenceMatrix:
    """Symmetric pairwise spatial-confidence matrix with a zero diagonal."""

    ids: tuple[int, ...]
    eta: np.ndarray  # (n, n), float64

    @property
    def n(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class Group:
    members: tuple[int, ...]  # sorted person ids
    kind: str  # "static" | "dynamic"

    @property
    def member_set(self) -> frozenset[int]:
        return frozenset(self.members)


@dataclass(frozen=True)
class GroupSet:
    groups: tuple[Group, ...]

    def __iter__(self):
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    def partition(self) -> list[tuple[int, ...]]:
        return [g.members for g in self.groups]


def _clamped_cos(hx: float, hy: float, dx: float, dy: float, dist: float) -> float:
    # psi(cos theta): cosine of heading vs. separation, clamped at zero
    return max((hx * dx + hy * dy) / dist, 0.0)


def social_relevance(pa: PersonState, pb: PersonState, params: ParamSet) -> float:
    """Pairwise relevance (psi_A + c)(psi_B + c) / d^2 with unit impact factor."""
    dx = pb.x - pa.x
    dy = pb.y - pa.y
    dist = math.hypot(dx, dy)
    if dist < 1e-9:
        raise CoincidentPositionsError(f"persons {pa.id} and {pb.id} are coincident")
    ca = _clamped_cos(math.cos(pa.theta), math.sin(pa.theta), dx, dy, dist)
    cb = _clamped_cos(math.cos(pb.theta), math.sin(pb.theta), -dx, -dy, dist)
    return (ca + params.c) * (cb + params.c) / (dist * dist)


def spatial_confidence(sr: float, params: ParamSet) -> float:
    """Weibull map of relevance into [0, 1)."""
    if sr < 0.0:
        raise ValueError(f"relevance must be non-negative, got {sr}")
    return 1.0 - math.exp(-params.a * sr**params.b)


def confidence_matrix(persons: list[PersonState], params: ParamSet) -> ConfidenceMatrix:
    n = len(persons)
    if n < 1:
        raise ValueError("need at least one person")
    eta = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            val = spatial_confidence(social_relevance(persons[i], persons[j], params), params)
            eta[i, j] = val
            eta[j, i] = val
    return ConfidenceMatrix(ids=tuple(p.id for p in persons), eta=eta)


def _components(adj: np.ndarray) -> list[list[int]]:
    n = adj.shape[0]
    seen = [False] * n
    comps: list[list[int]] = []
    for root in range(n):
        if seen[root]:
            continue
        stack = [root]
        seen[root] = True
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in np.flatnonzero(adj[v])[::-1]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        comps.append(sorted(comp))
    return comps


def cluster_groups(
    H: ConfidenceMatrix, persons: list[PersonState], params: ParamSet
) -> GroupSet:
    """Connected components of the graph with edges eta >= a_thres; singleton
    components become individual groups."""
    adj = H.eta >= params.a_thres
    np.fill_diagonal(adj, False)
    by_index = {i: p for i, p in enumerate(persons)}
    groups = []
    for comp in _components(adj):
        members = tuple(sorted(H.ids[i] for i in comp))
        dynamic = any(by_index[i].script is not None for i in comp)
        groups.append(Group(members=members, kind="dynamic" if dynamic else "static"))
    groups.sort(key=lambda g: g.members[0])
    return GroupSet(groups=tuple(groups))
