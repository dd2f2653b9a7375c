"""Model, planner and cruise parameters with their simulation defaults."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Any, Mapping


@dataclass(frozen=True)
class ParamSet:
    """All tunable constants of the engine.

    Defaults are the published simulation values; knobs the source material
    leaves open (a_thres, steer step, rewire radius, iteration cap) carry
    engineering defaults and are exposed so experiments can sweep them.
    """

    # spatial-confidence constants
    a: float = 5.102
    b: float = 0.748
    c: float = 0.087
    # dipole field coefficient and social damping coefficient
    alpha: float = -615.0
    beta: float = -32.0
    # gaze point offset ahead of a person, meters
    r_gaze: float = 0.05
    # planner cost weights and direction-cost constants
    delta_dis: float = 1.0
    delta_dir: float = 5.0
    delta_mag: float = 7.0
    w: float = 5.0
    l: float = 4.0
    # robot motion-space radius and person disturbance threshold, meters
    r_rob: float = 1.9
    d_thres: float = 0.4
    # clustering edge-cut threshold on spatial confidence
    a_thres: float = 0.5
    # sampling planner knobs
    epsilon_steer: float = 0.35
    rewire_radius: float = 1.0
    max_iter: int = 20000
    # default RNG seed for runs that do not pass one explicitly
    seed: int = 0


_FIELD_TYPES = {f.name: f.type for f in fields(ParamSet)}
_INT_FIELDS = {"max_iter", "seed"}


class ParamError(ValueError):
    """Raised for unknown parameter names or unparseable values."""


def _coerce(name: str, value: Any) -> Any:
    if name in _INT_FIELDS:
        if isinstance(value, bool):
            raise ParamError(f"param {name!r}: expected integer, got {value!r}")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError as exc:
                raise ParamError(f"param {name!r}: expected integer, got {value!r}") from exc
        raise ParamError(f"param {name!r}: expected integer, got {value!r}")
    if isinstance(value, bool):
        raise ParamError(f"param {name!r}: expected number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError as exc:
            raise ParamError(f"param {name!r}: expected number, got {value!r}") from exc
    raise ParamError(f"param {name!r}: expected number, got {value!r}")


def params_from_mapping(data: Mapping[str, Any] | None, base: ParamSet | None = None) -> ParamSet:
    """Build a ParamSet from a mapping, rejecting unknown keys."""
    base = base if base is not None else ParamSet()
    if not data:
        return base
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise ParamError(f"unknown params: {', '.join(unknown)}")
    coerced = {name: _coerce(name, value) for name, value in data.items()}
    return replace(base, **coerced)


def parse_param_overrides(pairs: list[str], base: ParamSet | None = None) -> ParamSet:
    """Apply CLI-style ``key=value`` overrides on top of ``base``."""
    data: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ParamError(f"bad override {pair!r}: expected key=value")
        key, value = pair.split("=", 1)
        data[key.strip()] = value.strip()
    return params_from_mapping(data, base)
