"""Value spaces shared by sensors and actuators.

Two space shapes exist:

* :class:`Discrete` - the integers ``0 .. n-1``.
* :class:`Box` - an axis-aligned box with finite bounds and closed-interval
  membership per dimension.

Agents only ever see spaces plus opaque ids, never what is attached behind
them, so this module is deliberately free of any grid vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .errors import SpaceError

# A Discrete value is an int, a Box value is one float per dimension.
SpaceValue = Union[int, tuple[float, ...]]


@dataclass(frozen=True)
class Discrete:
    """The integer set ``{0, 1, ..., n - 1}``."""

    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise SpaceError(f"Discrete size must be a positive int, got {self.n!r}")


@dataclass(frozen=True)
class Box:
    """A box with one closed interval ``[low_i, high_i]`` per dimension."""

    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self) -> None:
        low = tuple(float(v) for v in self.low)
        high = tuple(float(v) for v in self.high)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        if len(low) != len(high) or not low:
            raise SpaceError("Box bounds must be equal-length, non-empty vectors")
        for lo, hi in zip(low, high):
            if not (_finite(lo) and _finite(hi)):
                raise SpaceError("Box bounds must be finite")
            if lo > hi:
                raise SpaceError(f"Box lower bound {lo} exceeds upper bound {hi}")

    @property
    def ndim(self) -> int:
        return len(self.low)


Space = Union[Discrete, Box]


def _finite(x: float) -> bool:
    return x == x and x not in (float("inf"), float("-inf"))


def contains(space: Space, value: object) -> bool:
    """True iff ``value`` is a member of ``space``.

    Discrete members are plain ints (bools are rejected); Box members are
    sequences of floats checked against the closed per-dimension intervals.
    """
    if isinstance(space, Discrete):
        if isinstance(value, bool) or not isinstance(value, int):
            return False
        return 0 <= value < space.n
    if isinstance(space, Box):
        if isinstance(value, (str, bytes)) or not isinstance(value, Sequence):
            return False
        if len(value) != space.ndim:
            return False
        try:
            vals = [float(v) for v in value]
        except (TypeError, ValueError):
            return False
        return all(
            _finite(v) and lo <= v <= hi
            for v, lo, hi in zip(vals, space.low, space.high)
        )
    raise SpaceError(f"not a space: {space!r}")


def discretize_setpoint(box: Box, index: int, steps: int) -> tuple[float, ...]:
    """Map step ``index`` of an evenly spaced ``steps``-point ladder into ``box``.

    Dimension ``i`` receives ``low_i + index * (high_i - low_i) / (steps - 1)``,
    clamped into the box so accumulated rounding can never escape it.  Index 0
    is the lower bound and index ``steps - 1`` the upper bound.
    """
    if steps < 2:
        raise SpaceError(f"discretization needs at least 2 steps, got {steps}")
    if not isinstance(index, int) or isinstance(index, bool) or not 0 <= index < steps:
        raise SpaceError(f"index {index!r} outside 0..{steps - 1}")
    out = []
    for lo, hi in zip(box.low, box.high):
        v = lo + index * (hi - lo) / (steps - 1)
        out.append(min(max(v, lo), hi))
    return tuple(out)


# --- wire format -----------------------------------------------------------

def space_to_wire(space: Space) -> dict:
    """Serialize to the wire shape ``{"discrete": n}`` / ``{"box": {...}}``."""
    if isinstance(space, Discrete):
        return {"discrete": space.n}
    if isinstance(space, Box):
        return {"box": {"low": list(space.low), "high": list(space.high)}}
    raise SpaceError(f"not a space: {space!r}")


def space_from_wire(doc: object) -> Space:
    """Inverse of :func:`space_to_wire`; raises :class:`SpaceError` on junk."""
    if not isinstance(doc, dict) or len(doc) != 1:
        raise SpaceError(f"malformed space document: {doc!r}")
    if "discrete" in doc:
        n = doc["discrete"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise SpaceError(f"discrete size must be an int, got {n!r}")
        return Discrete(n)
    if "box" in doc:
        body = doc["box"]
        if (
            not isinstance(body, dict)
            or set(body) != {"low", "high"}
            or not isinstance(body["low"], list)
            or not isinstance(body["high"], list)
        ):
            raise SpaceError(f"malformed box document: {doc!r}")
        return Box(tuple(body["low"]), tuple(body["high"]))
    raise SpaceError(f"unknown space kind in {doc!r}")


def value_to_wire(value: SpaceValue) -> object:
    """Discrete values travel as ints, Box values as lists of floats."""
    if isinstance(value, bool):
        raise SpaceError("bool is not a space value")
    if isinstance(value, int):
        return value
    return [float(v) for v in value]


def value_from_wire(space: Space, doc: object) -> SpaceValue:
    """Decode a wire value and verify membership in ``space``."""
    value: SpaceValue
    if isinstance(space, Discrete):
        if isinstance(doc, bool) or not isinstance(doc, int):
            raise SpaceError(f"expected int for Discrete value, got {doc!r}")
        value = doc
    else:
        if not isinstance(doc, list):
            raise SpaceError(f"expected list for Box value, got {doc!r}")
        value = tuple(float(v) for v in doc)
    if not contains(space, value):
        raise SpaceError(f"value {doc!r} outside space {space!r}")
    return value


@dataclass(frozen=True)
class SensorReading:
    """One observation: the sensor's opaque id plus a value in its space."""

    sensor_id: str
    value: SpaceValue


@dataclass(frozen=True)
class ActuatorSetpoint:
    """One command: the actuator's opaque id plus a value in its space."""

    actuator_id: str
    value: SpaceValue
