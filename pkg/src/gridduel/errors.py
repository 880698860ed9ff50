"""Shared exception types.

Every layer raises subclasses of :class:`GridDuelError` so callers (and the
CLI) can map failures onto exit codes without string matching.
"""

from __future__ import annotations


class GridDuelError(Exception):
    """Base class for all errors raised by this package."""


class SpaceError(GridDuelError):
    """A value or definition is inconsistent with a sensor/actuator space."""


class GridModelError(GridDuelError):
    """A grid model violates a structural invariant (ids, slack, wiring)."""


class PlanError(GridDuelError):
    """An experiment plan failed validation."""


class DescriptorError(GridDuelError):
    """A run descriptor cannot be realised (e.g. unhealthy base case)."""


class EnvironmentError_(GridDuelError):
    """Illegal interaction with an environment (bad setpoint, stepping a
    terminated episode, unknown actuator)."""


class TransportError(GridDuelError):
    """Wire-level failure: malformed frame, schema violation, timeout."""


class StoreError(GridDuelError):
    """Run store integrity violation or IO failure."""
