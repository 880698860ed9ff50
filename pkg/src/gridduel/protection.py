"""Protection relays: constraint checks and cascading disconnection.

One simulation step may involve several protection passes: tripping an
overloaded branch can island a feeder, whose elements are then caught by the
next pass, and so on until a fixpoint.  All passes of a step share the same
step index, so a downstream observer sees one batch of events per step.

Rules per pass, evaluated in ascending element-id order (branches first,
then injections):

* unconverged power flow is treated as a voltage collapse: every in-service
  injection disconnects with cause ``nonconvergence``;
* a branch whose loading exceeds the limit disconnects (``overload``);
* an injection whose bus voltage leaves the protection band disconnects
  (``overvoltage`` / ``undervoltage``);
* an injection on a de-energized bus disconnects (``islanded``).

Disconnection is permanent for the rest of the episode; there is no
reclosing.  An element can therefore emit at most one event per episode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import GridModelError
from .grid.model import GridModel, Line
from .grid.powerflow import PowerFlowSolution, solve

CAUSES = ("overvoltage", "undervoltage", "overload", "islanded", "nonconvergence")


@dataclass(frozen=True)
class ConstraintConfig:
    v_min: float = 0.85  # pu
    v_max: float = 1.15  # pu
    v_cut: float = 0.8  # pu; severity marker for reporting, not a second trip level
    loading_limit: float = 1.0
    cascade_cap: int = 50
    solver_tol: float = 1e-8
    solver_max_iter: int = 20

    def __post_init__(self) -> None:
        if not 0.0 < self.v_min < self.v_max:
            raise GridModelError("protection band must satisfy 0 < v_min < v_max")
        if not self.v_cut <= self.v_min:
            raise GridModelError("undervoltage cutoff must not exceed the band floor")
        if self.loading_limit <= 0 or self.cascade_cap < 1:
            raise GridModelError("loading limit and cascade cap must be positive")


@dataclass(frozen=True)
class DisconnectionEvent:
    element_id: str
    element_kind: str  # "line" | "transformer" | "load" | "sgen"
    cause: str  # one of CAUSES
    step: int

    def to_dict(self) -> dict:
        return {
            "element_id": self.element_id,
            "element_kind": self.element_kind,
            "cause": self.cause,
            "step": self.step,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DisconnectionEvent":
        return cls(doc["element_id"], doc["element_kind"], doc["cause"], doc["step"])


@dataclass
class CascadeOutcome:
    model: GridModel
    events: tuple[DisconnectionEvent, ...]
    solution: PowerFlowSolution
    truncated: bool = False
    passes: int = 0
    new_offline_injections: tuple[str, ...] = field(default=())


def check_and_cascade(
    model: GridModel, config: ConstraintConfig, step: int
) -> CascadeOutcome:
    """Run protection to a fixpoint, mutating ``model`` in place.

    The caller owns the model instance exclusively (the environment passes
    its private copy).  Returns the final converged solution, the events of
    this step in emission order, and whether the pass cap cut the cascade
    short.
    """
    events: list[DisconnectionEvent] = []
    truncated = False
    passes = 0
    solution = solve(model, tol=config.solver_tol, max_iter=config.solver_max_iter)
    while True:
        passes += 1
        fresh = _violations(model, solution, config, step)
        if not fresh:
            break
        events.extend(fresh)
        for event in fresh:
            _disconnect(model, event)
        if passes >= config.cascade_cap:
            truncated = True
            break
        solution = solve(model, tol=config.solver_tol, max_iter=config.solver_max_iter)
    if truncated:
        solution = solve(model, tol=config.solver_tol, max_iter=config.solver_max_iter)
    return CascadeOutcome(
        model=model,
        events=tuple(events),
        solution=solution,
        truncated=truncated,
        passes=passes,
        new_offline_injections=tuple(
            sorted(e.element_id for e in events if e.element_kind in ("load", "sgen"))
        ),
    )


def scan_violations(
    model: GridModel,
    solution: PowerFlowSolution,
    config: ConstraintConfig,
    step: int,
) -> list[DisconnectionEvent]:
    """One protection pass without disconnecting anything.

    Useful for health checks: an empty result on a fresh solution means the
    grid satisfies every constraint as it stands.
    """
    return _violations(model, solution, config, step)


def _violations(
    model: GridModel,
    solution: PowerFlowSolution,
    config: ConstraintConfig,
    step: int,
) -> list[DisconnectionEvent]:
    found: list[DisconnectionEvent] = []
    if not solution.converged:
        for inj_id in sorted(model.injections):
            inj = model.injections[inj_id]
            if inj.in_service:
                found.append(
                    DisconnectionEvent(inj_id, inj.kind, "nonconvergence", step)
                )
        return found

    dead = set(solution.dead_buses)
    for branch in sorted(model.branches(), key=model.branch_id):
        if not branch.in_service:
            continue
        branch_id = model.branch_id(branch)
        flow = solution.branch_flows.get(branch_id)
        if flow is not None and flow.loading > config.loading_limit:
            kind = "line" if isinstance(branch, Line) else "transformer"
            found.append(DisconnectionEvent(branch_id, kind, "overload", step))
    for inj_id in sorted(model.injections):
        inj = model.injections[inj_id]
        if not inj.in_service:
            continue
        if inj.bus in dead:
            found.append(DisconnectionEvent(inj_id, inj.kind, "islanded", step))
            continue
        vm = solution.v_mag[inj.bus]
        if vm > config.v_max:
            found.append(DisconnectionEvent(inj_id, inj.kind, "overvoltage", step))
        elif vm < config.v_min:
            found.append(DisconnectionEvent(inj_id, inj.kind, "undervoltage", step))
    return found


def _disconnect(model: GridModel, event: DisconnectionEvent) -> None:
    if event.element_kind == "line":
        model.lines[event.element_id].in_service = False
    elif event.element_kind == "transformer":
        model.transformers[event.element_id].in_service = False
    else:
        model.injections[event.element_id].in_service = False
