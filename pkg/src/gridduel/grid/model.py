"""Static grid model: buses, branches and injection elements.

All electrical quantities are per-unit on a 1 MVA system base, so a nominal
power of 1000 kW equals 1.0 pu.  Element ids are stable strings; every
deterministic iteration in the package walks them in ascending id order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

from ..errors import GridModelError

S_BASE_MVA = 1.0  # system base; kW / 1000 == pu

SCHEMA = "gridduel-grid/1"


@dataclass
class Bus:
    bus_id: str
    level: str  # "hv" | "mv" | "lv"
    vn_kv: float  # nominal voltage, kV (informational only)
    in_service: bool = True


@dataclass
class Line:
    line_id: str
    from_bus: str
    to_bus: str
    r_pu: float  # series resistance, pu
    x_pu: float  # series reactance, pu
    b_pu: float  # total shunt susceptance, pu (Pi model, split half/half)
    s_max_pu: float  # apparent-power rating, pu (MVA)
    length_km: float = 0.0
    in_service: bool = True

    @property
    def kind_path(self) -> str:
        return "line/mv"


@dataclass
class Transformer:
    """Two-winding transformer with a discrete tap changer.

    The tap changer scales the low-voltage side: with ratio
    ``1 + (tap - tap_neutral) * tap_step`` the no-load LV voltage equals
    ``ratio * V_hv``, so raising the tap raises the LV-side voltage.
    """

    transformer_id: str
    hv_bus: str
    lv_bus: str
    r_pu: float
    x_pu: float
    s_max_pu: float
    category: str  # "hvmv" | "mvlv"
    tap_min: int = -2
    tap_max: int = 2
    tap_neutral: int = 0
    tap_step: float = 0.025  # voltage-ratio increment per tap position
    tap: int = 0
    in_service: bool = True

    @property
    def ratio(self) -> float:
        return 1.0 + (self.tap - self.tap_neutral) * self.tap_step

    @property
    def kind_path(self) -> str:
        return f"transformer/{self.category}"


@dataclass
class Injection:
    """A load or static generator attached to a bus.

    ``p_nominal_kw`` is the nameplate active power P_N.  The live active
    power is ``scaling * p_nominal_kw``; reactive power follows from the
    fixed power factor (loads consume Q, generators inject Q).
    """

    injection_id: str
    bus: str
    kind: str  # "load" | "sgen"
    category: str  # subgrid | industry | plant | wind | pv
    p_nominal_kw: float
    cos_phi: float
    scaling: float = 1.0
    in_service: bool = True

    @property
    def kind_path(self) -> str:
        return f"{self.kind}/{self.category}"

    @property
    def tan_phi(self) -> float:
        return math.sqrt(1.0 - self.cos_phi**2) / self.cos_phi

    def s_pu(self) -> complex:
        """Signed complex injection in pu (generation positive)."""
        p = self.scaling * self.p_nominal_kw / 1000.0
        s = complex(p, p * self.tan_phi)
        return s if self.kind == "sgen" else -s


@dataclass
class GridModel:
    """A whole network plus the single slack bus (the external grid)."""

    buses: dict[str, Bus] = field(default_factory=dict)
    lines: dict[str, Line] = field(default_factory=dict)
    transformers: dict[str, Transformer] = field(default_factory=dict)
    injections: dict[str, Injection] = field(default_factory=dict)
    slack_bus: str = ""

    # -- structure ----------------------------------------------------------

    def branches(self) -> Iterator[Line | Transformer]:
        yield from self.lines.values()
        yield from self.transformers.values()

    def branch_buses(self, branch: Line | Transformer) -> tuple[str, str]:
        if isinstance(branch, Line):
            return branch.from_bus, branch.to_bus
        return branch.hv_bus, branch.lv_bus

    def branch_id(self, branch: Line | Transformer) -> str:
        if isinstance(branch, Line):
            return branch.line_id
        return branch.transformer_id

    def validate(self) -> None:
        """Raise :class:`GridModelError` on any structural violation."""
        ids: set[str] = set()
        for group in (self.buses, self.lines, self.transformers, self.injections):
            for key in group:
                if key in ids:
                    raise GridModelError(f"duplicate element id {key!r}")
                ids.add(key)
        if self.slack_bus not in self.buses:
            raise GridModelError(f"slack bus {self.slack_bus!r} is not a bus")
        if not self.buses[self.slack_bus].in_service:
            raise GridModelError("slack bus is out of service")
        for key, bus in self.buses.items():
            if key != bus.bus_id:
                raise GridModelError(f"bus key {key!r} != id {bus.bus_id!r}")
        for branch in self.branches():
            f, t = self.branch_buses(branch)
            bid = self.branch_id(branch)
            for end in (f, t):
                if end not in self.buses:
                    raise GridModelError(f"branch {bid!r} references unknown bus {end!r}")
            if f == t:
                raise GridModelError(f"branch {bid!r} connects a bus to itself")
            if branch.r_pu < 0 or (branch.r_pu == 0 and branch.x_pu == 0):
                raise GridModelError(f"branch {bid!r} has no usable impedance")
            if branch.s_max_pu <= 0:
                raise GridModelError(f"branch {bid!r} rating must be positive")
        for trafo in self.transformers.values():
            if not trafo.tap_min <= trafo.tap <= trafo.tap_max:
                raise GridModelError(
                    f"transformer {trafo.transformer_id!r} tap {trafo.tap} outside "
                    f"[{trafo.tap_min}, {trafo.tap_max}]"
                )
            if trafo.ratio <= 0:
                raise GridModelError(
                    f"transformer {trafo.transformer_id!r} ratio must stay positive"
                )
        for inj in self.injections.values():
            if inj.bus not in self.buses:
                raise GridModelError(
                    f"injection {inj.injection_id!r} references unknown bus {inj.bus!r}"
                )
            if inj.kind not in ("load", "sgen"):
                raise GridModelError(f"injection kind {inj.kind!r} unknown")
            if inj.p_nominal_kw <= 0:
                raise GridModelError(
                    f"injection {inj.injection_id!r} nominal power must be positive"
                )
            if not 0.0 < inj.cos_phi <= 1.0:
                raise GridModelError(
                    f"injection {inj.injection_id!r} cos phi must be in (0, 1]"
                )
            if not 0.0 <= inj.scaling <= 1.0:
                raise GridModelError(
                    f"injection {inj.injection_id!r} scaling must be in [0, 1]"
                )

    def copy(self) -> "GridModel":
        return GridModel(
            buses={k: replace(v) for k, v in self.buses.items()},
            lines={k: replace(v) for k, v in self.lines.items()},
            transformers={k: replace(v) for k, v in self.transformers.items()},
            injections={k: replace(v) for k, v in self.injections.items()},
            slack_bus=self.slack_bus,
        )

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "slack_bus": self.slack_bus,
            "buses": [vars(b).copy() for b in self.buses.values()],
            "lines": [vars(l).copy() for l in self.lines.values()],
            "transformers": [vars(t).copy() for t in self.transformers.values()],
            "injections": [vars(i).copy() for i in self.injections.values()],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GridModel":
        if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
            raise GridModelError(
                f"unsupported grid document schema {doc.get('schema') if isinstance(doc, dict) else doc!r}"
            )
        try:
            model = cls(
                buses={b["bus_id"]: Bus(**b) for b in doc["buses"]},
                lines={l["line_id"]: Line(**l) for l in doc["lines"]},
                transformers={
                    t["transformer_id"]: Transformer(**t) for t in doc["transformers"]
                },
                injections={
                    i["injection_id"]: Injection(**i) for i in doc["injections"]
                },
                slack_bus=doc["slack_bus"],
            )
        except (KeyError, TypeError) as exc:
            raise GridModelError(f"malformed grid document: {exc}") from exc
        model.validate()
        return model
