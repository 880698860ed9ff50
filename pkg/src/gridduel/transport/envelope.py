"""Wire format: versioned envelopes with canonical JSON bodies.

Every message is one envelope.  On the wire an envelope is the canonical
JSON encoding of its dict form (sorted keys, no whitespace, no NaN)
prefixed with a 4-byte big-endian length, so identical envelopes are
identical byte strings on every platform - buses, logs and tests can
compare frames bit for bit.

``REQUEST_REPLY`` is the conversation table: sending one of its keys means
the peer owes exactly one reply of the mapped kind (or an ``Error``).  Kinds
in ``ONE_WAY_KINDS`` never get replies.  ``ParameterUpdate`` appears twice
on purpose: it is both the reply to an ``ExperienceBatch`` and the broadcast
that fans the same blob out to every worker.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

from ..errors import TransportError

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 1 << 26  # 64 MiB; a tournament step is far below this

REQUEST_REPLY = {
    "RunAssign": "RunComplete",
    "EnvReset": "EnvResetResult",
    "ActRequest": "ActResponse",
    "ExperienceBatch": "ParameterUpdate",
    "SpawnWorkers": "Heartbeat",
    "Heartbeat": "Heartbeat",
}
ONE_WAY_KINDS = ("EnvStepResult", "ParameterUpdate", "Error")
KINDS = tuple(
    sorted(set(REQUEST_REPLY) | set(REQUEST_REPLY.values()) | set(ONE_WAY_KINDS))
)

ROLES = ("executor", "governor", "worker", "conductor", "router")


@dataclass(frozen=True)
class Envelope:
    kind: str
    correlation_id: str
    sender_role: str
    sender_id: str
    payload: dict = field(default_factory=dict)
    version: int = PROTOCOL_VERSION

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "kind": self.kind,
            "correlation_id": self.correlation_id,
            "sender": {"role": self.sender_role, "id": self.sender_id},
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Envelope":
        try:
            envelope = cls(
                kind=doc["kind"],
                correlation_id=doc["correlation_id"],
                sender_role=doc["sender"]["role"],
                sender_id=doc["sender"]["id"],
                payload=doc["payload"],
                version=doc["version"],
            )
        except (KeyError, TypeError) as exc:
            raise TransportError(f"malformed envelope document: {exc}") from exc
        validate_envelope(envelope)
        return envelope


def canonical_json(doc) -> str:
    """Deterministic JSON: sorted keys, minimal separators, finite numbers."""
    try:
        return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    except (TypeError, ValueError) as exc:
        raise TransportError(f"payload is not canonical-JSON encodable: {exc}") from exc


def encode_envelope(envelope: Envelope) -> bytes:
    validate_envelope(envelope)
    body = canonical_json(envelope.to_dict()).encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise TransportError(f"envelope of {len(body)} bytes exceeds the frame cap")
    return struct.pack(">I", len(body)) + body


def decode_envelope(frame: bytes) -> Envelope:
    """Inverse of :func:`encode_envelope` for one complete frame."""
    if len(frame) < 4:
        raise TransportError("truncated frame: missing length prefix")
    (length,) = struct.unpack(">I", frame[:4])
    if length > MAX_FRAME_BYTES:
        raise TransportError(f"declared frame length {length} exceeds the cap")
    body = frame[4:]
    if len(body) != length:
        raise TransportError(
            f"truncated frame: declared {length} bytes, got {len(body)}"
        )
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TransportError(f"frame body is not valid JSON: {exc}") from exc
    return Envelope.from_dict(doc)


# -- payload schemas ----------------------------------------------------------


def _need(payload: dict, kind: str, name: str, *types) -> None:
    if name not in payload:
        raise TransportError(f"{kind} payload lacks {name!r}")
    value = payload[name]
    if bool in types:
        if type(value) is bool:
            return
        raise TransportError(f"{kind} payload field {name!r} must be a bool")
    if type(value) is bool or not isinstance(value, tuple(types)):
        wanted = "/".join(t.__name__ for t in types)
        raise TransportError(f"{kind} payload field {name!r} must be {wanted}")


def _validate_payload(kind: str, p: dict) -> None:
    if kind == "RunAssign":
        _need(p, kind, "run", dict)
    elif kind == "RunComplete":
        _need(p, kind, "run_id", str)
        _need(p, kind, "status", str)
        if p["status"] not in ("ok", "failed"):
            raise TransportError("RunComplete status must be 'ok' or 'failed'")
    elif kind == "EnvReset":
        for name, types in (
            ("run_id", (str,)),
            ("agent", (str,)),
            ("round_index", (int,)),
            ("total_rounds", (int,)),
            ("instance", (int,)),
            ("sensors", (list,)),
            ("actuators", (list,)),
            ("sensor_kinds", (dict,)),
            ("param_version", (int,)),
        ):
            _need(p, kind, name, *types)
    elif kind == "EnvResetResult":
        for name in ("run_id", "agent"):
            _need(p, kind, name, str)
        for name in ("instance", "param_version"):
            _need(p, kind, name, int)
    elif kind == "ActRequest":
        for name in ("run_id", "agent"):
            _need(p, kind, name, str)
        for name in ("instance", "step"):
            _need(p, kind, name, int)
        _need(p, kind, "readings", dict)
    elif kind == "ActResponse":
        for name in ("run_id", "agent"):
            _need(p, kind, name, str)
        for name in ("instance", "step"):
            _need(p, kind, name, int)
        _need(p, kind, "setpoints", dict)
    elif kind == "EnvStepResult":
        for name in ("run_id", "agent"):
            _need(p, kind, name, str)
        for name in ("instance", "step"):
            _need(p, kind, name, int)
        _need(p, kind, "reward", int, float)
        _need(p, kind, "terminated", bool)
    elif kind == "ExperienceBatch":
        _need(p, kind, "run_id", str)
        _need(p, kind, "batch", dict)
    elif kind == "ParameterUpdate":
        _need(p, kind, "run_id", str)
        _need(p, kind, "agent", str)
        _need(p, kind, "params", dict)
        if type(p["params"].get("version")) is not int:
            raise TransportError("ParameterUpdate params must carry an int version")
    elif kind == "SpawnWorkers":
        _need(p, kind, "agents", list)
        _need(p, kind, "count", int)
    elif kind == "Heartbeat":
        _need(p, kind, "nonce", int)
    elif kind == "Error":
        _need(p, kind, "message", str)


def validate_envelope(envelope: Envelope) -> None:
    if envelope.version != PROTOCOL_VERSION:
        raise TransportError(
            f"protocol version {envelope.version} unsupported (speak {PROTOCOL_VERSION})"
        )
    if envelope.kind not in KINDS:
        raise TransportError(f"unknown message kind {envelope.kind!r}")
    if not envelope.correlation_id or not isinstance(envelope.correlation_id, str):
        raise TransportError("correlation_id must be a non-empty string")
    if envelope.sender_role not in ROLES:
        raise TransportError(f"unknown sender role {envelope.sender_role!r}")
    if not envelope.sender_id or not isinstance(envelope.sender_id, str):
        raise TransportError("sender id must be a non-empty string")
    if not isinstance(envelope.payload, dict):
        raise TransportError("payload must be a dict")
    _validate_payload(envelope.kind, envelope.payload)
