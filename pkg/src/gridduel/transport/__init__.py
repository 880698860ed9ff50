"""Messaging between experiment roles: envelopes and interchangeable buses."""

from .envelope import (
    KINDS,
    ONE_WAY_KINDS,
    PROTOCOL_VERSION,
    REQUEST_REPLY,
    Envelope,
    canonical_json,
    decode_envelope,
    encode_envelope,
    validate_envelope,
)
from .bus import LoopbackBus, MessageBus, Peer, SocketBus, make_bus

__all__ = [
    "KINDS",
    "ONE_WAY_KINDS",
    "PROTOCOL_VERSION",
    "REQUEST_REPLY",
    "Envelope",
    "canonical_json",
    "decode_envelope",
    "encode_envelope",
    "validate_envelope",
    "LoopbackBus",
    "MessageBus",
    "Peer",
    "SocketBus",
    "make_bus",
]
