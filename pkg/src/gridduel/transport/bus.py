"""Two interchangeable message buses: in-process loopback and TCP sockets.

Both expose the same star topology through the :class:`Peer` API - named
peers exchanging envelopes by request/reply, one-way notify, and
topic-based publish/subscribe.  The loopback bus delivers synchronously in
the caller's thread but still pushes every envelope through the byte codec,
so anything that survives loopback testing speaks the real wire format.

The socket bus runs a tiny router: every peer holds one TCP connection to
it, outer frames name their destination, and the router forwards them.
Forwarding a frame completes before the router reads the next frame from
that connection, which gives the one ordering guarantee the orchestration
layer leans on: messages you send before replying to a request are
delivered before anything the requester sends afterwards.

Handlers may return ``None`` to defer; the eventual answer then goes out
through :meth:`Peer.reply` with the request's correlation id.  A handler
that raises turns into an ``Error`` reply automatically, so a crashing
worker fails the run instead of hanging it.
"""

from __future__ import annotations

import itertools
import json
import socket
import struct
import threading
from abc import ABC, abstractmethod
from collections import defaultdict
from queue import Empty, SimpleQueue
from typing import Callable

from ..errors import TransportError
from .envelope import (
    MAX_FRAME_BYTES,
    Envelope,
    canonical_json,
    decode_envelope,
    encode_envelope,
)

Handler = Callable[[Envelope], "tuple[str, dict] | None"]

DEFAULT_TIMEOUT = 30.0


class Peer(ABC):
    """One named participant on a bus."""

    def __init__(self, name: str, role: str) -> None:
        self.name = name
        self.role = role
        self._counter = itertools.count()
        self._pending: dict[str, SimpleQueue] = {}
        self._pending_lock = threading.Lock()
        self._handler: Handler | None = None
        self._subscriptions: dict[str, list[Callable[[Envelope], None]]] = defaultdict(list)

    # -- building blocks -------------------------------------------------

    def _next_cid(self) -> str:
        return f"{self.name}:{next(self._counter):06d}"

    def _make(self, kind: str, correlation_id: str, payload: dict) -> Envelope:
        return Envelope(
            kind=kind,
            correlation_id=correlation_id,
            sender_role=self.role,
            sender_id=self.name,
            payload=payload,
        )

    def serve(self, handler: Handler) -> None:
        """Install the request handler.

        The handler returns ``(kind, payload)`` for an immediate reply or
        ``None`` to answer later via :meth:`reply` (or not at all, for
        one-way kinds).
        """
        self._handler = handler

    def subscribe(self, topic: str, callback: Callable[[Envelope], None]) -> None:
        self._subscriptions[topic].append(callback)
        self._register_subscription(topic)

    def ping(self, to: str, timeout: float = 5.0) -> bool:
        nonce = next(self._counter)
        try:
            answer = self.request(to, "Heartbeat", {"nonce": nonce}, timeout=timeout)
        except TransportError:
            return False
        return answer.kind == "Heartbeat" and answer.payload.get("nonce") == nonce

    # -- shared dispatch --------------------------------------------------

    def _resolve(self, envelope: Envelope) -> bool:
        with self._pending_lock:
            queue = self._pending.get(envelope.correlation_id)
        if queue is None:
            return False
        queue.put(envelope)
        return True

    def _dispatch(self, envelope: Envelope) -> Envelope | None:
        """Run the handler; shape its outcome into a reply envelope."""
        if self._handler is None:
            return self._make(
                "Error",
                envelope.correlation_id,
                {"message": f"peer {self.name!r} serves no handler"},
            )
        try:
            outcome = self._handler(envelope)
        except Exception as exc:  # noqa: BLE001 - crash becomes an Error reply
            return self._make(
                "Error",
                envelope.correlation_id,
                {"message": f"{type(exc).__name__}: {exc}", "failed_kind": envelope.kind},
            )
        if outcome is None:
            return None
        kind, payload = outcome
        return self._make(kind, envelope.correlation_id, payload)

    def _deliver_publication(self, topic: str, envelope: Envelope) -> None:
        for callback in self._subscriptions.get(topic, []):
            callback(envelope)

    def _await(self, cid: str, timeout: float) -> Envelope:
        with self._pending_lock:
            queue = self._pending[cid]
        try:
            return queue.get(timeout=timeout)
        except Empty:
            raise TransportError(
                f"request {cid} timed out after {timeout:.0f}s"
            ) from None
        finally:
            with self._pending_lock:
                self._pending.pop(cid, None)

    def _open_pending(self, cid: str) -> None:
        with self._pending_lock:
            self._pending[cid] = SimpleQueue()

    # -- backend obligations ----------------------------------------------

    @abstractmethod
    def request(
        self, to: str, kind: str, payload: dict, timeout: float = DEFAULT_TIMEOUT
    ) -> Envelope: ...

    @abstractmethod
    def notify(self, to: str, kind: str, payload: dict) -> None: ...

    @abstractmethod
    def reply(self, to: str, correlation_id: str, kind: str, payload: dict) -> None: ...

    @abstractmethod
    def publish(self, topic: str, kind: str, payload: dict) -> None: ...

    def _register_subscription(self, topic: str) -> None:
        """Backend hook; loopback keeps subscriptions locally."""

    def close(self) -> None:
        """Release backend resources; loopback has none."""


class MessageBus(ABC):
    @abstractmethod
    def peer(self, name: str, role: str) -> Peer: ...

    def close(self) -> None: ...

    def __enter__(self) -> "MessageBus":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# -- loopback ----------------------------------------------------------------


def _roundtrip(envelope: Envelope) -> Envelope:
    """Force the full codec even in-process, for wire parity."""
    return decode_envelope(encode_envelope(envelope))


class LoopbackBus(MessageBus):
    def __init__(self) -> None:
        self._peers: dict[str, LoopbackPeer] = {}
        self._topics: dict[str, list[str]] = defaultdict(list)

    def peer(self, name: str, role: str) -> "LoopbackPeer":
        if name in self._peers:
            raise TransportError(f"peer name {name!r} already taken")
        joined = LoopbackPeer(self, name, role)
        self._peers[name] = joined
        return joined

    def _target(self, name: str) -> "LoopbackPeer":
        try:
            return self._peers[name]
        except KeyError:
            raise TransportError(f"no peer named {name!r} on this bus") from None


class LoopbackPeer(Peer):
    def __init__(self, bus: LoopbackBus, name: str, role: str) -> None:
        super().__init__(name, role)
        self._bus = bus

    def request(
        self, to: str, kind: str, payload: dict, timeout: float = DEFAULT_TIMEOUT
    ) -> Envelope:
        cid = self._next_cid()
        self._open_pending(cid)
        try:
            target = self._bus._target(to)
            immediate = target._dispatch(_roundtrip(self._make(kind, cid, payload)))
            if immediate is not None:
                return _roundtrip(immediate)
            return self._await(cid, timeout)
        finally:
            with self._pending_lock:
                self._pending.pop(cid, None)

    def notify(self, to: str, kind: str, payload: dict) -> None:
        envelope = _roundtrip(self._make(kind, self._next_cid(), payload))
        self._bus._target(to)._dispatch(envelope)

    def reply(self, to: str, correlation_id: str, kind: str, payload: dict) -> None:
        envelope = _roundtrip(self._make(kind, correlation_id, payload))
        if not self._bus._target(to)._resolve(envelope):
            raise TransportError(
                f"peer {to!r} has no open request {correlation_id!r}"
            )

    def publish(self, topic: str, kind: str, payload: dict) -> None:
        envelope = _roundtrip(self._make(kind, self._next_cid(), payload))
        for name in self._bus._topics.get(topic, []):
            self._bus._target(name)._deliver_publication(topic, envelope)

    def _register_subscription(self, topic: str) -> None:
        if self.name not in self._bus._topics[topic]:
            self._bus._topics[topic].append(self.name)


# -- sockets -------------------------------------------------------------------


def _pack_frame(doc: dict) -> bytes:
    body = canonical_json(doc).encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise TransportError("outer frame exceeds the frame cap")
    return struct.pack(">I", len(body)) + body


def _read_frame(rfile) -> dict | None:
    prefix = rfile.read(4)
    if len(prefix) < 4:
        return None  # clean EOF
    (length,) = struct.unpack(">I", prefix)
    if length > MAX_FRAME_BYTES:
        raise TransportError(f"peer announced oversized frame of {length} bytes")
    body = rfile.read(length)
    if len(body) != length:
        return None
    return json.loads(body.decode("utf-8"))


class _Router:
    """Hub of the socket star; forwards outer frames between named peers."""

    def __init__(self, host: str, port: int) -> None:
        self._server = socket.create_server((host, port))
        self.address: tuple[str, int] = self._server.getsockname()[:2]
        self._links: dict[str, socket.socket] = {}
        self._write_locks: dict[str, threading.Lock] = {}
        self._topics: dict[str, list[str]] = defaultdict(list)
        self._state_lock = threading.Lock()
        self._closing = False
        threading.Thread(target=self._accept_loop, daemon=True).start()

    def _accept_loop(self) -> None:
        while True:
            try:
                conn, _ = self._server.accept()
            except OSError:
                return
            # the traffic is small request/reply frames; never batch them
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            threading.Thread(target=self._serve, args=(conn,), daemon=True).start()

    def _serve(self, conn: socket.socket) -> None:
        rfile = conn.makefile("rb")
        name = None
        try:
            hello = _read_frame(rfile)
            if not hello or hello.get("op") != "register" or "name" not in hello:
                return
            name = hello["name"]
            with self._state_lock:
                if name in self._links:
                    return  # duplicate registration; drop the newcomer
                self._links[name] = conn
                self._write_locks[name] = threading.Lock()
            while True:
                frame = _read_frame(rfile)
                if frame is None:
                    return
                self._route(name, frame)
        except (OSError, ValueError, TransportError):
            return
        finally:
            rfile.close()
            conn.close()
            if name is not None:
                with self._state_lock:
                    self._links.pop(name, None)
                    self._write_locks.pop(name, None)
                    for subscribers in self._topics.values():
                        if name in subscribers:
                            subscribers.remove(name)

    def _route(self, origin: str, frame: dict) -> None:
        op = frame.get("op")
        if op == "send":
            self._forward(origin, frame.get("to"), frame)
        elif op == "subscribe":
            with self._state_lock:
                if origin not in self._topics[frame["topic"]]:
                    self._topics[frame["topic"]].append(origin)
        elif op == "publish":
            with self._state_lock:
                subscribers = list(self._topics.get(frame["topic"], []))
            for name in subscribers:
                self._forward(origin, name, frame)

    def _forward(self, origin: str, target: str, frame: dict) -> None:
        with self._state_lock:
            link = self._links.get(target)
            lock = self._write_locks.get(target)
        if link is None:
            bounce = Envelope(
                kind="Error",
                correlation_id=frame.get("env", {}).get("correlation_id", "router"),
                sender_role="router",
                sender_id="router",
                payload={"message": f"no peer named {target!r} on this bus"},
            )
            self._forward_raw(origin, {"op": "send", "to": origin,
                                       "from": "router", "env": bounce.to_dict()})
            return
        with lock:
            try:
                link.sendall(_pack_frame(frame))
            except OSError:
                pass

    def _forward_raw(self, target: str, frame: dict) -> None:
        with self._state_lock:
            link = self._links.get(target)
            lock = self._write_locks.get(target)
        if link is None:
            return
        with lock:
            try:
                link.sendall(_pack_frame(frame))
            except OSError:
                pass

    def close(self) -> None:
        self._closing = True
        self._server.close()
        with self._state_lock:
            links = list(self._links.values())
        for link in links:
            try:
                link.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            link.close()


class SocketBus(MessageBus):
    """Starts a router and mints peers connected to it.

    An endpoint of ``"host:0"`` picks a free port; :attr:`address` reports
    the bound one.  Peers in other processes can join by address with
    :func:`connect_peer`.
    """

    def __init__(self, endpoint: str = "127.0.0.1:0") -> None:
        host, _, port = endpoint.rpartition(":")
        if not host or not port.lstrip("-").isdigit():
            raise TransportError(f"endpoint {endpoint!r} is not host:port")
        self._router = _Router(host, int(port))
        self.address = "%s:%d" % self._router.address
        self._peers: list[SocketPeer] = []

    def peer(self, name: str, role: str) -> "SocketPeer":
        joined = SocketPeer(name, role, self._router.address)
        self._peers.append(joined)
        return joined

    def close(self) -> None:
        for peer in self._peers:
            peer.close()
        self._router.close()


def connect_peer(name: str, role: str, endpoint: str) -> "SocketPeer":
    """Join an already-running socket bus by its ``host:port`` endpoint."""
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise TransportError(f"endpoint {endpoint!r} is not host:port")
    return SocketPeer(name, role, (host, int(port)))


class SocketPeer(Peer):
    def __init__(self, name: str, role: str, address: tuple[str, int]) -> None:
        super().__init__(name, role)
        self._sock = socket.create_connection(address)
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._wlock = threading.Lock()
        self._send_frame({"op": "register", "name": name})
        self._closed = False
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _send_frame(self, frame: dict) -> None:
        with self._wlock:
            self._sock.sendall(_pack_frame(frame))

    def _send_envelope(self, to: str, envelope: Envelope) -> None:
        encode_envelope(envelope)  # validate + enforce encodability
        self._send_frame(
            {"op": "send", "to": to, "from": self.name, "env": envelope.to_dict()}
        )

    def _read_loop(self) -> None:
        rfile = self._sock.makefile("rb")
        while True:
            try:
                frame = _read_frame(rfile)
            except (OSError, ValueError, TransportError):
                return
            if frame is None:
                return
            try:
                self._handle_frame(frame)
            except TransportError:
                continue  # malformed envelope from a peer; drop the frame

    def _handle_frame(self, frame: dict) -> None:
        if frame.get("op") == "publish":
            self._deliver_publication(frame["topic"], Envelope.from_dict(frame["env"]))
            return
        if frame.get("op") != "send":
            return
        envelope = Envelope.from_dict(frame["env"])
        if self._resolve(envelope):
            return
        outcome = self._dispatch(envelope)
        if outcome is not None:
            self._send_envelope(frame["from"], outcome)

    def request(
        self, to: str, kind: str, payload: dict, timeout: float = DEFAULT_TIMEOUT
    ) -> Envelope:
        cid = self._next_cid()
        self._open_pending(cid)
        self._send_envelope(to, self._make(kind, cid, payload))
        return self._await(cid, timeout)

    def notify(self, to: str, kind: str, payload: dict) -> None:
        self._send_envelope(to, self._make(kind, self._next_cid(), payload))

    def reply(self, to: str, correlation_id: str, kind: str, payload: dict) -> None:
        self._send_envelope(to, self._make(kind, correlation_id, payload))

    def publish(self, topic: str, kind: str, payload: dict) -> None:
        envelope = self._make(kind, self._next_cid(), payload)
        encode_envelope(envelope)
        self._send_frame(
            {"op": "publish", "topic": topic, "from": self.name,
             "env": envelope.to_dict()}
        )

    def _register_subscription(self, topic: str) -> None:
        self._send_frame({"op": "subscribe", "topic": topic})

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def make_bus(kind: str, endpoint: str | None = None) -> MessageBus:
    if kind == "loopback":
        return LoopbackBus()
    if kind == "socket":
        return SocketBus(endpoint or "127.0.0.1:0")
    raise TransportError(f"unknown transport {kind!r} (loopback or socket)")
