"""Simulated Bluetooth serial links.

Models the classic SPP connection lifecycle end to end: adapters that must
be enabled before use, discovery over a virtual radio, bonding, UUID-matched
server sockets with blocking accept, and duplex stream sockets. No real
radio I/O; a VirtualRadio instance is the world.

Threading: accept(), connect() and LinkSocket.recv() block. A socket end
supports one concurrent reader and one concurrent writer. All connection
state changes are serialized through the radio lock and appended to the
radio trace, so single-threaded drivers see deterministic traces.
"""

from __future__ import annotations

import re
import threading
import time
import uuid as uuidlib
from dataclasses import dataclass
from enum import Enum

from .clock import SimClock

# Serial Port Profile service class, the profile HC-06 modules expose.
SPP_UUID = "00001101-0000-1000-8000-00805f9b34fb"

DEFAULT_DISCOVERY_MS = 12_000

_MAC_RE = re.compile(r"^[0-9A-F]{2}(:[0-9A-F]{2}){5}$")

_POLL_S = 0.005  # wait-loop slice for sim-time visibility checks


class BtError(Exception):
    pass


class NotSupportedError(BtError):
    """Adapter is not registered with any radio (no Bluetooth support)."""


class AdapterDisabledError(BtError):
    pass


class HostUnreachableError(BtError):
    """Target absent, out of range, or its adapter is disabled."""


class LinkRefusedError(BtError):
    """No open server socket listens on the requested UUID."""


class LinkTimeoutError(BtError):
    pass


class LinkClosedError(BtError):
    pass


class AdapterState(Enum):
    ABSENT = "absent"
    DISABLED = "disabled"
    ENABLED = "enabled"


def normalize_mac(mac: str) -> str:
    mac = mac.strip().upper().replace("-", ":")
    if not _MAC_RE.match(mac):
        raise ValueError(f"not a valid MAC address: {mac!r}")
    return mac


def normalize_uuid(value: str) -> str:
    return str(uuidlib.UUID(value))


@dataclass(frozen=True)
class RemoteDevice:
    """Snapshot of another adapter as seen over the air."""

    mac: str
    friendly_name: str
    service_uuid: str
    in_range: bool


# -- byte pipes ---------------------------------------------------------------


class _Pipe:
    """One direction of a link: ordered segments with a visibility time."""

    def __init__(self, clock: SimClock, latency_ms: int):
        self._clock = clock
        self._latency = latency_ms
        self._segments: list[tuple[int, bytearray]] = []
        self._closed = False
        self._cond = threading.Condition()

    def write(self, data: bytes) -> None:
        if not data:
            return
        with self._cond:
            if self._closed:
                raise LinkClosedError("socket closed")
            self._segments.append((self._clock.now_ms() + self._latency, bytearray(data)))
            self._cond.notify_all()

    def read(self, max_bytes: int, timeout: float | None) -> bytes:
        """Up to max_bytes of visible data; b'' on EOF; None-timeout blocks."""
        end = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while True:
                chunk = self._take_visible(max_bytes)
                if chunk:
                    return bytes(chunk)
                if self._closed:
                    return b""
                if end is not None:
                    remaining = end - time.monotonic()
                    if remaining <= 0:
                        raise LinkTimeoutError("recv timed out")
                    self._cond.wait(min(remaining, _POLL_S))
                else:
                    self._cond.wait(_POLL_S)

    def _take_visible(self, max_bytes: int) -> bytearray:
        now = self._clock.now_ms()
        out = bytearray()
        while self._segments and len(out) < max_bytes:
            visible_at, seg = self._segments[0]
            if visible_at > now:
                break
            take = max_bytes - len(out)
            out.extend(seg[:take])
            if take >= len(seg):
                self._segments.pop(0)
            else:
                self._segments[0] = (visible_at, seg[take:])
        return out

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def drained(self) -> bool:
        with self._cond:
            return self._closed and not self._segments


class LinkSocket:
    """One end of an established duplex link."""

    def __init__(self, local_mac: str, remote_mac: str, rx: _Pipe, tx: _Pipe, radio: "VirtualRadio"):
        self.local_mac = local_mac
        self.remote_mac = remote_mac
        self._rx = rx
        self._tx = tx
        self._radio = radio
        self.connected = True

    def send(self, data: bytes) -> None:
        self._tx.write(data)

    def recv(self, max_bytes: int = 4096, timeout: float | None = None) -> bytes:
        """Blocks for at least one byte; returns b'' once peer closed and drained."""
        return self._rx.read(max_bytes, timeout)

    def close(self) -> None:
        if self.connected:
            self.connected = False
            self._tx.close()
            self._rx.close()
            self._radio._trace_event("link-closed", local=self.local_mac, remote=self.remote_mac)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# -- server sockets -----------------------------------------------------------


class _ConnRequest:
    def __init__(self, requester: "Adapter", uuid: str):
        self.requester = requester
        self.uuid = uuid
        self.done = threading.Event()
        self.socket: LinkSocket | None = None
        self.refused = False


class ServerSocket:
    def __init__(self, adapter: "Adapter", uuid: str):
        self.adapter = adapter
        self.uuid = uuid
        self.open = True
        self._pending: list[_ConnRequest] = []
        self._cond = threading.Condition()

    def accept(self, timeout: float | None = None) -> LinkSocket:
        """Block until a UUID-matching request arrives, then hand out a link.

        Closing the server only stops further accepts; links it already
        produced stay connected.
        """
        with self._cond:
            while True:
                if not self.open:
                    raise LinkClosedError("server socket closed")
                if self._pending:
                    request = self._pending.pop(0)
                    break
                if not self._cond.wait(timeout):
                    raise LinkTimeoutError("accept timed out")
        radio = self.adapter.radio
        link_key = frozenset((self.adapter.mac, request.requester.mac))
        latency = radio._latency_for(link_key)
        a_to_b = _Pipe(radio.clock, latency)
        b_to_a = _Pipe(radio.clock, latency)
        server_side = LinkSocket(self.adapter.mac, request.requester.mac, a_to_b, b_to_a, radio)
        client_side = LinkSocket(request.requester.mac, self.adapter.mac, b_to_a, a_to_b, radio)
        request.socket = client_side
        request.done.set()
        radio._trace_event("accepted", server=self.adapter.mac, client=request.requester.mac, uuid=self.uuid)
        return server_side

    def close(self) -> None:
        with self._cond:
            if not self.open:
                return
            self.open = False
            for request in self._pending:
                request.refused = True
                request.done.set()
            self._pending.clear()
            self._cond.notify_all()
        self.adapter._forget_server(self)
        self.adapter.radio._trace_event("server-closed", mac=self.adapter.mac, uuid=self.uuid)

    def _submit(self, request: _ConnRequest) -> bool:
        with self._cond:
            if not self.open:
                return False
            self._pending.append(request)
            self._cond.notify_all()
            return True

    def _withdraw(self, request: _ConnRequest) -> None:
        with self._cond:
            if request in self._pending:
                self._pending.remove(request)


# -- discovery ----------------------------------------------------------------


class DiscoverySession:
    """Found-device events for one scan; results appear after link latency."""

    def __init__(self, adapter: "Adapter", deadline_ms: int):
        self._adapter = adapter
        self._deadline_ms = deadline_ms
        self._events: list[tuple[int, RemoteDevice]] = []
        self._cancelled = False
        self._lock = threading.Lock()

    @property
    def active(self) -> bool:
        with self._lock:
            if self._cancelled:
                return False
        return self._adapter.radio.clock.now_ms() < self._deadline_ms

    def events(self) -> list[RemoteDevice]:
        """Drain found events visible at the current sim time."""
        now = self._adapter.radio.clock.now_ms()
        out = []
        with self._lock:
            keep = []
            for visible_at, dev in self._events:
                if not self._cancelled and visible_at <= now:
                    out.append(dev)
                else:
                    keep.append((visible_at, dev))
            self._events = keep
        return out

    def _cancel(self):
        with self._lock:
            self._cancelled = True
            self._events.clear()


# -- adapters and the radio ---------------------------------------------------


class Adapter:
    def __init__(self, mac: str, friendly_name: str, default_uuid: str = SPP_UUID):
        self.mac = normalize_mac(mac)
        self.friendly_name = friendly_name
        self.default_uuid = normalize_uuid(default_uuid)
        self.enabled = False
        self.radio: VirtualRadio | None = None
        self._bonded: set[str] = set()
        self._servers: list[ServerSocket] = []
        self._discovery: DiscoverySession | None = None

    # lifecycle ---------------------------------------------------------

    @property
    def state(self) -> AdapterState:
        if self.radio is None:
            return AdapterState.ABSENT
        return AdapterState.ENABLED if self.enabled else AdapterState.DISABLED

    def request_enable(self) -> AdapterState:
        """Idempotent enable request; models the system settings prompt."""
        if self.radio is None:
            raise NotSupportedError("no Bluetooth adapter present")
        if not self.enabled:
            self.enabled = True
            self.radio._trace_event("enabled", mac=self.mac)
        return AdapterState.ENABLED

    def disable(self) -> None:
        if self.radio is None:
            raise NotSupportedError("no Bluetooth adapter present")
        if self.enabled:
            self.enabled = False
            for server in list(self._servers):
                server.close()
            if self._discovery is not None:
                self._discovery._cancel()
                self._discovery = None
            self.radio._trace_event("disabled", mac=self.mac)

    def _require_enabled(self):
        if self.radio is None:
            raise NotSupportedError("no Bluetooth adapter present")
        if not self.enabled:
            raise AdapterDisabledError(f"adapter {self.mac} is disabled")

    # bonding -----------------------------------------------------------

    def bond(self, remote_mac: str) -> None:
        self._require_enabled()
        self._bonded.add(normalize_mac(remote_mac))

    def bonded_devices(self) -> set[RemoteDevice]:
        self._require_enabled()
        found = set()
        for mac in self._bonded:
            other = self.radio.adapters.get(mac)
            if other is not None:
                found.add(self.radio._snapshot(self, other))
        return found

    # discovery ---------------------------------------------------------

    @property
    def discovering(self) -> bool:
        return self._discovery is not None and self._discovery.active

    def start_discovery(self, duration_ms: int = DEFAULT_DISCOVERY_MS) -> DiscoverySession | None:
        """Returns immediately: a session when started, None when disabled."""
        if self.radio is None or not self.enabled:
            return None
        return self.radio._start_discovery(self, duration_ms)

    def cancel_discovery(self) -> None:
        """Stop the scan; no further found events. No-op when idle."""
        if self._discovery is not None:
            self._discovery._cancel()
            self._discovery = None
            if self.radio is not None:
                self.radio._trace_event("discovery-cancelled", mac=self.mac)

    # serving and connecting ---------------------------------------------

    @property
    def listening(self) -> bool:
        return any(server.open for server in self._servers)

    def listen(self, uuid: str | None = None) -> ServerSocket:
        self._require_enabled()
        server = ServerSocket(self, normalize_uuid(uuid or self.default_uuid))
        self._servers.append(server)
        self.radio._trace_event("listening", mac=self.mac, uuid=server.uuid)
        return server

    def connect(self, remote_mac: str, uuid: str | None = None, timeout: float | None = 5.0) -> LinkSocket:
        """Connect to a listening remote; discovery is cancelled first."""
        self._require_enabled()
        self.cancel_discovery()
        return self.radio._connect(self, normalize_mac(remote_mac), normalize_uuid(uuid or self.default_uuid), timeout)

    def _forget_server(self, server: ServerSocket) -> None:
        if server in self._servers:
            self._servers.remove(server)

    def _server_for(self, uuid: str) -> ServerSocket | None:
        for server in self._servers:
            if server.open and server.uuid == uuid:
                return server
        return None


class VirtualRadio:
    """The shared medium: adapter registry, range matrix, link latency.

    range_tier_m / nominal_rate_mbps describe the modeled device class and
    are informational only.
    """

    def __init__(self, clock: SimClock | None = None, default_latency_ms: int = 0,
                 range_tier_m: int = 10, nominal_rate_mbps: float = 3.0):
        self.clock = clock or SimClock()
        self.adapters: dict[str, Adapter] = {}
        self.default_latency_ms = default_latency_ms
        self.range_tier_m = range_tier_m
        self.nominal_rate_mbps = nominal_rate_mbps
        self.trace: list[tuple[int, str, dict]] = []
        self._range_overrides: dict[frozenset, bool] = {}
        self._latency_overrides: dict[frozenset, int] = {}
        self._lock = threading.RLock()

    def register(self, adapter: Adapter) -> Adapter:
        with self._lock:
            if adapter.mac in self.adapters:
                raise ValueError(f"MAC {adapter.mac} already registered")
            adapter.radio = self
            self.adapters[adapter.mac] = adapter
            self._trace_event("registered", mac=adapter.mac, name=adapter.friendly_name)
        return adapter

    def create_adapter(self, mac: str, friendly_name: str, default_uuid: str = SPP_UUID) -> Adapter:
        return self.register(Adapter(mac, friendly_name, default_uuid))

    def set_range(self, mac_a: str, mac_b: str, in_range: bool) -> None:
        key = frozenset((normalize_mac(mac_a), normalize_mac(mac_b)))
        with self._lock:
            self._range_overrides[key] = in_range

    def set_latency(self, mac_a: str, mac_b: str, latency_ms: int) -> None:
        key = frozenset((normalize_mac(mac_a), normalize_mac(mac_b)))
        with self._lock:
            self._latency_overrides[key] = latency_ms

    def in_range(self, mac_a: str, mac_b: str) -> bool:
        key = frozenset((normalize_mac(mac_a), normalize_mac(mac_b)))
        return self._range_overrides.get(key, True)

    # internals ----------------------------------------------------------

    def _latency_for(self, key: frozenset) -> int:
        return self._latency_overrides.get(key, self.default_latency_ms)

    def _snapshot(self, viewer: Adapter, other: Adapter) -> RemoteDevice:
        listening = next((s.uuid for s in other._servers if s.open), other.default_uuid)
        return RemoteDevice(other.mac, other.friendly_name, listening, self.in_range(viewer.mac, other.mac))

    def _start_discovery(self, adapter: Adapter, duration_ms: int) -> DiscoverySession:
        with self._lock:
            now = self.clock.now_ms()
            session = DiscoverySession(adapter, now + duration_ms)
            for mac in sorted(self.adapters):
                other = self.adapters[mac]
                if other is adapter or not other.enabled:
                    continue
                if not self.in_range(adapter.mac, other.mac):
                    continue
                visible_at = now + self._latency_for(frozenset((adapter.mac, other.mac)))
                session._events.append((visible_at, self._snapshot(adapter, other)))
            adapter._discovery = session
            self._trace_event("discovery-started", mac=adapter.mac, duration_ms=duration_ms)
        return session

    def _connect(self, requester: Adapter, remote_mac: str, uuid: str, timeout: float | None) -> LinkSocket:
        with self._lock:
            self._trace_event("connect-attempt", src=requester.mac, dst=remote_mac, uuid=uuid)
            target = self.adapters.get(remote_mac)
            if target is None or not target.enabled or not self.in_range(requester.mac, remote_mac):
                raise HostUnreachableError(f"{remote_mac} is not reachable")
            server = target._server_for(uuid)
            if server is None:
                raise LinkRefusedError(f"{remote_mac} refused UUID {uuid}")
            request = _ConnRequest(requester, uuid)
            if not server._submit(request):
                raise LinkRefusedError(f"{remote_mac} refused UUID {uuid}")

        if not request.done.wait(timeout):
            server._withdraw(request)
            if not request.done.is_set():  # not accepted in the meantime
                raise LinkTimeoutError(f"connect to {remote_mac} timed out")
        if request.refused or request.socket is None:
            raise LinkRefusedError(f"{remote_mac} closed while connecting")
        return request.socket

    def _trace_event(self, label: str, **details) -> None:
        with self._lock:
            self.trace.append((self.clock.now_ms(), label, details))
