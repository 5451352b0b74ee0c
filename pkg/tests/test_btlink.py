"""Connection lifecycle tests for the simulated Bluetooth layer."""

import random
import threading

import pytest

from homelink.btlink import (
    SPP_UUID,
    Adapter,
    AdapterState,
    HostUnreachableError,
    LinkClosedError,
    LinkRefusedError,
    LinkTimeoutError,
    NotSupportedError,
    VirtualRadio,
    normalize_mac,
)
from homelink.clock import SimClock


def make_radio():
    return VirtualRadio(SimClock())


def pair(radio, server_uuid=SPP_UUID):
    """Enabled phone + enabled peripheral already listening on server_uuid."""
    phone = radio.create_adapter("AA:00:00:00:00:01", "phone")
    box = radio.create_adapter("AA:00:00:00:00:02", "entry")
    phone.request_enable()
    box.request_enable()
    server = box.listen(server_uuid)
    return phone, box, server


def connect_accept(phone, box_mac, server, uuid=SPP_UUID):
    """Drive the blocking handshake from two threads, return both ends."""
    result = {}

    def run_accept():
        result["server_side"] = server.accept(timeout=5.0)

    t = threading.Thread(target=run_accept)
    t.start()
    client_side = phone.connect(box_mac, uuid, timeout=5.0)
    t.join(timeout=5.0)
    assert not t.is_alive()
    return client_side, result["server_side"]


# -- adapter lifecycle --------------------------------------------------------


def test_unregistered_adapter_is_absent():
    loose = Adapter("AA:00:00:00:00:09", "no-radio")
    assert loose.state is AdapterState.ABSENT
    with pytest.raises(NotSupportedError):
        loose.request_enable()


def test_registered_adapter_starts_disabled_and_enable_is_idempotent():
    radio = make_radio()
    a = radio.create_adapter("AA:00:00:00:00:01", "phone")
    assert a.state is AdapterState.DISABLED
    assert a.start_discovery() is None

    a.request_enable()
    a.request_enable()
    assert a.state is AdapterState.ENABLED
    assert sum(1 for _, label, d in radio.trace if label == "enabled" and d["mac"] == a.mac) == 1


def test_disable_closes_servers_and_stops_discovery():
    radio = make_radio()
    phone, box, server = pair(radio)
    session = phone.start_discovery()
    assert session is not None and phone.discovering

    box.disable()
    phone.disable()
    assert not server.open
    assert not phone.discovering
    with pytest.raises(LinkClosedError):
        server.accept(timeout=0.01)


def test_mac_normalization():
    assert normalize_mac("aa-bb-cc-dd-ee-ff") == "AA:BB:CC:DD:EE:FF"
    with pytest.raises(ValueError):
        normalize_mac("not-a-mac")


# -- discovery ---------------------------------------------------------------


def test_discovery_finds_exactly_the_enabled_in_range_peers():
    radio = make_radio()
    phone = radio.create_adapter("AA:00:00:00:00:01", "phone")
    near1 = radio.create_adapter("AA:00:00:00:00:02", "entry")
    near2 = radio.create_adapter("AA:00:00:00:00:03", "room")
    off = radio.create_adapter("AA:00:00:00:00:04", "car")
    far = radio.create_adapter("AA:00:00:00:00:05", "garage")
    for a in (phone, near1, near2, far):
        a.request_enable()
    radio.set_range(phone.mac, far.mac, False)

    session = phone.start_discovery()
    found = session.events()
    assert [d.mac for d in found] == [near1.mac, near2.mac]
    assert all(d.service_uuid == SPP_UUID for d in found)
    assert off.mac not in {d.mac for d in found}
    assert session.events() == []  # events are drained once


def test_discovery_with_no_peers_times_out_cleanly():
    radio = make_radio()
    phone = radio.create_adapter("AA:00:00:00:00:01", "phone")
    phone.request_enable()

    session = phone.start_discovery(duration_ms=12_000)
    assert session.events() == []
    assert session.active
    radio.clock.advance(12_000)
    assert not session.active
    assert session.events() == []


def test_discovery_results_respect_link_latency():
    radio = make_radio()
    phone = radio.create_adapter("AA:00:00:00:00:01", "phone")
    box = radio.create_adapter("AA:00:00:00:00:02", "entry")
    phone.request_enable()
    box.request_enable()
    radio.set_latency(phone.mac, box.mac, 300)

    session = phone.start_discovery()
    assert session.events() == []
    radio.clock.advance(299)
    assert session.events() == []
    radio.clock.advance(1)
    assert [d.mac for d in session.events()] == [box.mac]


def test_cancel_mid_scan_drops_pending_results():
    radio = make_radio()
    phone = radio.create_adapter("AA:00:00:00:00:01", "phone")
    box = radio.create_adapter("AA:00:00:00:00:02", "entry")
    phone.request_enable()
    box.request_enable()
    radio.set_latency(phone.mac, box.mac, 500)

    session = phone.start_discovery()
    phone.cancel_discovery()
    radio.clock.advance(1_000)
    assert session.events() == []
    assert not session.active


def test_connect_cancels_own_discovery_first():
    radio = make_radio()
    phone, box, server = pair(radio)
    phone.start_discovery()

    connect_accept(phone, box.mac, server)
    labels = [label for _, label, d in radio.trace if label in ("discovery-cancelled", "connect-attempt")]
    assert labels == ["discovery-cancelled", "connect-attempt"]


# -- connecting ---------------------------------------------------------------


def test_connect_to_disabled_or_out_of_range_target_is_unreachable():
    radio = make_radio()
    phone, box, server = pair(radio)

    box.disable()
    with pytest.raises(HostUnreachableError):
        phone.connect(box.mac, timeout=0.1)

    box.request_enable()
    box.listen(SPP_UUID)
    radio.set_range(phone.mac, box.mac, False)
    with pytest.raises(HostUnreachableError):
        phone.connect(box.mac, timeout=0.1)

    with pytest.raises(HostUnreachableError):
        phone.connect("AA:00:00:00:00:77", timeout=0.1)


def test_connect_with_wrong_uuid_is_refused():
    radio = make_radio()
    phone, box, server = pair(radio, server_uuid=SPP_UUID)
    with pytest.raises(LinkRefusedError):
        phone.connect(box.mac, "00001102-0000-1000-8000-00805f9b34fb", timeout=0.1)


def test_connect_times_out_when_nobody_accepts():
    radio = make_radio()
    phone, box, server = pair(radio)
    with pytest.raises(LinkTimeoutError):
        phone.connect(box.mac, timeout=0.05)


def test_uuid_match_over_randomized_pairs():
    rng = random.Random(7)
    uuids = [f"0000110{i}-0000-1000-8000-00805f9b34fb" for i in range(1, 5)]
    for trial in range(10):
        radio = make_radio()
        phone = radio.create_adapter("AA:00:00:00:00:01", "phone")
        box = radio.create_adapter("AA:00:00:00:00:02", "entry")
        phone.request_enable()
        box.request_enable()
        served = rng.choice(uuids)
        asked = rng.choice(uuids)
        server = box.listen(served)
        if asked == served:
            client, srv = connect_accept(phone, box.mac, server, uuid=asked)
            client.close()
        else:
            with pytest.raises(LinkRefusedError):
                phone.connect(box.mac, asked, timeout=0.1)


# -- established links --------------------------------------------------------


def test_closing_server_socket_keeps_established_link_usable():
    radio = make_radio()
    phone, box, server = pair(radio)
    client, srv = connect_accept(phone, box.mac, server)

    server.close()
    client.send(b"after close")
    assert srv.recv(timeout=1.0) == b"after close"
    srv.send(b"still alive")
    assert client.recv(timeout=1.0) == b"still alive"

    with pytest.raises(LinkRefusedError):
        phone.connect(box.mac, timeout=0.1)


def test_recv_returns_empty_after_peer_close_and_drain():
    radio = make_radio()
    phone, box, server = pair(radio)
    client, srv = connect_accept(phone, box.mac, server)

    client.send(b"last words")
    client.close()
    assert srv.recv(timeout=1.0) == b"last words"
    assert srv.recv(timeout=1.0) == b""
    with pytest.raises(LinkClosedError):
        srv.send(b"too late")


def test_stream_delivery_is_ordered_and_complete_under_random_chunking():
    rng = random.Random(1234)
    radio = make_radio()
    phone, box, server = pair(radio)
    client, srv = connect_accept(phone, box.mac, server)

    blob = bytes(rng.randrange(256) for _ in range(4096))
    i = 0
    while i < len(blob):
        n = rng.randrange(1, 97)
        client.send(blob[i:i + n])
        i += n
    client.close()

    got = bytearray()
    while True:
        chunk = srv.recv(max_bytes=rng.randrange(1, 129), timeout=1.0)
        if not chunk:
            break
        got.extend(chunk)
    assert bytes(got) == blob


def test_send_latency_delays_visibility_under_manual_clock():
    radio = make_radio()
    phone = radio.create_adapter("AA:00:00:00:00:01", "phone")
    box = radio.create_adapter("AA:00:00:00:00:02", "entry")
    phone.request_enable()
    box.request_enable()
    radio.set_latency(phone.mac, box.mac, 250)
    server = box.listen(SPP_UUID)
    client, srv = connect_accept(phone, box.mac, server)

    client.send(b"delayed")
    with pytest.raises(LinkTimeoutError):
        srv.recv(timeout=0.05)
    radio.clock.advance(250)
    assert srv.recv(timeout=1.0) == b"delayed"


def test_accept_timeout_raises():
    radio = make_radio()
    phone, box, server = pair(radio)
    with pytest.raises(LinkTimeoutError):
        server.accept(timeout=0.05)


# -- bonding ------------------------------------------------------------------


def test_bonding_requires_enabled_adapter_and_lists_known_devices():
    radio = make_radio()
    phone = radio.create_adapter("AA:00:00:00:00:01", "phone")
    box = radio.create_adapter("AA:00:00:00:00:02", "entry")
    box.request_enable()

    with pytest.raises(Exception):
        phone.bond(box.mac)

    phone.request_enable()
    phone.bond(box.mac)
    names = {d.friendly_name for d in phone.bonded_devices()}
    assert names == {"entry"}
