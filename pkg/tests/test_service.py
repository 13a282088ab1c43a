"""WebSocket framing, the deterministic session core, and the live service."""

from __future__ import annotations

import json
import socket
import time

import pytest

from grafcet import wsframe
from grafcet.alternation import AlternationParams
from grafcet.chart import Chart, Const, Step, Transition
from grafcet.harness import parse_scenario
from grafcet.plant import FaultEvent, FaultScript, PlantParams
from grafcet.service import (
    ControlService,
    ServiceSettings,
    Session,
)
from grafcet.wsframe import (
    MAX_MESSAGE,
    OP_CONT,
    OP_PING,
    OP_TEXT,
    FrameDecoder,
    WsProtocolError,
    accept_key,
    encode_close,
    encode_frame,
    encode_text,
    handshake_reject,
    handshake_response,
)

# ---------------------------------------------------------------------------
# Framing
# ---------------------------------------------------------------------------


def client_frame(opcode, payload, fin=True, key=b"\x11\x22\x33\x44"):
    """Build a masked frame the way a browser would send it."""
    head = bytearray([(0x80 if fin else 0x00) | opcode])
    n = len(payload)
    if n < 126:
        head.append(0x80 | n)
    elif n < 1 << 16:
        head.append(0x80 | 126)
        head += n.to_bytes(2, "big")
    else:
        head.append(0x80 | 127)
        head += n.to_bytes(8, "big")
    head += key
    return bytes(head) + bytes(b ^ key[i & 3] for i, b in enumerate(payload))


class TestWsFrame:
    def test_accept_key_rfc_example(self):
        assert accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="

    def test_handshake_response(self):
        data = handshake_response("dGhlIHNhbXBsZSBub25jZQ==")
        assert data.startswith(b"HTTP/1.1 101 Switching Protocols\r\n")
        assert b"Sec-WebSocket-Accept: s3pPLMBiTxaQ9kYGzzhZRbK+xOo=\r\n" in data

    def test_handshake_reject_has_content_length(self):
        data = handshake_reject("nope")
        assert data.startswith(b"HTTP/1.1 400 Bad Request\r\n")
        assert b"Content-Length: 5\r\n" in data  # "nope\n"

    def test_encode_small_text_frame(self):
        assert encode_text("hello") == b"\x81\x05hello"

    def test_encode_length_forms(self):
        f126 = encode_frame(OP_TEXT, b"x" * 126)
        assert f126[:4] == b"\x81\x7e\x00\x7e"
        f64k = encode_frame(OP_TEXT, b"x" * 70000)
        assert f64k[1] == 127
        assert int.from_bytes(f64k[2:10], "big") == 70000

    def test_encode_close_code(self):
        assert encode_close(1000) == b"\x88\x02\x03\xe8"

    def test_decode_unmasked_server_style_frame(self):
        events = FrameDecoder().feed(encode_text("hi"))
        assert events == [("text", b"hi")]

    def test_decode_masked_client_frame(self):
        events = FrameDecoder().feed(client_frame(OP_TEXT, b"hello"))
        assert events == [("text", b"hello")]

    def test_decode_masked_extended_length(self):
        payload = bytes(range(256)) * 300  # 76800 bytes, 64-bit length form
        events = FrameDecoder().feed(client_frame(OP_TEXT, payload))
        assert events == [("text", payload)]

    def test_byte_at_a_time_feeding(self):
        decoder = FrameDecoder()
        events = []
        for b in client_frame(OP_TEXT, b"drip"):
            events += decoder.feed(bytes([b]))
        assert events == [("text", b"drip")]

    def test_fragment_reassembly(self):
        decoder = FrameDecoder()
        events = decoder.feed(client_frame(OP_TEXT, b"he", fin=False))
        events += decoder.feed(client_frame(OP_CONT, b"ll", fin=False))
        events += decoder.feed(client_frame(OP_CONT, b"o", fin=True))
        assert events == [("text", b"hello")]

    def test_control_frame_between_fragments(self):
        decoder = FrameDecoder()
        events = decoder.feed(client_frame(OP_TEXT, b"he", fin=False))
        events += decoder.feed(client_frame(OP_PING, b"?"))
        events += decoder.feed(client_frame(OP_CONT, b"y", fin=True))
        assert events == [("ping", b"?"), ("text", b"hey")]

    def test_fragmented_control_frame_rejected(self):
        with pytest.raises(WsProtocolError, match="fragmented control"):
            FrameDecoder().feed(client_frame(OP_PING, b"x", fin=False))

    def test_new_data_frame_inside_fragment_rejected(self):
        decoder = FrameDecoder()
        decoder.feed(client_frame(OP_TEXT, b"a", fin=False))
        with pytest.raises(WsProtocolError, match="inside a fragmented"):
            decoder.feed(client_frame(OP_TEXT, b"b", fin=True))

    def test_orphan_continuation_rejected(self):
        with pytest.raises(WsProtocolError, match="without a start"):
            FrameDecoder().feed(client_frame(OP_CONT, b"x", fin=True))

    def test_reserved_bits_rejected(self):
        bad = bytearray(encode_text("x"))
        bad[0] |= 0x40
        with pytest.raises(WsProtocolError, match="reserved bits"):
            FrameDecoder().feed(bytes(bad))

    def test_unknown_opcode_rejected(self):
        with pytest.raises(WsProtocolError, match="unsupported opcode"):
            FrameDecoder().feed(client_frame(0x3, b""))

    def test_oversized_frame_rejected_from_header(self):
        head = b"\x81\x7f" + (MAX_MESSAGE + 1).to_bytes(8, "big")
        with pytest.raises(WsProtocolError, match="frame too large"):
            FrameDecoder().feed(head)

    def test_oversized_reassembled_message_rejected(self):
        decoder = FrameDecoder()
        decoder.feed(client_frame(OP_TEXT, b"x" * MAX_MESSAGE, fin=False))
        with pytest.raises(WsProtocolError, match="message too large"):
            decoder.feed(client_frame(OP_CONT, b"x", fin=True))


# ---------------------------------------------------------------------------
# Session core
# ---------------------------------------------------------------------------

SNAPSHOT_KEYS = [
    "t", "v", "scan_index", "clock", "chart", "steps", "marking", "mode",
    "pressure", "demand", "inputs", "outputs", "commands", "running", "faulted",
]


class TestSession:
    def test_initial_snapshot_shape(self):
        snap = Session().snapshot()
        assert list(snap) == SNAPSHOT_KEYS
        assert snap["t"] == "snapshot"
        assert snap["v"] == 1
        assert snap["scan_index"] == 0
        assert snap["chart"] == "two-pump-alternation"
        assert snap["steps"] == ["S1", "S2", "S3", "S4", "S5"]
        assert snap["marking"] == ["S1"]
        assert snap["mode"] == "auto"
        assert snap["pressure"] == 3.0
        assert snap["demand"] == 0.8
        assert snap["inputs"] == {}  # nothing sampled before the first scan
        assert snap["outputs"] == {"cmd_A": False, "cmd_B": False}
        assert snap["faulted"] == {"A": False, "B": False}

    def test_tick_advances_and_reports(self):
        session = Session()
        snap = session.tick()
        assert snap["scan_index"] == 1
        assert snap["clock"] == 0.1
        assert snap["inputs"]["pressure"] == 3.0
        assert snap["pressure"] == 2.968

    def test_deterministic_under_noise(self):
        def run(seed):
            s = Session(plant_params=PlantParams(noise_amp=0.05), seed=seed)
            return [s.tick() for _ in range(40)]

        assert run(3) == run(3)
        a, b = run(3), run(4)
        assert any(x["inputs"]["pressure"] != y["inputs"]["pressure"] for x, y in zip(a, b))

    def test_from_scenario(self):
        cfg = parse_scenario(
            "[run]\nduration = 10\ndt = 0.05\ncontroller = baseline-hysteresis\n"
        )
        session = Session.from_scenario(cfg)
        assert session.dt == 0.05
        assert session.chart.name == "baseline-hysteresis"

    def test_scripted_faults_apply_at_tick_boundaries(self):
        session = Session(faults=FaultScript(events=(FaultEvent(0.2, "A", "fail"),)))
        assert session.tick()["faulted"]["A"] is False  # t=0
        assert session.tick()["faulted"]["A"] is False  # t=0.1
        snap = session.tick()  # t=0.2: event fires before the scan
        assert snap["faulted"]["A"] is True
        assert snap["inputs"]["fault_A"] is True

    def test_set_mode_validates(self):
        session = Session()
        assert session.apply({"action": "set_mode", "mode": "manual"}) == (True, None)
        ok, reason = session.apply({"action": "set_mode", "mode": "turbo"})
        assert not ok and "mode must be one of" in reason

    def test_bumpless_transfer_into_manual(self):
        session = Session(alternation=AlternationParams(start_delay=0.2, t_alt=60.0))
        for _ in range(5):
            session.tick()
        assert session.last_tick.commands == {"A": True, "B": False}
        session.apply({"action": "set_mode", "mode": "manual"})
        assert session.manual == {"A": True, "B": False}  # seeded from the chart
        snap = session.tick()
        assert snap["commands"] == {"A": True, "B": False}

    def test_manual_pump_requires_manual_mode(self):
        session = Session()
        ok, reason = session.apply({"action": "manual_pump", "pump": "A", "on": True})
        assert not ok and reason == "manual_pump requires manual mode"

    def test_manual_pump_drives_commands_not_chart(self):
        session = Session()
        session.apply({"action": "set_mode", "mode": "manual"})
        session.apply({"action": "manual_pump", "pump": "B", "on": True})
        snap = session.tick()
        assert snap["commands"] == {"A": False, "B": True}
        assert snap["outputs"] == {"cmd_A": False, "cmd_B": False}  # chart's own view
        assert snap["running"] == {"A": False, "B": True}

    def test_manual_pump_validation(self):
        session = Session()
        session.apply({"action": "set_mode", "mode": "manual"})
        assert not session.apply({"action": "manual_pump", "pump": "C", "on": True})[0]
        assert not session.apply({"action": "manual_pump", "pump": "A", "on": "yes"})[0]

    def test_set_demand_override_and_clear(self):
        session = Session()
        assert session.apply({"action": "set_demand", "value": 1.5}) == (True, None)
        assert session.demand_at(0.0) == 1.5
        assert session.apply({"action": "set_demand", "value": None}) == (True, None)
        assert session.demand_at(0.0) == 0.8

    def test_set_demand_validation(self):
        session = Session()
        assert not session.apply({"action": "set_demand", "value": -0.1})[0]
        assert not session.apply({"action": "set_demand", "value": 100.5})[0]
        assert not session.apply({"action": "set_demand", "value": True})[0]
        assert not session.apply({"action": "set_demand", "value": "lots"})[0]

    def test_inject_fault(self):
        session = Session()
        assert session.apply({"action": "inject_fault", "pump": "B", "op": "fail"})[0]
        assert session.plant.faulted["B"] is True
        assert session.apply({"action": "inject_fault", "pump": "B", "op": "repair"})[0]
        assert session.plant.faulted["B"] is False
        assert not session.apply({"action": "inject_fault", "pump": "Q", "op": "fail"})[0]
        assert not session.apply({"action": "inject_fault", "pump": "A", "op": "melt"})[0]

    def test_unknown_action(self):
        ok, reason = Session().apply({"action": "warp"})
        assert not ok and "unknown action" in reason

    def test_reset_preserves_operator_settings(self):
        session = Session()
        for _ in range(30):
            session.tick()
        session.apply({"action": "set_mode", "mode": "manual"})
        session.apply({"action": "manual_pump", "pump": "A", "on": False})
        session.apply({"action": "manual_pump", "pump": "B", "on": True})
        session.apply({"action": "set_demand", "value": 2.0})
        session.apply({"action": "inject_fault", "pump": "A", "op": "fail"})
        session.apply({"action": "reset"})
        assert session.scan_index == 0
        assert session.plant.pressure == 3.0
        assert session.plant.faulted == {"A": False, "B": False}
        assert session.mode == "manual"
        assert session.manual == {"A": False, "B": True}
        assert session.demand_override == 2.0

    def test_reset_replays_fault_script_from_zero(self):
        session = Session(faults=FaultScript(events=(FaultEvent(0.0, "A", "fail"),)))
        session.tick()
        assert session.plant.faulted["A"] is True
        session.apply({"action": "reset"})
        assert session.plant.faulted["A"] is False
        session.tick()
        assert session.plant.faulted["A"] is True

    def test_ctor_validation(self):
        with pytest.raises(ValueError, match="dt must be"):
            Session(dt=0.0)
        alien = Chart(
            name="alien",
            signals=(),
            steps=(Step("A", initial=True),),
            transitions=(),
        )
        with pytest.raises(ValueError, match="does not fit the plant binding"):
            Session(chart=alien)


# ---------------------------------------------------------------------------
# Live service over real sockets
# ---------------------------------------------------------------------------


def unstable_session():
    """A session whose first scan raises UnstableChartError."""
    from grafcet.alternation import _signals

    chart = Chart(
        name="live",
        signals=_signals(),
        steps=(Step("S1", initial=True),),
        transitions=(
            Transition("T1", frozenset({"S1"}), frozenset({"S1"}), Const(True)),
        ),
    )
    return Session(chart=chart)


class NdjsonClient:
    def __init__(self, host, port, timeout=3.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.buf = b""

    def read(self, timeout=3.0):
        deadline = time.monotonic() + timeout
        while b"\n" not in self.buf:
            self.sock.settimeout(max(0.05, deadline - time.monotonic()))
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("server closed the connection")
            self.buf += chunk
        line, _, self.buf = self.buf.partition(b"\n")
        return json.loads(line)

    def read_until(self, predicate, timeout=3.0):
        deadline = time.monotonic() + timeout
        seen = []
        while time.monotonic() < deadline:
            msg = self.read(timeout=deadline - time.monotonic())
            seen.append(msg)
            if predicate(msg):
                return msg, seen
        raise AssertionError(f"no matching message, saw: {seen!r}")

    def send(self, obj):
        self.sock.sendall(json.dumps(obj).encode("utf-8") + b"\n")

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


@pytest.fixture
def paused_service():
    service = ControlService(ServiceSettings(port=0, start_paused=True))
    host, port = service.start()
    yield service, host, port
    service.stop()


def connect(host, port):
    return NdjsonClient(host, port)


class TestControlService:
    def test_initial_snapshot_on_connect(self, paused_service):
        _, host, port = paused_service
        client = connect(host, port)
        try:
            snap = client.read()
            assert snap["t"] == "snapshot"
            assert snap["scan_index"] == 0
            assert snap["paused"] is True
            assert snap["speed"] == 1.0
            assert snap["marking"] == ["S1"]
        finally:
            client.close()

    def test_ack_reject_and_broadcast(self, paused_service):
        _, host, port = paused_service
        client = connect(host, port)
        try:
            client.read()  # initial snapshot
            client.send({"t": "cmd", "id": 7, "action": "set_mode", "mode": "manual"})
            ack, _ = client.read_until(lambda m: m["t"] == "ack")
            assert ack["id"] == 7
            assert ack["scan_index"] == 0
            snap, _ = client.read_until(lambda m: m["t"] == "snapshot")
            assert snap["mode"] == "manual"

            client.send({"t": "cmd", "id": 8, "action": "set_mode", "mode": "manual"})
            client.read_until(lambda m: m["t"] == "ack")
            client.send({"t": "cmd", "id": 9, "action": "set_mode", "mode": "auto"})
            client.read_until(lambda m: m["t"] == "ack")

            client.send({"t": "cmd", "id": 10, "action": "manual_pump", "pump": "A", "on": True})
            reject, _ = client.read_until(lambda m: m["t"] == "reject")
            assert reject["id"] == 10
            assert reject["reason"] == "manual_pump requires manual mode"
        finally:
            client.close()

    def test_malformed_traffic_gets_error_reply(self, paused_service):
        _, host, port = paused_service
        client = connect(host, port)
        try:
            client.read()
            client.sock.sendall(b"this is not json\n")
            err, _ = client.read_until(lambda m: m["t"] == "error")
            assert err["message"] == "invalid JSON"
            client.send({"t": "hello"})
            err, _ = client.read_until(lambda m: m["t"] == "error")
            assert 'expected an object with "t": "cmd"' in err["message"]
        finally:
            client.close()

    def test_service_level_actions(self, paused_service):
        service, host, port = paused_service
        client = connect(host, port)
        try:
            client.read()
            client.send({"t": "cmd", "id": 1, "action": "set_speed", "value": 4.0})
            client.read_until(lambda m: m["t"] == "ack")
            snap, _ = client.read_until(lambda m: m["t"] == "snapshot")
            assert snap["speed"] == 4.0

            client.send({"t": "cmd", "id": 2, "action": "set_speed", "value": 0.0001})
            reject, _ = client.read_until(lambda m: m["t"] == "reject")
            assert "speed must be within" in reject["reason"]

            client.send({"t": "cmd", "id": 3, "action": "resume"})
            client.read_until(lambda m: m["t"] == "ack")
            snap, _ = client.read_until(
                lambda m: m["t"] == "snapshot" and m["scan_index"] >= 2
            )
            assert snap["paused"] is False

            client.send({"t": "cmd", "id": 4, "action": "pause"})
            client.read_until(lambda m: m["t"] == "ack")
        finally:
            client.close()

    def test_scans_advance_and_snapshots_flow(self):
        service = ControlService(ServiceSettings(port=0, speed=50.0))
        host, port = service.start()
        client = connect(host, port)
        try:
            snap, _ = client.read_until(
                lambda m: m["t"] == "snapshot" and m["scan_index"] >= 20
            )
            assert snap["clock"] >= 2.0
        finally:
            client.close()
            service.stop()

    def test_keepalive_snapshots_while_paused(self, paused_service):
        _, host, port = paused_service
        client = connect(host, port)
        try:
            client.read()
            start = time.monotonic()
            snap = client.read(timeout=2.5)  # keepalive must appear within ~1s
            assert snap["t"] == "snapshot"
            assert time.monotonic() - start < 2.2
        finally:
            client.close()

    def test_snapshot_rate_is_limited(self):
        service = ControlService(ServiceSettings(port=0, speed=1000.0))
        host, port = service.start()
        client = connect(host, port)
        try:
            client.read()  # initial
            count = 0
            first_idx = last_idx = None
            deadline = time.monotonic() + 1.0
            while time.monotonic() < deadline:
                try:
                    msg = client.read(timeout=max(0.05, deadline - time.monotonic()))
                except (TimeoutError, socket.timeout):
                    break
                if msg["t"] == "snapshot":
                    count += 1
                    if first_idx is None:
                        first_idx = msg["scan_index"]
                    last_idx = msg["scan_index"]
            assert count <= 35  # 30/s cap plus scheduling slack
            assert count >= 5
            # Far more scans happened than snapshots delivered: coalescing.
            assert last_idx - first_idx > count
        finally:
            client.close()
            service.stop()

    def test_engine_error_broadcast_pauses_service(self):
        service = ControlService(
            ServiceSettings(port=0, start_paused=True), session=unstable_session()
        )
        host, port = service.start()
        client = connect(host, port)
        try:
            client.read()
            client.send({"t": "cmd", "id": 1, "action": "resume"})
            err, _ = client.read_until(lambda m: m["t"] == "error", timeout=4.0)
            assert err["scan_index"] == 0
            snap, _ = client.read_until(
                lambda m: m["t"] == "snapshot" and m["paused"], timeout=4.0
            )
            assert snap["scan_index"] == 0  # the failed scan did not advance state
        finally:
            client.close()
            service.stop()

    def test_session_actions_over_the_wire(self, paused_service):
        _, host, port = paused_service
        client = connect(host, port)
        try:
            client.read()
            client.send({"t": "cmd", "id": 1, "action": "inject_fault", "pump": "A", "op": "fail"})
            client.read_until(lambda m: m["t"] == "ack")
            snap, _ = client.read_until(lambda m: m["t"] == "snapshot")
            assert snap["faulted"]["A"] is True

            client.send({"t": "cmd", "id": 2, "action": "reset"})
            client.read_until(lambda m: m["t"] == "ack")
            snap, _ = client.read_until(lambda m: m["t"] == "snapshot")
            assert snap["faulted"]["A"] is False
            assert snap["scan_index"] == 0

            client.send({"t": "cmd", "id": 3, "action": "warp"})
            reject, _ = client.read_until(lambda m: m["t"] == "reject")
            assert "unknown action" in reject["reason"]
        finally:
            client.close()

    def test_two_clients_both_see_broadcasts(self, paused_service):
        _, host, port = paused_service
        a = connect(host, port)
        b = connect(host, port)
        try:
            a.read()
            b.read()
            a.send({"t": "cmd", "id": 1, "action": "set_demand", "value": 1.25})
            ack, _ = a.read_until(lambda m: m["t"] == "ack")
            assert ack["id"] == 1
            snap, _ = b.read_until(
                lambda m: m["t"] == "snapshot" and m["demand"] == 1.25
            )
            assert snap["t"] == "snapshot"
        finally:
            a.close()
            b.close()


class WsClient:
    """Minimal masked-frame WebSocket client for tests."""

    def __init__(self, host, port, timeout=3.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.decoder = FrameDecoder()
        self.events = []
        self.sock.sendall(
            b"GET / HTTP/1.1\r\n"
            b"Host: test\r\n"
            b"Upgrade: websocket\r\n"
            b"Connection: Upgrade\r\n"
            b"Sec-WebSocket-Key: dGhlIHNhbXBsZSBub25jZQ==\r\n"
            b"Sec-WebSocket-Version: 13\r\n\r\n"
        )
        head = b""
        while b"\r\n\r\n" not in head:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("no handshake response")
            head += chunk
        self.response, _, rest = head.partition(b"\r\n\r\n")
        if rest:
            self.events += self.decoder.feed(rest)

    def read_event(self, timeout=3.0):
        deadline = time.monotonic() + timeout
        while not self.events:
            self.sock.settimeout(max(0.05, deadline - time.monotonic()))
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("server closed the connection")
            self.events += self.decoder.feed(chunk)
        return self.events.pop(0)

    def read_json_until(self, predicate, timeout=3.0):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            kind, payload = self.read_event(timeout=deadline - time.monotonic())
            if kind != "text":
                continue
            msg = json.loads(payload)
            if predicate(msg):
                return msg
        raise AssertionError("no matching message")

    def send_json(self, obj):
        data = json.dumps(obj).encode("utf-8")
        self.sock.sendall(client_frame(OP_TEXT, data))

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


class TestWebSocketTransport:
    def test_upgrade_snapshot_and_command(self, paused_service):
        _, host, port = paused_service
        ws = WsClient(host, port)
        try:
            assert ws.response.startswith(b"HTTP/1.1 101 ")
            assert (
                b"Sec-WebSocket-Accept: s3pPLMBiTxaQ9kYGzzhZRbK+xOo=" in ws.response
            )
            snap = ws.read_json_until(lambda m: m["t"] == "snapshot")
            assert snap["marking"] == ["S1"]
            ws.send_json({"t": "cmd", "id": "a1", "action": "set_mode", "mode": "manual"})
            ack = ws.read_json_until(lambda m: m["t"] == "ack")
            assert ack["id"] == "a1"
        finally:
            ws.close()

    def test_ping_gets_pong(self, paused_service):
        _, host, port = paused_service
        ws = WsClient(host, port)
        try:
            ws.sock.sendall(client_frame(OP_PING, b"tick"))
            deadline = time.monotonic() + 3.0
            while time.monotonic() < deadline:
                kind, payload = ws.read_event(timeout=3.0)
                if kind == "pong":
                    assert payload == b"tick"
                    break
            else:
                raise AssertionError("no pong")
        finally:
            ws.close()

    def test_close_is_answered(self, paused_service):
        _, host, port = paused_service
        ws = WsClient(host, port)
        try:
            ws.sock.sendall(client_frame(wsframe.OP_CLOSE, (1000).to_bytes(2, "big")))
            deadline = time.monotonic() + 3.0
            while time.monotonic() < deadline:
                kind, _ = ws.read_event(timeout=3.0)
                if kind == "close":
                    break
            else:
                raise AssertionError("no close reply")
        finally:
            ws.close()

    def test_missing_key_rejected(self, paused_service):
        _, host, port = paused_service
        sock = socket.create_connection((host, port), timeout=3.0)
        try:
            sock.sendall(b"GET / HTTP/1.1\r\nHost: test\r\n\r\n")
            data = sock.recv(4096)
            assert data.startswith(b"HTTP/1.1 400 Bad Request")
        finally:
            sock.close()
