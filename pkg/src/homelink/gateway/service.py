"""The gateway service.

Owns the virtual radio, the three controllers, the event log, and two
client planes:

* raw plane (default port 7070): exactly the wire byte format; each
  frame routes by its device-class header, attaching implicitly.
* JSON plane (default port 7071): newline-delimited JSON requests, with
  a WebSocket upgrade for browsers sniffed from the first bytes. Every
  JSON client receives the event backlog on connect and live events
  afterwards.

Device I/O really crosses the simulated Bluetooth layer: each device
runs a serve thread that listens, accepts one link, closes the server
socket (so nobody else can connect, per the single-phone model), and
speaks frames until the link dies.
"""

from __future__ import annotations

import json
import os
import socket
import threading

from ..btlink import (
    Adapter,
    AdapterDisabledError,
    HostUnreachableError,
    LinkClosedError,
    LinkRefusedError,
    LinkTimeoutError,
    VirtualRadio,
)
from ..clock import SimClock
from ..devices import AutomationController, CarController, EntryController, LinkSession, TempSensor
from ..secmodel import LOGIN_FAILED_MESSAGE, CollapseAlerter, CredentialStore, GsmModem, Outbox
from ..wireproto import DecodeError, FrameDecoder, MessageError, encode_frame
from ..wireproto import messages as msg
from . import ws
from .config import GatewayConfig
from .events import EventLog

ATTACHED = "attached"
BUSY = "busy"
REFUSED = "refused"
UNREACHABLE = "unreachable"

_COMMAND_NAMES = {
    msg.Auth: "auth",
    msg.Lock: "lock",
    msg.Unlock: "unlock",
    msg.LightSet: "light_set",
    msg.FanSet: "fan_set",
    msg.FanStep: "fan_step",
    msg.TempQuery: "temp_query",
    msg.StatusQuery: "status_query",
    msg.ResetAuth: "reset_auth",
}

CLASS_TO_NAME = {
    msg.DeviceClass.ENTRY: "entry",
    msg.DeviceClass.AUTOMATION: "automation",
    msg.DeviceClass.CAR: "car",
}


class TransportError(RuntimeError):
    pass


class DecodeSurfaced(RuntimeError):
    """A decode error on the device link, reported to the client as-is."""

    def __init__(self, error: DecodeError):
        super().__init__(error.detail)
        self.error = error


def response_to_dict(response: msg.Response) -> dict:
    if isinstance(response, msg.Ack):
        return {"type": "ack"}
    if isinstance(response, msg.Nack):
        return {"type": "nack", "reason": response.reason, "reason_name": response.reason_name}
    if isinstance(response, msg.Collapsed):
        return {"type": "collapsed"}
    if isinstance(response, msg.TempReport):
        return {"type": "temp_report", "raw": response.raw, "temp_c": response.celsius}
    if isinstance(response, msg.StatusReport):
        return {
            "type": "status_report",
            "light1": response.light1,
            "light2": response.light2,
            "fan_on": response.fan_on,
            "fan_level": response.fan_level,
            "lock_state": response.lock_state,
            "lock_state_name": response.lock_state_name,
        }
    raise TypeError(f"not a response: {response!r}")


def command_event_payload(command: msg.Command) -> dict:
    """Log-safe description of a command; passwords never land in the log."""
    payload = {"type": _COMMAND_NAMES[type(command)]}
    if isinstance(command, msg.LightSet):
        payload.update(light_id=command.light_id, on=command.on)
    elif isinstance(command, msg.FanSet):
        payload.update(on=command.on)
    elif isinstance(command, msg.FanStep):
        payload.update(delta=command.delta)
    return payload


def broadcast_category(record: dict) -> str:
    kind = record["kind"]
    if kind == "toast":
        return "toast"
    if kind == "sms":
        return "sms"
    if kind == "alarm":
        return "alarm"
    if kind == "collapse":
        return "collapsed"
    if kind == "response" and record["payload"].get("type") == "collapsed":
        return "collapsed"
    return "state"


def broadcast_object(record: dict) -> dict:
    out = {
        "event": broadcast_category(record),
        "seq": record["seq"],
        "t_ms": record["t_ms"],
        "device": record["device"],
        "kind": record["kind"],
    }
    out.update(record["payload"])
    return out


class Attachment:
    def __init__(self, device: str, link):
        self.device = device
        self.link = link
        self.decoder = FrameDecoder()


class ClientSession:
    def __init__(self, session_id: int, transport: str):
        self.id = session_id
        self.transport = transport
        self.logged_in = False
        self.attachments: dict[str, Attachment] = {}


class _DeviceRuntime:
    def __init__(self, name, controller, adapter, uuid):
        self.name = name
        self.controller = controller
        self.adapter = adapter
        self.uuid = uuid
        self.thread: threading.Thread | None = None
        self.current_link = None


class Gateway:
    def __init__(self, config: GatewayConfig, realtime: bool | None = None):
        self.config = config
        self.clock = SimClock(realtime=config.realtime if realtime is None else realtime)
        self.radio = VirtualRadio(self.clock)

        os.makedirs(config.data_dir, exist_ok=True)
        self.event_log = EventLog(self.clock, os.path.join(config.data_dir, "events.jsonl"))

        self.credentials = CredentialStore()
        for purpose, password in config.passwords.items():
            self.credentials.set_password(purpose, password)
        self.credentials.set_password("app_login", config.app_password)

        self.outbox = Outbox(
            self.clock,
            path=os.path.join(config.data_dir, "sms_outbox.jsonl"),
            on_deliver=lambda rec: self.event_log.append(
                "gateway", "sms", {"to": rec["recipient"], "text": rec["body"]}),
        )
        self.modem = GsmModem(self.outbox, transcript_path=os.path.join(config.data_dir, "gsm_transcript.log"))
        alerter = CollapseAlerter(self.modem, config.sms_owner, config.sms_police)

        self.entry = EntryController(
            self.credentials, self.clock, alerter,
            emit=self._emitter("entry"), on_bt_power=self._entry_power_changed)
        self.automation = AutomationController(
            self.clock, TempSensor(), mains_freq=config.mains_freq_hz, emit=self._emitter("automation"))
        self.car = CarController(
            self.credentials, self.clock, alerter,
            pulse_ms=config.pulse_ms, emit=self._emitter("car"))
        self.controllers = {"entry": self.entry, "automation": self.automation, "car": self.car}

        self._runtimes: dict[str, _DeviceRuntime] = {}
        for name, controller in self.controllers.items():
            dev = config.devices[name]
            adapter = self.radio.create_adapter(dev.mac, dev.name, dev.uuid)
            self._runtimes[name] = _DeviceRuntime(name, controller, adapter, dev.uuid)

        self._holders: dict[str, int] = {}
        self._holders_lock = threading.Lock()
        self._sessions: dict[int, ClientSession] = {}
        self._session_adapters: dict[int, Adapter] = {}
        self._next_session_id = 0
        self._state_lock = threading.Lock()

        self._running = False
        self._wake = threading.Event()
        self._listeners: list[socket.socket] = []
        self._threads: list[threading.Thread] = []
        self.raw_addr: tuple[str, int] | None = None
        self.json_addr: tuple[str, int] | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self, network: bool = True) -> None:
        self._running = True
        for name in ("entry", "automation", "car"):
            self.event_log.append(name, "init", self._device_state(name))
        for rt in self._runtimes.values():
            if rt.name != "entry":  # entry stays dark until the keypad password
                rt.adapter.request_enable()
            rt.thread = threading.Thread(target=self._device_loop, args=(rt,), daemon=True)
            rt.thread.start()
        if network:
            self.raw_addr = self._open_listener(self.config.raw_port, self._serve_raw_client)
            self.json_addr = self._open_listener(self.config.json_port, self._serve_json_client)

    def stop(self) -> None:
        self._running = False
        for listener in self._listeners:
            try:
                listener.close()
            except OSError:
                pass
        for session in list(self._sessions.values()):
            self.close_session(session)
        for rt in self._runtimes.values():
            if rt.current_link is not None:
                rt.current_link.close()
            if rt.thread is not None:
                rt.thread.join(timeout=1.0)
        self.event_log.close()

    def advance(self, delta_ms: int) -> None:
        """Move simulated time forward and settle time-based device state."""
        self.clock.advance(delta_ms)
        self.car.settle()

    # -- sessions -----------------------------------------------------------

    def new_session(self, transport: str = "local") -> ClientSession:
        with self._state_lock:
            session = ClientSession(self._next_session_id, transport)
            self._next_session_id += 1
            self._sessions[session.id] = session
        return session

    def close_session(self, session: ClientSession) -> None:
        for name in list(session.attachments):
            self._detach(session, name)
        with self._state_lock:
            self._sessions.pop(session.id, None)

    def _session_adapter(self, session: ClientSession) -> Adapter:
        adapter = self._session_adapters.get(session.id)
        if adapter is None:
            mac = f"AA:BB:CC:99:{(session.id >> 8) & 0xFF:02X}:{session.id & 0xFF:02X}"
            adapter = self.radio.create_adapter(mac, f"client-{session.id}")
            adapter.request_enable()
            self._session_adapters[session.id] = adapter
        return adapter

    # -- attach / detach -------------------------------------------------------

    def attach(self, session: ClientSession, device: str,
               mac: str | None = None, uuid: str | None = None) -> str:
        if device not in self.controllers:
            return REFUSED
        if device in session.attachments:
            return ATTACHED
        with self._holders_lock:
            if self._holders.get(device) is not None:
                self._log_attach(device, session, BUSY)
                return BUSY
            self._holders[device] = session.id
        target = self.config.devices[device]
        self._await_listening(device)
        try:
            link = self._session_adapter(session).connect(
                mac or target.mac, uuid or target.uuid, timeout=2.0)
        except HostUnreachableError:
            result = UNREACHABLE
        except (LinkRefusedError, LinkTimeoutError):
            result = REFUSED
        else:
            session.attachments[device] = Attachment(device, link)
            result = ATTACHED
        if result != ATTACHED:
            self._release_device(device, session.id)
        self._log_attach(device, session, result)
        return result

    def _log_attach(self, device: str, session: ClientSession, result: str) -> None:
        self.event_log.append(device, "attach", {"result": result, "session": session.id})

    def _await_listening(self, device: str, timeout: float = 1.0) -> None:
        """Bridge the tiny window between enabling a device and its serve
        thread opening the server socket; a disabled device is not waited on."""
        rt = self._runtimes[device]
        waited = 0.0
        while rt.adapter.enabled and not rt.adapter.listening and waited < timeout:
            self._wake.wait(0.01)
            waited += 0.01

    def _detach(self, session: ClientSession, device: str) -> None:
        attachment = session.attachments.pop(device, None)
        if attachment is not None:
            attachment.link.close()
        self._release_device(device, session.id)

    def _release_device(self, device: str, session_id: int | None = None) -> None:
        with self._holders_lock:
            if session_id is None or self._holders.get(device) == session_id:
                self._holders.pop(device, None)

    # -- command dispatch ----------------------------------------------------------

    def dispatch(self, session: ClientSession, device: str, command: msg.Command) -> msg.Response:
        """Send one command over the session's link; wire frames both ways."""
        attachment = session.attachments.get(device)
        if attachment is None:
            raise TransportError(f"not attached to {device}")
        self.event_log.append(device, "command", command_event_payload(command))
        frame_bytes = encode_frame(command, self.controllers[device].device_class)
        try:
            attachment.link.send(frame_bytes)
        except LinkClosedError as exc:
            self._detach(session, device)
            raise TransportError("link closed") from exc
        response = self._await_response(attachment)
        self.event_log.append(device, "response", response_to_dict(response))
        return response

    def _await_response(self, attachment: Attachment, timeout: float = 5.0) -> msg.Response:
        try:
            while True:
                data = attachment.link.recv(timeout=timeout)
                if data == b"":
                    raise TransportError("link closed")
                for item in attachment.decoder.feed(data):
                    if isinstance(item, DecodeError):
                        raise DecodeSurfaced(item)
                    return item.message()
        except LinkTimeoutError as exc:
            raise TransportError("timed out waiting for response") from exc

    # -- injections -------------------------------------------------------------------

    def inject_ambient(self, celsius: float) -> None:
        self.automation.sensor.set_ambient(celsius)
        self.event_log.append("automation", "ambient", {"celsius": celsius})

    def inject_keypad(self, keys: str) -> None:
        for key in keys:
            self.entry.keypress(key)

    def reset_device(self, device: str, code: str) -> dict:
        controller = self.controllers.get(device)
        if controller is None or not hasattr(controller, "reset"):
            return {"type": "nack", "reason": msg.NACK_BAD_ARG,
                    "reason_name": msg.NACK_REASONS[msg.NACK_BAD_ARG]}
        was_collapsed = controller.collapsed
        if controller.reset(code):
            return {"type": "ack"}
        if was_collapsed:
            return {"type": "collapsed"}
        return {"type": "nack", "reason": msg.NACK_BAD_AUTH,
                "reason_name": msg.NACK_REASONS[msg.NACK_BAD_AUTH]}

    # -- state ----------------------------------------------------------------------------

    def snapshot_state(self) -> dict:
        self.car.settle()
        return {name: self._device_state(name) for name in ("entry", "automation", "car")}

    def _device_state(self, name: str) -> dict:
        if name == "entry":
            rows = self.entry.lcd.render()
            return {
                "bt_powered": self.entry.bt_module_powered,
                "door_locked": self.entry.door_locked,
                "alarm_on": self.entry.alarm_on,
                "collapsed": self.entry.collapsed,
                "failures": self.entry.monitor.failures,
                "lcd": [rows[0].rstrip(), rows[1].rstrip()],
            }
        if name == "automation":
            return {
                "light1": self.automation.light1,
                "light2": self.automation.light2,
                "fan_on": self.automation.fan_on,
                "fan_level": self.automation.fan_level,
                "ambient_c": self.automation.sensor.ambient_c,
            }
        return {
            "rl1": self.car.rl1_energized,
            "rl2": self.car.rl2_energized,
            "actuator": self.car.actuator,
            "collapsed": self.car.collapsed,
            "failures": self.car.monitor.failures,
        }

    def _emitter(self, name: str):
        def emit(kind: str, **fields) -> None:
            self.event_log.append(name, kind, fields)
        return emit

    def _entry_power_changed(self, powered: bool) -> None:
        rt = self._runtimes["entry"]
        if powered:
            rt.adapter.request_enable()
            return
        rt.adapter.disable()
        # A power-down on the serve thread means a response is in flight:
        # leave the link for the serve loop, which sends the response and
        # then notices the dead adapter.  From any other thread (keypad
        # collapse) the module is gone right now, link included.
        link = rt.current_link
        if threading.current_thread() is not rt.thread and link is not None:
            link.close()

    # -- device serve loops ------------------------------------------------------------------

    def _device_loop(self, rt: _DeviceRuntime) -> None:
        while self._running:
            if not rt.adapter.enabled:
                self._wake.wait(0.02)
                continue
            try:
                server = rt.adapter.listen(rt.uuid)
            except AdapterDisabledError:
                continue
            link = None
            try:
                while self._running and rt.adapter.enabled:
                    try:
                        link = server.accept(timeout=0.1)
                        break
                    except LinkTimeoutError:
                        if rt.name == "car":
                            rt.controller.settle()
                        continue
                    except LinkClosedError:
                        break
            finally:
                server.close()
            if link is None:
                continue
            rt.current_link = link
            try:
                self._serve_link(rt, link)
            finally:
                link.close()
                rt.current_link = None
                self._release_device(rt.name)

    def _serve_link(self, rt: _DeviceRuntime, link) -> None:
        session = LinkSession()
        decoder = FrameDecoder()
        while self._running:
            try:
                data = link.recv(timeout=0.1)
            except LinkTimeoutError:
                if rt.name == "car":
                    rt.controller.settle()
                if not rt.adapter.enabled:  # module powered down, e.g. collapse
                    return
                continue
            except LinkClosedError:
                return
            if data == b"":
                return
            for item in decoder.feed(data):
                if isinstance(item, DecodeError):
                    self.event_log.append(rt.name, "link_decode_error",
                                          {"error": item.kind.name.lower(), "detail": item.detail})
                    continue
                try:
                    message = item.message()
                except MessageError as exc:
                    self.event_log.append(rt.name, "link_decode_error",
                                          {"error": "bad_payload", "detail": str(exc)})
                    reply = msg.Nack(msg.NACK_MALFORMED)
                else:
                    reply = rt.controller.handle_command(message, session)
                try:
                    link.send(encode_frame(reply, rt.controller.device_class))
                except LinkClosedError:
                    return
            if not rt.adapter.enabled:
                return

    # -- JSON plane ops -------------------------------------------------------------------------

    def handle_op(self, session: ClientSession, obj: dict) -> dict:
        try:
            reply = self._handle_op_inner(session, obj)
        except TransportError as exc:
            reply = {"ok": False, "error": "transport", "detail": str(exc)}
        except DecodeSurfaced as exc:
            reply = {"ok": False, "error": "decode",
                     "detail": exc.error.detail, "error_kind": exc.error.kind.name.lower()}
        except (MessageError, ValueError) as exc:
            reply = {"ok": False, "error": "bad_request", "detail": str(exc)}
        if "id" in obj:
            reply["id"] = obj["id"]
        return reply

    def _handle_op_inner(self, session: ClientSession, obj: dict) -> dict:
        op = obj.get("op")
        if op == "login":
            ok = (obj.get("username") == self.config.app_username
                  and self.credentials.verify("app_login", str(obj.get("password", ""))))
            if ok:
                session.logged_in = True
                return {"ok": True, "result": "logged_in"}
            return {"ok": False, "error": "login", "message": LOGIN_FAILED_MESSAGE}
        if op == "attach":
            device = obj.get("device", "")
            result = self.attach(session, device, mac=obj.get("mac"), uuid=obj.get("uuid"))
            if result == ATTACHED:
                return {"ok": True, "result": ATTACHED, "device": device}
            return {"ok": False, "error": result, "device": device}
        if op == "detach":
            self._detach(session, obj.get("device", ""))
            return {"ok": True, "result": "detached"}
        if op == "reset":
            response = self.reset_device(obj.get("device", ""), str(obj.get("code", "")))
            return {"ok": True, "response": response}
        if op == "inject":
            return self._handle_inject(obj)
        if op == "snapshot":
            return {"ok": True, "result": self.snapshot_state()}
        command, device = self._op_command(obj)
        if command is None:
            return {"ok": False, "error": "bad_request", "detail": f"unknown op: {op!r}"}
        response = self.dispatch(session, device, command)
        return {"ok": True, "device": device, "response": response_to_dict(response)}

    def _handle_inject(self, obj: dict) -> dict:
        kind = obj.get("kind")
        if kind == "ambient":
            self.inject_ambient(float(obj["celsius"]))
            return {"ok": True, "result": "injected"}
        if kind == "keypad":
            keys = str(obj.get("keys", ""))
            self.inject_keypad(keys)
            return {"ok": True, "result": "injected"}
        if kind == "reset":
            response = self.reset_device(obj.get("device", ""), str(obj.get("code", "")))
            return {"ok": True, "response": response}
        return {"ok": False, "error": "bad_request", "detail": f"unknown inject kind: {kind!r}"}

    def _op_command(self, obj: dict) -> tuple[msg.Command | None, str]:
        op = obj.get("op")
        if op == "auth":
            return msg.Auth(str(obj.get("password", ""))), obj.get("device", "entry")
        if op == "lock":
            return msg.Lock(), obj.get("device", "entry")
        if op == "unlock":
            return msg.Unlock(), obj.get("device", "entry")
        if op == "light":
            return msg.LightSet(int(obj["light"]), bool(obj["on"])), "automation"
        if op == "fan_set":
            return msg.FanSet(bool(obj["on"])), "automation"
        if op == "fan_step":
            delta = int(obj.get("delta", {"up": 1, "down": -1}.get(obj.get("direction"), 0)))
            return msg.FanStep(delta), "automation"
        if op == "temp":
            return msg.TempQuery(), "automation"
        if op == "status":
            return msg.StatusQuery(), obj.get("device", "automation")
        return None, ""

    # -- network ------------------------------------------------------------------------------------

    def _open_listener(self, port: int, handler) -> tuple[str, int]:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.config.host, port))
        listener.listen(16)
        self._listeners.append(listener)
        thread = threading.Thread(target=self._accept_loop, args=(listener, handler), daemon=True)
        thread.start()
        self._threads.append(thread)
        return listener.getsockname()[:2]

    def _accept_loop(self, listener: socket.socket, handler) -> None:
        while self._running:
            try:
                conn, _ = listener.accept()
            except OSError:
                return
            thread = threading.Thread(target=handler, args=(conn,), daemon=True)
            thread.start()
            self._threads.append(thread)

    def _serve_raw_client(self, conn: socket.socket) -> None:
        session = self.new_session("raw")
        decoder = FrameDecoder()
        try:
            while self._running:
                try:
                    data = conn.recv(4096)
                except OSError:
                    break
                if not data:
                    break
                for item in decoder.feed(data):
                    if isinstance(item, DecodeError):
                        self.event_log.append("gateway", "client_decode_error",
                                              {"error": item.kind.name.lower(), "detail": item.detail})
                        continue
                    reply = self._raw_frame_response(session, item)
                    conn.sendall(reply)
        finally:
            self.close_session(session)
            try:
                conn.close()
            except OSError:
                pass

    def _raw_frame_response(self, session: ClientSession, frame) -> bytes:
        device = CLASS_TO_NAME[msg.DeviceClass(frame.device_class)]
        if device not in session.attachments:
            result = self.attach(session, device)
            if result == BUSY:
                return encode_frame(msg.Nack(msg.NACK_BUSY), frame.device_class)
            if result != ATTACHED:
                return encode_frame(msg.Nack(msg.NACK_UNREACHABLE), frame.device_class)
        try:
            command = frame.message()
        except MessageError:
            return encode_frame(msg.Nack(msg.NACK_MALFORMED), frame.device_class)
        try:
            response = self.dispatch(session, device, command)
        except (TransportError, DecodeSurfaced):
            return encode_frame(msg.Nack(msg.NACK_UNREACHABLE), frame.device_class)
        return encode_frame(response, frame.device_class)

    def _serve_json_client(self, conn: socket.socket) -> None:
        # Sniff the transport: browsers open with an HTTP upgrade right away;
        # a silent client is a newline-JSON event tap, so don't block on it.
        try:
            conn.settimeout(0.25)
            try:
                first = conn.recv(4096)
            except (TimeoutError, socket.timeout):
                first = b""
            finally:
                conn.settimeout(None)
        except OSError:
            return
        if ws.is_http_upgrade(first):
            self._serve_websocket(conn, first)
        else:
            self._serve_ndjson(conn, first)

    def _serve_ndjson(self, conn: socket.socket, first: bytes) -> None:
        session = self.new_session("json")
        write_lock = threading.Lock()

        def send_obj(obj: dict) -> None:
            line = (json.dumps(obj, sort_keys=True) + "\n").encode("utf-8")
            with write_lock:
                conn.sendall(line)

        def on_record(record: dict) -> None:
            try:
                send_obj(broadcast_object(record))
            except OSError:
                pass

        backlog = self.event_log.subscribe(on_record)
        try:
            for record in backlog:
                send_obj(broadcast_object(record))
            buffer = bytearray(first)
            while self._running:
                while b"\n" in buffer:
                    line, _, rest = bytes(buffer).partition(b"\n")
                    buffer = bytearray(rest)
                    if line.strip():
                        send_obj(self._parse_and_handle(session, line))
                data = conn.recv(4096)
                if not data:
                    break
                buffer.extend(data)
        except OSError:
            pass
        finally:
            self.event_log.unsubscribe(on_record)
            self.close_session(session)
            try:
                conn.close()
            except OSError:
                pass

    def _serve_websocket(self, conn: socket.socket, first: bytes) -> None:
        request = bytearray(first)
        while b"\r\n\r\n" not in request:
            data = conn.recv(4096)
            if not data:
                conn.close()
                return
            request.extend(data)
        head, _, leftover = bytes(request).partition(b"\r\n\r\n")
        try:
            conn.sendall(ws.handshake_response(head))
        except ws.WsError:
            conn.close()
            return

        session = self.new_session("websocket")
        write_lock = threading.Lock()

        def send_obj(obj: dict) -> None:
            data = ws.encode_text(json.dumps(obj, sort_keys=True))
            with write_lock:
                conn.sendall(data)

        def on_record(record: dict) -> None:
            try:
                send_obj(broadcast_object(record))
            except OSError:
                pass

        backlog = self.event_log.subscribe(on_record)
        try:
            for record in backlog:
                send_obj(broadcast_object(record))
            buffer = bytearray(leftover)
            while self._running:
                try:
                    frames = ws.decode_frames(buffer)
                except ws.WsError:
                    break
                done = False
                for opcode, payload in frames:
                    if opcode == ws.OP_CLOSE:
                        with write_lock:
                            conn.sendall(ws.encode_close())
                        done = True
                        break
                    if opcode == ws.OP_PING:
                        with write_lock:
                            conn.sendall(ws.encode_pong(payload))
                        continue
                    if opcode == ws.OP_TEXT:
                        send_obj(self._parse_and_handle(session, payload))
                if done:
                    break
                data = conn.recv(4096)
                if not data:
                    break
                buffer.extend(data)
        except OSError:
            pass
        finally:
            self.event_log.unsubscribe(on_record)
            self.close_session(session)
            try:
                conn.close()
            except OSError:
                pass

    def _parse_and_handle(self, session: ClientSession, raw: bytes) -> dict:
        try:
            obj = json.loads(raw.decode("utf-8"))
            if not isinstance(obj, dict):
                raise ValueError("request must be a JSON object")
        except (ValueError, UnicodeDecodeError) as exc:
            return {"ok": False, "error": "parse", "detail": str(exc)}
        return self.handle_op(session, obj)
