"""Operator command line: run the gateway, drive devices, play scenarios.

Device commands talk to a running gateway over its newline-JSON port
(HOMELINK_ADDR or --addr, default 127.0.0.1:7071) and exit 0 on Ack, 2 on
Nack, 3 on Collapsed, 4 when the gateway or device cannot be reached.
Usage mistakes exit 64, scenario file problems 65.
"""
from __future__ import annotations

import argparse
import json
import os
import socket
import sys
import time

from . import scenario as scenario_mod
from .gateway import ConfigError, Gateway, load_config

ADDR_ENV = "HOMELINK_ADDR"
DEFAULT_ADDR = "127.0.0.1:7071"

EXIT_OK = 0
EXIT_NACK = 2
EXIT_COLLAPSED = 3
EXIT_TRANSPORT = 4
EXIT_USAGE = 64
EXIT_SCENARIO = 65

# "door" is how operators talk about the entry unit
DEVICE_ALIASES = {"door": "entry", "entry": "entry",
                  "automation": "automation", "car": "car"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class GatewayClient:
    """One request/reply connection to the gateway's newline-JSON port.

    Event lines that arrive while waiting for a reply are collected and
    handed back with it, since a command's toasts are broadcast before its
    reply line is written.
    """

    def __init__(self, addr: tuple[str, int], timeout: float = 10.0):
        self.sock = socket.create_connection(addr, timeout=timeout)
        self.buf = b""
        self._next_id = 1

    def close(self) -> None:
        self.sock.close()

    def request(self, obj: dict) -> tuple[dict, list[dict]]:
        rid = self._next_id
        self._next_id += 1
        payload = dict(obj)
        payload["id"] = rid
        self.sock.sendall((json.dumps(payload) + "\n").encode())
        events: list[dict] = []
        while True:
            line = self._read_line()
            if "event" in line:
                events.append(line)
                continue
            if line.get("id") == rid:
                return line, events

    def barrier(self) -> None:
        """Consume the connect-time event backlog (and a snapshot reply)."""
        self.request({"op": "snapshot"})

    def _read_line(self) -> dict:
        while b"\n" not in self.buf:
            data = self.sock.recv(4096)
            if not data:
                raise ConnectionError("gateway closed the connection")
            self.buf += data
        raw, _, self.buf = self.buf.partition(b"\n")
        return json.loads(raw)


def _gateway_addr(args) -> tuple[str, int]:
    text = args.addr or os.environ.get(ADDR_ENV) or DEFAULT_ADDR
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bad gateway address {text!r}, want host:port")
    return host, int(port)


def _connect(args) -> GatewayClient:
    host, port = _gateway_addr(args)
    try:
        client = GatewayClient((host, port))
    except OSError as exc:
        raise ConnectionError(f"cannot reach gateway at {host}:{port}: {exc}") from exc
    client.barrier()
    return client


def _attach(client: GatewayClient, device: str) -> int | None:
    """Attach to a device; None means attached, else the exit code."""
    reply, _ = client.request({"op": "attach", "device": device})
    if reply.get("ok"):
        return None
    result = reply.get("error", "unreachable")
    print(result)
    return EXIT_NACK if result == "busy" else EXIT_TRANSPORT


def _report(reply: dict, events: list[dict]) -> int:
    toasts = [ev["text"] for ev in events if ev.get("event") == "toast"]
    for text in toasts:
        print(text)
    if not reply.get("ok"):
        error = reply.get("error", "error")
        print(f"ERROR {error}" + (f": {reply['detail']}" if "detail" in reply else ""))
        return EXIT_TRANSPORT if error in ("transport", "decode") else EXIT_NACK
    response = reply.get("response")
    if response is None:
        result = reply.get("result", "ok")
        if isinstance(result, str):
            print(result)
        return EXIT_OK
    kind = response["type"]
    if kind == "nack":
        print(f"NACK {response['reason_name']}")
        return EXIT_NACK
    if kind == "collapsed":
        print("COLLAPSED")
        return EXIT_COLLAPSED
    if kind == "temp_report":
        print(f"{response['temp_c']:.4f} C")
        return EXIT_OK
    if not toasts:
        print("OK")
    return EXIT_OK


def _run_device_command(args, device: str, op: dict) -> int:
    try:
        client = _connect(args)
    except (ValueError, ConnectionError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_TRANSPORT
    try:
        failure = _attach(client, device)
        if failure is not None:
            return failure
        reply, events = client.request(op)
        return _report(reply, events)
    except (ConnectionError, OSError, json.JSONDecodeError) as exc:
        print(f"gateway connection failed: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    finally:
        client.close()


def _run_plain_op(args, op: dict) -> int:
    try:
        client = _connect(args)
    except (ValueError, ConnectionError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_TRANSPORT
    try:
        reply, events = client.request(op)
        return _report(reply, events)
    except (ConnectionError, OSError, json.JSONDecodeError) as exc:
        print(f"gateway connection failed: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    finally:
        client.close()


# -- subcommand handlers ------------------------------------------------------


def _cmd_gateway_run(args) -> int:
    try:
        config = load_config(args.config)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    gateway = Gateway(config)
    gateway.start(network=True)
    print(f"raw frames: {gateway.raw_addr[0]}:{gateway.raw_addr[1]}")
    print(f"json plane: {gateway.json_addr[0]}:{gateway.json_addr[1]}")
    print(f"data dir: {config.data_dir}", flush=True)
    try:
        if args.for_ms is not None:
            time.sleep(args.for_ms / 1000.0)
        else:
            while True:
                time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        gateway.stop()
        print("stopped")
    return EXIT_OK


def _cmd_attach(args) -> int:
    device = DEVICE_ALIASES[args.device]
    try:
        client = _connect(args)
    except (ValueError, ConnectionError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_TRANSPORT
    try:
        failure = _attach(client, device)
        if failure is not None:
            return failure
        print(f"attached {device}")
        return EXIT_OK
    finally:
        client.close()


def _cmd_auth(args) -> int:
    device = DEVICE_ALIASES[args.device]
    return _run_device_command(args, device,
                               {"op": "auth", "device": device, "password": args.password})


def _cmd_light(args) -> int:
    return _run_device_command(args, "automation",
                               {"op": "light", "light": args.light, "on": args.state == "on"})


def _cmd_fan(args) -> int:
    if args.action in ("on", "off"):
        op = {"op": "fan_set", "on": args.action == "on"}
    else:
        op = {"op": "fan_step", "direction": args.action}
    return _run_device_command(args, "automation", op)


def _cmd_temp(args) -> int:
    return _run_device_command(args, "automation", {"op": "temp"})


def _cmd_car(args) -> int:
    # the passwords decide between lock and unlock on the device itself;
    # the verb here is the operator's intent
    return _run_device_command(args, "car",
                               {"op": "auth", "device": "car", "password": args.password})


def _cmd_reset(args) -> int:
    device = DEVICE_ALIASES[args.device]
    return _run_plain_op(args, {"op": "reset", "device": device, "code": args.code})


def _cmd_inject_ambient(args) -> int:
    return _run_plain_op(args, {"op": "inject", "kind": "ambient", "celsius": args.celsius})


def _cmd_inject_keypad(args) -> int:
    return _run_plain_op(args, {"op": "inject", "kind": "keypad", "keys": args.keys})


def _cmd_scenario_play(args) -> int:
    try:
        steps = scenario_mod.load(args.file)
    except OSError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except scenario_mod.ScenarioError as exc:
        print(f"scenario parse error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        config = load_config(args.config) if args.config else None
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    ok = scenario_mod.play(steps, print, config=config,
                           name=os.path.basename(args.file))
    return EXIT_OK if ok else 1


# -- parser --------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="homelink",
                     description="Control a simulated home and car over a gateway.")
    parser.add_argument("--addr", help=f"gateway json address host:port (or ${ADDR_ENV})")
    groups = parser.add_subparsers(dest="group", required=True)

    p_gateway = groups.add_parser("gateway", help="gateway service")
    gw_cmds = p_gateway.add_subparsers(dest="cmd", required=True)
    p_run = gw_cmds.add_parser("run", help="start the gateway and serve until interrupted")
    p_run.add_argument("--config", help="path to a JSON config file")
    p_run.add_argument("--for-ms", type=int, default=None,
                       help="serve for this many milliseconds, then exit (for demos and tests)")
    p_run.set_defaults(func=_cmd_gateway_run)

    p_ctl = groups.add_parser("ctl", help="issue one device command")
    ctl = p_ctl.add_subparsers(dest="cmd", required=True)

    p = ctl.add_parser("attach", help="probe a device's radio link")
    p.add_argument("device", choices=sorted(DEVICE_ALIASES))
    p.set_defaults(func=_cmd_attach)

    p = ctl.add_parser("auth", help="send a password to a device")
    p.add_argument("device", choices=sorted(DEVICE_ALIASES))
    p.add_argument("--password", required=True)
    p.set_defaults(func=_cmd_auth)

    p = ctl.add_parser("light", help="switch a room light")
    p.add_argument("light", type=int, choices=(1, 2))
    p.add_argument("state", choices=("on", "off"))
    p.set_defaults(func=_cmd_light)

    p = ctl.add_parser("fan", help="switch the fan or step its speed")
    p.add_argument("action", choices=("on", "off", "up", "down"))
    p.set_defaults(func=_cmd_fan)

    p = ctl.add_parser("temp", help="read the room temperature")
    p.set_defaults(func=_cmd_temp)

    p = ctl.add_parser("car", help="send the car lock or unlock password")
    p.add_argument("action", choices=("lock", "unlock"))
    p.add_argument("--password", required=True)
    p.set_defaults(func=_cmd_car)

    p = ctl.add_parser("reset", help="clear a lockdown with the reset code")
    p.add_argument("device", choices=sorted(DEVICE_ALIASES))
    p.add_argument("--code", required=True)
    p.set_defaults(func=_cmd_reset)

    p_inject = groups.add_parser("inject", help="simulate physical-world input")
    inject = p_inject.add_subparsers(dest="cmd", required=True)

    p = inject.add_parser("ambient", help="set the true room temperature")
    p.add_argument("celsius", type=float)
    p.set_defaults(func=_cmd_inject_ambient)

    p = inject.add_parser("keypad", help="press keys on the door keypad")
    p.add_argument("keys")
    p.set_defaults(func=_cmd_inject_keypad)

    p_scenario = groups.add_parser("scenario", help="scripted end-to-end runs")
    scen = p_scenario.add_subparsers(dest="cmd", required=True)

    p = scen.add_parser("play", help="run a scenario file and print its transcript")
    p.add_argument("file")
    p.add_argument("--config", help="path to a JSON config file")
    p.set_defaults(func=_cmd_scenario_play)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
