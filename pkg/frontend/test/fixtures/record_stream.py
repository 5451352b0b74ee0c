"""Capture a real gateway session for the console tests.

Run from the repo root with the package installed:

    python3 frontend/test/fixtures/record_stream.py

One silent tap connection records the event stream while a commander
connection logs in (one wrong attempt first), attaches the automation
device and tours its panel.  Output, saved verbatim:

    recorded-events.jsonl        every event line the tap received
    recorded-login-failure.json  the gateway's reply to the bad login
"""

import json
import socket
import tempfile
from pathlib import Path

from homelink.gateway.config import GatewayConfig
from homelink.gateway.service import Gateway

HERE = Path(__file__).resolve().parent


class Commander:
    def __init__(self, host, port):
        self.sock = socket.create_connection((host, port))
        self.file = self.sock.makefile("rw", encoding="utf-8", newline="\n")
        self.next_id = 1

    def request(self, op):
        obj = {**op, "id": self.next_id}
        self.next_id += 1
        self.file.write(json.dumps(obj) + "\n")
        self.file.flush()
        while True:
            line = self.file.readline()
            if not line:
                raise RuntimeError("commander connection closed")
            reply = json.loads(line)
            if reply.get("id") == obj["id"]:
                return reply, line.rstrip("\n")

    def close(self):
        self.sock.close()


def main():
    config = GatewayConfig.from_dict({
        "data_dir": tempfile.mkdtemp(prefix="homelink-rec-"),
        "realtime": False,
        "raw_port": 0,
        "json_port": 0,
    })
    gateway = Gateway(config)
    gateway.start(network=True)
    try:
        host, port = gateway.json_addr
        tap = socket.create_connection((host, port))
        tap.settimeout(2.0)
        tap_file = tap.makefile("r", encoding="utf-8")
        commander = Commander(host, port)

        reply, failure_line = commander.request(
            {"op": "login", "username": "admin", "password": "wrong"})
        assert not reply["ok"], reply
        reply, _ = commander.request(
            {"op": "login", "username": "admin", "password": "admin123"})
        assert reply["ok"], reply

        for op in [
            {"op": "attach", "device": "automation"},
            {"op": "light", "light": 1, "on": True},
            {"op": "light", "light": 2, "on": True},
            {"op": "fan_set", "on": True},
            {"op": "fan_step", "direction": "up"},
            {"op": "fan_step", "direction": "down"},
            {"op": "inject", "kind": "ambient", "celsius": 25.03},
            {"op": "temp"},
        ]:
            reply, _ = commander.request(op)
            assert reply["ok"], (op, reply)

        lines = []
        saw_temp_read = False
        while not saw_temp_read:
            line = tap_file.readline()
            if not line:
                raise RuntimeError("tap connection closed early")
            lines.append(line.rstrip("\n"))
            saw_temp_read = json.loads(line).get("kind") == "temp_read"

        (HERE / "recorded-events.jsonl").write_text("\n".join(lines) + "\n")
        (HERE / "recorded-login-failure.json").write_text(failure_line + "\n")
        print(f"recorded {len(lines)} event lines")
        commander.close()
        tap.close()
    finally:
        gateway.stop()


if __name__ == "__main__":
    main()
