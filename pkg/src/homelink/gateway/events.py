"""Append-only event log with gapless sequence numbers and replay.

Every record carries sim time only, so a scripted run writes a
byte-identical log every time. The log opens with one init record per
device holding its full state; replaying init + the state changes that
follow reconstructs current device state without consulting the live
objects (the crash-recovery story).
"""

from __future__ import annotations

import json
import threading
from typing import Callable

from ..clock import SimClock


def canonical(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class EventLog:
    def __init__(self, clock: SimClock, path: str | None = None):
        self._clock = clock
        self._path = path
        self._file = open(path, "a", encoding="utf-8") if path else None
        self._lock = threading.RLock()
        self.records: list[dict] = []
        self._subscribers: list[Callable[[dict], None]] = []

    def append(self, device: str, kind: str, payload: dict | None = None) -> dict:
        with self._lock:
            record = {
                "seq": len(self.records),
                "t_ms": self._clock.now_ms(),
                "device": device,
                "kind": kind,
                "payload": payload or {},
            }
            self.records.append(record)
            if self._file is not None:
                self._file.write(canonical(record) + "\n")
                self._file.flush()
            for subscriber in list(self._subscribers):
                subscriber(record)
        return record

    def subscribe(self, callback: Callable[[dict], None]) -> list[dict]:
        """Register for future records; returns the backlog atomically."""
        with self._lock:
            self._subscribers.append(callback)
            return list(self.records)

    def unsubscribe(self, callback: Callable[[dict], None]) -> None:
        with self._lock:
            if callback in self._subscribers:
                self._subscribers.remove(callback)

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    @staticmethod
    def read_file(path: str) -> list[dict]:
        with open(path, encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]


# -- replay ---------------------------------------------------------------------

_ENTRY_FOLD = {
    "bt_power": lambda s, p: s.__setitem__("bt_powered", p["on"]),
    "door": lambda s, p: s.__setitem__("door_locked", p["locked"]),
    "lcd": lambda s, p: s.__setitem__("lcd", [p["row1"], p["row2"]]),
}

_AUTOMATION_FOLD = {
    "light": lambda s, p: s.__setitem__(f"light{p['light_id']}", p["on"]),
    "ambient": lambda s, p: s.__setitem__("ambient_c", p["celsius"]),
}

_CAR_FOLD = {
    "actuator": lambda s, p: s.__setitem__("actuator", p["state"]),
}


def _fold_common(state: dict, kind: str, payload: dict) -> bool:
    """State transitions shared by the two password-guarded devices."""
    if kind == "alarm":
        state["alarm_on"] = payload["on"]
    elif kind == "collapse":
        state["collapsed"] = True
    elif kind == "auth":
        state["failures"] = payload["failures"]
    elif kind == "reset" and payload["ok"]:
        state["collapsed"] = False
        state["failures"] = 0
    else:
        return False
    return True


def replay(records: list[dict]) -> dict[str, dict]:
    """Fold the log into per-device state dicts, init records first."""
    states: dict[str, dict] = {}
    for record in records:
        device, kind, payload = record["device"], record["kind"], record["payload"]
        if kind == "init":
            states[device] = json.loads(json.dumps(payload))  # deep copy
            continue
        state = states.get(device)
        if state is None:
            continue
        if _fold_common(state, kind, payload):
            continue
        if kind == "relay":
            state["rl1"], state["rl2"] = payload["rl1"], payload["rl2"]
        elif kind == "fan":
            state["fan_on"], state["fan_level"] = payload["on"], payload["level"]
        else:
            table = {"entry": _ENTRY_FOLD, "automation": _AUTOMATION_FOLD, "car": _CAR_FOLD}.get(device, {})
            apply = table.get(kind)
            if apply is not None:
                apply(state, payload)
    return states
