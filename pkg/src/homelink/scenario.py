"""Scripted end-to-end runs against a fresh in-process gateway.

A scenario is a text file with one JSON object per line (blank lines and
lines starting with ``#`` are skipped):

    {"at": 0, "action": "inject", "args": {"kind": "keypad", "keys": "1234#"}}
    {"at": 500, "action": "command", "args": {"op": "attach", "device": "automation"}}
    {"at": 500, "action": "expect", "args": {"kind": "toast", "count": 1}}

``at`` is simulated milliseconds and must never decrease.  ``inject`` args
take the same shape as the gateway's inject requests, ``command`` args are a
JSON-plane request object, and ``expect`` args are a pattern matched against
the event log: every given key must equal the record's value, with
``payload`` compared key by key so extra payload fields don't break a match.
``count`` inside an expect pattern pins the exact number of matching
records; without it one match suffices.

Each run builds its own gateway on a manual clock with a throwaway data
directory, so transcripts depend only on the scenario file.
"""
from __future__ import annotations

import dataclasses
import json
import os
import shutil
import tempfile
from dataclasses import dataclass
from typing import Callable

from .gateway import Gateway, GatewayConfig, load_config
from .gateway.events import canonical

ACTIONS = ("inject", "command", "expect")

# args keys whose values never belong in a transcript
MASKED_KEYS = ("password", "code")

EXCERPT_LINES = 10


class ScenarioError(Exception):
    """Scenario file rejected; .line is the 1-based offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


@dataclass(frozen=True)
class Step:
    at: int
    action: str
    args: dict
    line: int


def load(path: str) -> list[Step]:
    with open(path, "r", encoding="utf-8") as f:
        return parse(f.read())


def parse(text: str) -> list[Step]:
    steps: list[Step] = []
    last_at = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ScenarioError(line_no, f"bad JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise ScenarioError(line_no, "step must be a JSON object")
        at = obj.get("at")
        if not isinstance(at, int) or isinstance(at, bool) or at < 0:
            raise ScenarioError(line_no, "'at' must be a nonnegative integer of milliseconds")
        if at < last_at:
            raise ScenarioError(line_no, f"'at' went backwards ({at} after {last_at})")
        action = obj.get("action")
        if action not in ACTIONS:
            raise ScenarioError(line_no, f"unknown action {action!r}")
        args = obj.get("args")
        if not isinstance(args, dict):
            raise ScenarioError(line_no, "'args' must be a JSON object")
        extra = set(obj) - {"at", "action", "args"}
        if extra:
            raise ScenarioError(line_no, f"unknown keys: {sorted(extra)}")
        last_at = at
        steps.append(Step(at, action, args, line_no))
    return steps


def _masked(args: dict) -> dict:
    return {k: ("***" if k in MASKED_KEYS else v) for k, v in args.items()}


def _matches(pattern: dict, record: dict) -> bool:
    for key, want in pattern.items():
        if key == "count":
            continue
        if key == "payload":
            got = record.get("payload")
            if not isinstance(got, dict):
                return False
            if any(got.get(k) != v for k, v in want.items()):
                return False
        elif record.get(key) != want:
            return False
    return True


def _summarize_reply(reply: dict) -> str:
    if not reply.get("ok", False):
        detail = reply.get("error", "error")
        return f"error {detail}"
    if "response" in reply:
        response = reply["response"]
        kind = response["type"]
        if kind == "nack":
            return f"nack {response['reason_name']}"
        if kind == "temp_report":
            return f"temp_report {response['temp_c']:.4f} C"
        return kind
    result = reply.get("result", "ok")
    return result if isinstance(result, str) else "ok"


def play(steps: list[Step], write: Callable[[str], None],
         config: GatewayConfig | None = None, name: str = "scenario") -> bool:
    """Run the steps, emitting one transcript line per step via write().

    Returns True when every expect matched.  The transcript carries only
    simulated times and deterministic results, so two runs of the same file
    produce identical output.
    """
    base = config or load_config(None)
    data_dir = tempfile.mkdtemp(prefix="homelink-scn-")
    cfg = dataclasses.replace(base, data_dir=data_dir, realtime=False)
    gateway = Gateway(cfg)
    records: list[dict] = []
    write(f"scenario: {name}")
    try:
        records.extend(gateway.event_log.subscribe(records.append))
        gateway.start(network=False)
        session = gateway.new_session("scenario")
        for step in steps:
            now = gateway.clock.now_ms()
            if step.at > now:
                gateway.advance(step.at - now)
            prefix = f"[t={step.at:>7}ms] {step.action} {canonical(_masked(step.args))}"
            if step.action == "inject":
                gateway.handle_op(session, {"op": "inject", **step.args})
                write(prefix)
            elif step.action == "command":
                reply = gateway.handle_op(session, dict(step.args))
                write(f"{prefix} -> {_summarize_reply(reply)}")
            else:
                hits = sum(1 for record in list(records) if _matches(step.args, record))
                want = step.args.get("count")
                ok = hits == want if want is not None else hits >= 1
                if ok:
                    write(f"{prefix} -> ok ({hits} matched)")
                else:
                    wanted = f"exactly {want}" if want is not None else "at least 1"
                    write(f"{prefix} -> FAIL ({hits} matched, wanted {wanted})")
                    write("log excerpt (most recent records):")
                    for record in list(records)[-EXCERPT_LINES:]:
                        write(f"  | {canonical(record)}")
                    write(f"result: FAIL at line {step.line}")
                    return False
        expects = sum(1 for s in steps if s.action == "expect")
        write(f"result: PASS ({len(steps)} steps, {expects} expects)")
        return True
    finally:
        gateway.stop()
        shutil.rmtree(data_dir, ignore_errors=True)


def play_file(path: str, write: Callable[[str], None],
              config: GatewayConfig | None = None) -> bool:
    return play(load(path), write, config=config, name=os.path.basename(path))
