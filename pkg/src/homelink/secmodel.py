"""Password checking, lockout tracking, and SMS alerting.

Three pieces the controllers share:

* CredentialStore: salted digests, constant-time compares.
* SecurityMonitor: counts consecutive failures and collapses the
  controller after the limit. Collapse is absorbing and fires the alert
  callback inside the same transition.
* GsmModem + Outbox: a text-mode modem transcript whose delivered
  messages land in an append-only outbox.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .clock import SimClock

FAILURE_LIMIT = 3

# Exact string the phone app shows on a rejected login.
LOGIN_FAILED_MESSAGE = "Invalid User Name or Password"

CTRL_Z = "\x1a"


class ProtocolViolationError(RuntimeError):
    """An operation reached a state machine that can no longer serve it."""


# -- credentials ---------------------------------------------------------------


class CredentialStore:
    """Named passwords stored as salted SHA-256 digests."""

    def __init__(self):
        self._entries: dict[str, tuple[bytes, bytes]] = {}
        # compared against for unknown names so lookups cost the same
        self._decoy = (os.urandom(16), hashlib.sha256(os.urandom(16)).digest())

    def set_password(self, purpose: str, password: str) -> None:
        salt = os.urandom(16)
        self._entries[purpose] = (salt, self._digest(salt, password))

    def verify(self, purpose: str, password: str) -> bool:
        salt, want = self._entries.get(purpose, self._decoy)
        ok = hmac.compare_digest(self._digest(salt, password), want)
        return ok and purpose in self._entries

    def verify_first_match(self, purposes: list[str], password: str) -> str | None:
        """First purpose the password matches; always checks every one."""
        hit = None
        for purpose in purposes:
            if self.verify(purpose, password) and hit is None:
                hit = purpose
        return hit

    def purposes(self) -> list[str]:
        return sorted(self._entries)

    @staticmethod
    def _digest(salt: bytes, password: str) -> bytes:
        return hashlib.sha256(salt + password.encode("utf-8")).digest()


# -- lockout tracking ----------------------------------------------------------


class MonitorState(Enum):
    ACTIVE = "active"
    COLLAPSED = "collapsed"


class Outcome(Enum):
    OK = "ok"
    FAIL = "fail"
    COLLAPSED = "collapsed"


@dataclass(frozen=True)
class AttemptResult:
    outcome: Outcome
    failures: int
    just_collapsed: bool


class SecurityMonitor:
    """Consecutive-failure counter with an absorbing collapsed state.

    The on_collapse callback runs inside the collapsing record() call, so
    whatever it does (alarm, SMS fan-out) is atomic with the transition.
    """

    def __init__(self, limit: int = FAILURE_LIMIT, on_collapse: Callable[[], None] | None = None):
        if limit < 1:
            raise ValueError("limit must be at least 1")
        self.limit = limit
        self.failures = 0
        self.state = MonitorState.ACTIVE
        self._on_collapse = on_collapse

    @property
    def collapsed(self) -> bool:
        return self.state is MonitorState.COLLAPSED

    def record(self, success: bool) -> AttemptResult:
        if self.collapsed:
            raise ProtocolViolationError("attempt recorded after collapse")
        if success:
            self.failures = 0
            return AttemptResult(Outcome.OK, 0, False)
        self.failures += 1
        if self.failures < self.limit:
            return AttemptResult(Outcome.FAIL, self.failures, False)
        self.state = MonitorState.COLLAPSED
        if self._on_collapse is not None:
            self._on_collapse()
        return AttemptResult(Outcome.COLLAPSED, self.failures, True)

    def authorized_reset(self) -> None:
        """Clears the counter and, when collapsed, restores service."""
        self.failures = 0
        self.state = MonitorState.ACTIVE


# -- SMS path ------------------------------------------------------------------


class Outbox:
    """Append-only record of delivered SMS messages."""

    def __init__(self, clock: SimClock | None = None, path: str | None = None,
                 on_deliver: Callable[[dict], None] | None = None):
        self._clock = clock or SimClock()
        self._path = path
        self.on_deliver = on_deliver
        self.messages: list[dict] = []

    def deliver(self, to: str, text: str, device: str | None = None) -> dict:
        record = {
            "seq": len(self.messages),
            "sent_at": self._clock.now_ms(),
            "recipient": to,
            "body": text,
            "device": device,
        }
        self.messages.append(record)
        if self._path:
            with open(self._path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
        if self.on_deliver is not None:
            self.on_deliver(record)
        return record

    def __len__(self) -> int:
        return len(self.messages)


@dataclass
class _ModemCall:
    number: str
    text: str
    delivered: bool


class GsmModem:
    """Text-mode SMS modem. Every exchange lands in .transcript."""

    def __init__(self, outbox: Outbox, transcript_path: str | None = None):
        self.outbox = outbox
        self.transcript: list[str] = []
        self.calls: list[_ModemCall] = []
        self._transcript_path = transcript_path
        self._failures_pending = 0
        self._sent_count = 0

    def inject_failures(self, n: int) -> None:
        """Make the next n send attempts report ERROR."""
        self._failures_pending += n

    def send_sms(self, number: str, text: str, device: str | None = None) -> bool:
        self._exchange('AT+CMGF=1', "OK")
        self._exchange(f'AT+CMGS="{number}"', ">")
        if self._failures_pending > 0:
            self._failures_pending -= 1
            self._exchange(text + CTRL_Z, "ERROR")
            self.calls.append(_ModemCall(number, text, False))
            return False
        self._sent_count += 1
        self._exchange(text + CTRL_Z, f"+CMGS: {self._sent_count}")
        self._append("< OK")
        self.calls.append(_ModemCall(number, text, True))
        self.outbox.deliver(number, text, device=device)
        return True

    def _exchange(self, command: str, reply: str) -> None:
        self._append(f"> {command}")
        self._append(f"< {reply}")

    def _append(self, line: str) -> None:
        self.transcript.append(line)
        if self._transcript_path:
            with open(self._transcript_path, "a", encoding="utf-8") as f:
                f.write(line + "\n")


class CollapseAlerter:
    """Sends the two lockdown texts (owner first, then police).

    Each recipient gets one retry on modem error; a second error is
    recorded as a failed delivery rather than raised, since the collapse
    itself must still complete.
    """

    def __init__(self, modem: GsmModem, owner_number: str, police_number: str):
        if owner_number == police_number:
            raise ValueError("owner and police numbers must differ")
        self.modem = modem
        self.owner_number = owner_number
        self.police_number = police_number
        self.failed_deliveries: list[dict] = []

    @staticmethod
    def message_for(device_name: str) -> str:
        return f"Unauthorized access attempt at {device_name}: 3 wrong passwords. System locked."

    def alert(self, device_name: str) -> int:
        """Returns how many of the two texts were delivered."""
        text = self.message_for(device_name)
        delivered = 0
        for number in (self.owner_number, self.police_number):
            if (self.modem.send_sms(number, text, device=device_name)
                    or self.modem.send_sms(number, text, device=device_name)):
                delivered += 1
            else:
                self.failed_deliveries.append({"to": number, "text": text})
        return delivered
