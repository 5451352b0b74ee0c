"""Typed command and response messages carried inside wire frames.

Opcode map (one opcode per variant, disjoint command/response ranges):

    0x10 Auth(password)        0x80 Ack
    0x11 Lock                  0x81 Nack(reason)
    0x12 Unlock                0x82 Collapsed
    0x20 LightSet(id, on)      0x90 TempReport(raw int16, 1/16 degC, BE)
    0x21 FanSet(on)            0x91 StatusReport(flags, fan_level, lock)
    0x22 FanStep(delta)
    0x30 TempQuery
    0x31 StatusQuery
    0x40 ResetAuth(code)

Payload layouts are fixed-size except Auth/ResetAuth, which carry the raw
password bytes (printable ASCII, at most 16). StatusReport packs three
bytes: a bitfield (bit0 light1, bit1 light2, bit2 fan on), the fan level,
and a lock-state byte (see LOCK_STATES).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum


class DeviceClass(IntEnum):
    ENTRY = 0x01
    AUTOMATION = 0x02
    CAR = 0x03


PASSWORD_MAX_LEN = 16

# Nack reason codes
NACK_BAD_AUTH = 0x01
NACK_UNAUTHORIZED = 0x02
NACK_BAD_ARG = 0x03
NACK_FAN_OFF = 0x04
NACK_BUSY = 0x05
NACK_UNSUPPORTED = 0x06
NACK_MALFORMED = 0x07
NACK_UNREACHABLE = 0x08

NACK_REASONS = {
    NACK_BAD_AUTH: "bad-auth",
    NACK_UNAUTHORIZED: "unauthorized",
    NACK_BAD_ARG: "bad-arg",
    NACK_FAN_OFF: "fan-off",
    NACK_BUSY: "busy",
    NACK_UNSUPPORTED: "unsupported",
    NACK_MALFORMED: "malformed",
    NACK_UNREACHABLE: "unreachable",
}

# StatusReport lock-state byte
LOCK_STATES = {
    0: "unlocked",
    1: "locked",
    2: "moving_to_locked",
    3: "moving_to_unlocked",
}


class MessageError(ValueError):
    """Payload does not match the opcode's declared layout."""


def _check_password(text: str, what: str) -> bytes:
    raw = text.encode("ascii", errors="strict") if text.isascii() else None
    if raw is None or any(b < 0x20 or b > 0x7E for b in raw):
        raise MessageError(f"{what} must be printable ASCII")
    if len(raw) > PASSWORD_MAX_LEN:
        raise MessageError(f"{what} exceeds {PASSWORD_MAX_LEN} bytes")
    return raw


# -- Commands -----------------------------------------------------------------


@dataclass(frozen=True)
class Auth:
    password: str
    opcode = 0x10


@dataclass(frozen=True)
class Lock:
    opcode = 0x11


@dataclass(frozen=True)
class Unlock:
    opcode = 0x12


@dataclass(frozen=True)
class LightSet:
    # valid ids are 1|2; out-of-range ids are representable so a device
    # can answer them with Nack(bad-arg) instead of failing at decode
    light_id: int
    on: bool
    opcode = 0x20


@dataclass(frozen=True)
class FanSet:
    on: bool
    opcode = 0x21


@dataclass(frozen=True)
class FanStep:
    delta: int  # +1 or -1
    opcode = 0x22


@dataclass(frozen=True)
class TempQuery:
    opcode = 0x30


@dataclass(frozen=True)
class StatusQuery:
    opcode = 0x31


@dataclass(frozen=True)
class ResetAuth:
    code: str
    opcode = 0x40


# -- Responses ----------------------------------------------------------------


@dataclass(frozen=True)
class Ack:
    opcode = 0x80


@dataclass(frozen=True)
class Nack:
    reason: int
    opcode = 0x81

    @property
    def reason_name(self) -> str:
        return NACK_REASONS.get(self.reason, f"0x{self.reason:02X}")


@dataclass(frozen=True)
class Collapsed:
    opcode = 0x82


@dataclass(frozen=True)
class TempReport:
    raw: int  # signed 16-bit register, units of 1/16 degC

    opcode = 0x90

    @property
    def celsius(self) -> float:
        return self.raw * 0.0625


@dataclass(frozen=True)
class StatusReport:
    light1: bool
    light2: bool
    fan_on: bool
    fan_level: int
    lock_state: int
    opcode = 0x91

    @property
    def flags(self) -> int:
        return (1 if self.light1 else 0) | (2 if self.light2 else 0) | (4 if self.fan_on else 0)

    @property
    def lock_state_name(self) -> str:
        return LOCK_STATES.get(self.lock_state, f"0x{self.lock_state:02X}")


Command = Auth | Lock | Unlock | LightSet | FanSet | FanStep | TempQuery | StatusQuery | ResetAuth
Response = Ack | Nack | Collapsed | TempReport | StatusReport
Message = Command | Response

COMMAND_TYPES = (Auth, Lock, Unlock, LightSet, FanSet, FanStep, TempQuery, StatusQuery, ResetAuth)
RESPONSE_TYPES = (Ack, Nack, Collapsed, TempReport, StatusReport)

_BY_OPCODE = {cls.opcode: cls for cls in COMMAND_TYPES + RESPONSE_TYPES}


# -- Payload codec ------------------------------------------------------------


def pack_payload(msg: Message) -> bytes:
    """Serialize a message's fields into its frame payload."""
    if isinstance(msg, (Auth, ResetAuth)):
        text = msg.password if isinstance(msg, Auth) else msg.code
        return _check_password(text, type(msg).__name__ + " payload")
    if isinstance(msg, LightSet):
        return bytes([msg.light_id & 0xFF, 1 if msg.on else 0])
    if isinstance(msg, FanSet):
        return bytes([1 if msg.on else 0])
    if isinstance(msg, FanStep):
        if msg.delta not in (1, -1):
            raise MessageError("FanStep delta must be +1 or -1")
        return b"\x01" if msg.delta == 1 else b"\xff"
    if isinstance(msg, Nack):
        return bytes([msg.reason & 0xFF])
    if isinstance(msg, TempReport):
        return struct.pack(">h", msg.raw)
    if isinstance(msg, StatusReport):
        flags = (1 if msg.light1 else 0) | (2 if msg.light2 else 0) | (4 if msg.fan_on else 0)
        return bytes([flags, msg.fan_level, msg.lock_state])
    if isinstance(msg, (Lock, Unlock, TempQuery, StatusQuery, Ack, Collapsed)):
        return b""
    raise MessageError(f"unknown message type {type(msg).__name__}")


def unpack_message(opcode: int, payload: bytes) -> Message:
    """Reconstruct the typed message for an opcode/payload pair.

    Strict about layout: unknown opcodes, wrong payload lengths, and
    out-of-alphabet bytes all raise MessageError. Semantic range checks
    that a device must answer on the wire (light id 1|2) are NOT enforced
    here.
    """
    cls = _BY_OPCODE.get(opcode)
    if cls is None:
        raise MessageError(f"unknown opcode 0x{opcode:02X}")

    if cls in (Auth, ResetAuth):
        if len(payload) > PASSWORD_MAX_LEN:
            raise MessageError("password payload exceeds 16 bytes")
        if any(b < 0x20 or b > 0x7E for b in payload):
            raise MessageError("password payload must be printable ASCII")
        text = payload.decode("ascii")
        return Auth(text) if cls is Auth else ResetAuth(text)

    if cls is LightSet:
        if len(payload) != 2 or payload[1] not in (0, 1):
            raise MessageError("LightSet payload must be [id, 0|1]")
        return LightSet(payload[0], payload[1] == 1)
    if cls is FanSet:
        if len(payload) != 1 or payload[0] not in (0, 1):
            raise MessageError("FanSet payload must be one 0|1 byte")
        return FanSet(payload[0] == 1)
    if cls is FanStep:
        if len(payload) != 1 or payload[0] not in (0x01, 0xFF):
            raise MessageError("FanStep payload must be 0x01 or 0xFF")
        return FanStep(1 if payload[0] == 0x01 else -1)
    if cls is Nack:
        if len(payload) != 1:
            raise MessageError("Nack payload must be one reason byte")
        return Nack(payload[0])
    if cls is TempReport:
        if len(payload) != 2:
            raise MessageError("TempReport payload must be 2 bytes")
        return TempReport(struct.unpack(">h", payload)[0])
    if cls is StatusReport:
        if len(payload) != 3 or payload[0] > 7 or payload[1] > 5 or payload[2] > 3:
            raise MessageError("StatusReport payload must be [flags<=7, level<=5, lock<=3]")
        flags = payload[0]
        return StatusReport(bool(flags & 1), bool(flags & 2), bool(flags & 4), payload[1], payload[2])

    # remaining variants carry no payload
    if payload:
        raise MessageError(f"{cls.__name__} carries no payload")
    return cls()
