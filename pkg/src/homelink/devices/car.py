"""Car lock controller: two relays driving a solenoid bolt.

One password locks, a different one unlocks. A matching password pulses
the corresponding relay (RL1 to lock, RL2 to unlock) for a fixed duration
while the armature travels; the relays are never energized together.
Wrong passwords feed the same three-strike counter style as the entry
door.
"""

from __future__ import annotations

from typing import Callable

from ..clock import SimClock
from ..secmodel import CollapseAlerter, CredentialStore, SecurityMonitor
from ..wireproto import messages as msg

PURPOSE_LOCK = "car_lock"
PURPOSE_UNLOCK = "car_unlock"
PURPOSE_RESET = "reset_code"

DEFAULT_PULSE_MS = 300

UNLOCKED = "unlocked"
LOCKED = "locked"
MOVING_TO_LOCKED = "moving_to_locked"
MOVING_TO_UNLOCKED = "moving_to_unlocked"

_STATE_CODES = {UNLOCKED: 0, LOCKED: 1, MOVING_TO_LOCKED: 2, MOVING_TO_UNLOCKED: 3}


class CarController:
    name = "car"
    device_class = msg.DeviceClass.CAR

    def __init__(self, credentials: CredentialStore, clock: SimClock,
                 alerter: CollapseAlerter | None = None,
                 pulse_ms: int = DEFAULT_PULSE_MS,
                 emit: Callable | None = None):
        self._credentials = credentials
        self._clock = clock
        self._alerter = alerter
        self.pulse_ms = pulse_ms
        self._emit_cb = emit
        self.monitor = SecurityMonitor(on_collapse=self._collapse)
        self.rl1_energized = False
        self.rl2_energized = False
        self.actuator = LOCKED
        self._pulse_ends_at: int | None = None
        self._pulse_target: str | None = None
        self.events: list[dict] = []

    # -- observable state ----------------------------------------------------

    @property
    def collapsed(self) -> bool:
        return self.monitor.collapsed

    @property
    def pulse_active(self) -> bool:
        return self._pulse_ends_at is not None

    @property
    def lock_state_code(self) -> int:
        return _STATE_CODES[self.actuator]

    # -- time ------------------------------------------------------------------

    def settle(self) -> None:
        """Finish the relay pulse once its duration has elapsed."""
        if self._pulse_ends_at is None or self._clock.now_ms() < self._pulse_ends_at:
            return
        self.rl1_energized = False
        self.rl2_energized = False
        self.actuator = self._pulse_target
        self._pulse_ends_at = None
        self._pulse_target = None
        self._emit("relay", rl1=False, rl2=False)
        self._emit("actuator", state=self.actuator)

    # -- wire commands -----------------------------------------------------------

    def handle_command(self, command: msg.Message, session) -> msg.Response:
        self.settle()
        if self.collapsed:
            if isinstance(command, msg.ResetAuth):
                return self._handle_reset(command.code)
            return msg.Collapsed()
        if self.pulse_active:
            return msg.Nack(msg.NACK_BUSY)
        if isinstance(command, msg.Auth):
            return self._handle_auth(command.password)
        if isinstance(command, msg.StatusQuery):
            return msg.StatusReport(False, False, False, 0, self.lock_state_code)
        if isinstance(command, msg.ResetAuth):
            return self._handle_reset(command.code)
        # lock and unlock happen via passwords on this device
        return msg.Nack(msg.NACK_UNSUPPORTED)

    def _handle_auth(self, password: str) -> msg.Response:
        purpose = self._credentials.verify_first_match([PURPOSE_LOCK, PURPOSE_UNLOCK], password)
        result = self.monitor.record(purpose is not None)
        self._emit("auth", ok=purpose is not None, failures=self.monitor.failures)
        if purpose is None:
            if result.just_collapsed:
                return msg.Collapsed()
            return msg.Nack(msg.NACK_BAD_AUTH)
        if purpose == PURPOSE_LOCK:
            self._start_pulse(rl1=True, moving=MOVING_TO_LOCKED, target=LOCKED)
        else:
            self._start_pulse(rl1=False, moving=MOVING_TO_UNLOCKED, target=UNLOCKED)
        return msg.Ack()

    def _start_pulse(self, rl1: bool, moving: str, target: str) -> None:
        self.rl1_energized = rl1
        self.rl2_energized = not rl1
        self.actuator = moving
        self._pulse_ends_at = self._clock.now_ms() + self.pulse_ms
        self._pulse_target = target
        self._emit("relay", rl1=self.rl1_energized, rl2=self.rl2_energized)
        self._emit("actuator", state=self.actuator)

    # -- collapse and repair --------------------------------------------------------

    def _collapse(self) -> None:
        self._emit("collapse", device=self.name)
        if self._alerter is not None:
            self._alerter.alert("car lock")

    def reset(self, code: str) -> bool:
        ok = self._credentials.verify(PURPOSE_RESET, code)
        self._emit("reset", ok=ok)
        if ok:
            self.monitor.authorized_reset()
        return ok

    def _handle_reset(self, code: str) -> msg.Response:
        was_collapsed = self.collapsed
        if self.reset(code):
            return msg.Ack()
        return msg.Collapsed() if was_collapsed else msg.Nack(msg.NACK_BAD_AUTH)

    # -- internals --------------------------------------------------------------------

    def _emit(self, kind: str, **fields) -> None:
        event = {"kind": kind, **fields}
        self.events.append(event)
        if self._emit_cb is not None:
            self._emit_cb(kind, **fields)
