"""Entry security controller: keypad, LCD, gated Bluetooth power, door bolt.

The Bluetooth module is unpowered until the right password is typed on the
keypad, so the device cannot even be discovered before that. Wrong
submissions, on the keypad or over the wire, share one failure counter;
the third consecutive miss collapses the controller: alarm on, two texts
out, Bluetooth power cut. Only the authorized reset code restores service.
"""

from __future__ import annotations

from typing import Callable

from ..clock import SimClock
from ..secmodel import CollapseAlerter, CredentialStore, SecurityMonitor
from ..wireproto import messages as msg

LCD_COLS = 16
LCD_ROWS = 2

ROW_IDLE = "ENTER PASSWORD"
ROW_WRONG = "WRONG PASSWORD"
ROW_READY = "BT READY"
ROW_LOCKED = "SYSTEM LOCKED"

KEYPAD_KEYS = frozenset("0123456789*#")

PURPOSE_BT_ENABLE = "door_bt_enable"
PURPOSE_DOOR = "door_lock"
PURPOSE_RESET = "reset_code"


class LcdModel:
    """2x16 character display; writes are clipped to the grid."""

    def __init__(self):
        self._rows = [" " * LCD_COLS for _ in range(LCD_ROWS)]

    def write(self, row: int, text: str) -> None:
        if not 0 <= row < LCD_ROWS:
            raise ValueError(f"no LCD row {row}")
        self._rows[row] = text[:LCD_COLS].ljust(LCD_COLS)

    def clear(self) -> None:
        self._rows = [" " * LCD_COLS for _ in range(LCD_ROWS)]

    def render(self) -> tuple[str, str]:
        return tuple(self._rows)


class EntryController:
    name = "entry"
    device_class = msg.DeviceClass.ENTRY

    def __init__(self, credentials: CredentialStore, clock: SimClock,
                 alerter: CollapseAlerter | None = None,
                 emit: Callable | None = None,
                 on_bt_power: Callable[[bool], None] | None = None):
        self._credentials = credentials
        self._clock = clock
        self._alerter = alerter
        self._emit_cb = emit
        self._on_bt_power = on_bt_power
        self.monitor = SecurityMonitor(on_collapse=self._collapse)
        self.lcd = LcdModel()
        self.buffer = ""
        self.bt_module_powered = False
        self.door_locked = True
        self.alarm_on = False
        self.events: list[dict] = []
        # initial screen is part of initial state, not an event
        self.lcd.write(0, ROW_IDLE)

    # -- observable state -----------------------------------------------

    @property
    def collapsed(self) -> bool:
        return self.monitor.collapsed

    @property
    def lock_state_code(self) -> int:
        return 1 if self.door_locked else 0

    # -- keypad ----------------------------------------------------------

    def keypress(self, key: str) -> tuple[str, str]:
        """Feed one key; returns the LCD afterwards.

        Digits append (buffer keeps the 16 newest), '*' clears, '#'
        submits the buffer as the Bluetooth-enable password.
        """
        if key not in KEYPAD_KEYS:
            raise ValueError(f"no such key: {key!r}")
        self._emit("keypad", key=key)
        if self.collapsed:
            return self.lcd.render()
        if key == "*":
            self.buffer = ""
            self._show(ROW_IDLE, "")
        elif key == "#":
            self._submit_keypad()
        else:
            if len(self.buffer) >= msg.PASSWORD_MAX_LEN:
                self.buffer = self.buffer[1:] + key
            else:
                self.buffer += key
            self._show(ROW_IDLE, "*" * len(self.buffer))
        return self.lcd.render()

    def _submit_keypad(self) -> None:
        password, self.buffer = self.buffer, ""
        ok = self._credentials.verify(PURPOSE_BT_ENABLE, password)
        result = self.monitor.record(ok)
        self._emit("auth", via="keypad", ok=ok, failures=self.monitor.failures)
        if ok:
            self._set_bt_power(True)
            self._show(ROW_READY, "")
        elif not result.just_collapsed:
            self._show(ROW_WRONG, "")
        # collapse rendering happens inside _collapse()

    # -- wire commands ---------------------------------------------------

    def handle_command(self, command: msg.Message, session) -> msg.Response:
        if self.collapsed:
            if isinstance(command, msg.ResetAuth):
                return self._handle_reset(command.code)
            return msg.Collapsed()
        if isinstance(command, msg.Auth):
            ok = self._credentials.verify(PURPOSE_DOOR, command.password)
            result = self.monitor.record(ok)
            self._emit("auth", via="wire", ok=ok, failures=self.monitor.failures)
            if ok:
                session.authorized = True
                return msg.Ack()
            if result.just_collapsed:
                return msg.Collapsed()
            return msg.Nack(msg.NACK_BAD_AUTH)
        if isinstance(command, (msg.Lock, msg.Unlock)):
            if not getattr(session, "authorized", False):
                return msg.Nack(msg.NACK_UNAUTHORIZED)
            self.door_locked = isinstance(command, msg.Lock)
            self._emit("door", locked=self.door_locked)
            return msg.Ack()
        if isinstance(command, msg.StatusQuery):
            return msg.StatusReport(False, False, False, 0, self.lock_state_code)
        if isinstance(command, msg.ResetAuth):
            return self._handle_reset(command.code)
        return msg.Nack(msg.NACK_UNSUPPORTED)

    # -- collapse and repair ----------------------------------------------

    def _collapse(self) -> None:
        self.alarm_on = True
        self._emit("alarm", on=True)
        self._set_bt_power(False)
        self._show(ROW_LOCKED, "")
        self._emit("collapse", device=self.name)
        if self._alerter is not None:
            self._alerter.alert("entry door")

    def reset(self, code: str) -> bool:
        """Authorized repair: correct code rearms a collapsed controller."""
        ok = self._credentials.verify(PURPOSE_RESET, code)
        self._emit("reset", ok=ok)
        if not ok:
            return False
        self.monitor.authorized_reset()
        if self.alarm_on:
            self.alarm_on = False
            self._emit("alarm", on=False)
        self.buffer = ""
        self._show(ROW_IDLE, "")
        return True

    def _handle_reset(self, code: str) -> msg.Response:
        was_collapsed = self.collapsed
        if self.reset(code):
            return msg.Ack()
        return msg.Collapsed() if was_collapsed else msg.Nack(msg.NACK_BAD_AUTH)

    # -- internals ---------------------------------------------------------

    def _set_bt_power(self, on: bool) -> None:
        if self.bt_module_powered == on:
            return
        self.bt_module_powered = on
        self._emit("bt_power", on=on)
        if self._on_bt_power is not None:
            self._on_bt_power(on)

    def _show(self, row1: str, row2: str) -> None:
        before = self.lcd.render()
        self.lcd.write(0, row1)
        self.lcd.write(1, row2)
        after = self.lcd.render()
        if after != before:
            self._emit("lcd", row1=after[0].rstrip(), row2=after[1].rstrip())

    def _emit(self, kind: str, **fields) -> None:
        event = {"kind": kind, **fields}
        self.events.append(event)
        if self._emit_cb is not None:
            self._emit_cb(kind, **fields)
