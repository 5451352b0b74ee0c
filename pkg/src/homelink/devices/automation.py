"""Room automation controller: two lights, a phase-cut fan, a temp sensor.

Fan speed is set by delaying the triac firing angle after each mains zero
crossing. Level 5 fires at the crossing itself (full conduction), level 0
delays a whole half-cycle (no conduction); levels map linearly in between.
Temperature reads quantize the ambient truth to the sensor's 1/16 degree
grid with floor semantics, exactly like the real part's register.
"""

from __future__ import annotations

import math
from typing import Callable

from ..clock import SimClock
from ..wireproto import messages as msg

FAN_LEVEL_MAX = 5
MAINS_FREQ_HZ = 50.0

TEMP_STEP_C = 0.0625  # one register count
TEMP_MIN_C = -55.0
TEMP_MAX_C = 125.0

FLAG_LIGHT1 = 0x01
FLAG_LIGHT2 = 0x02
FLAG_FAN_ON = 0x04


def fan_level_to_angle(level: int) -> float:
    """Firing angle in radians for a fan level; level 5 is full power."""
    if not 0 <= level <= FAN_LEVEL_MAX:
        raise ValueError(f"fan level out of range: {level}")
    return math.pi * (1.0 - level / FAN_LEVEL_MAX)

def dimmer_power_fraction(alpha: float) -> float:
    """Fraction of full RMS power delivered when firing at angle alpha.

    Mean of sin^2 over the conduction interval [alpha, pi], normalized to
    the full half-cycle: 1 - alpha/pi + sin(2*alpha)/(2*pi).
    """
    if not 0.0 <= alpha <= math.pi:
        raise ValueError(f"firing angle out of range: {alpha}")
    frac = 1.0 - alpha / math.pi + math.sin(2.0 * alpha) / (2.0 * math.pi)
    # sin(2*pi) lands a hair below zero in floats; no conduction is exactly 0
    return 0.0 if frac < 0.0 else frac

def zero_crossing_schedule(mains_freq: float, alpha: float, n_half_cycles: int) -> list[float]:
    """Triac firing times in seconds for the next n half-cycles.

    Zero crossings happen every 1/(2f); each firing trails its crossing
    by alpha/(2*pi*f).
    """
    if mains_freq <= 0:
        raise ValueError("mains frequency must be positive")
    half_period = 1.0 / (2.0 * mains_freq)
    delay = alpha / (2.0 * math.pi * mains_freq)
    return [k * half_period + delay for k in range(n_half_cycles)]


class TempSensor:
    """1/16-degree digital thermometer over an ambient truth value."""

    def __init__(self, ambient_c: float = 25.0, convert_ms: int = 0):
        self.ambient_c = float(ambient_c)
        self.convert_ms = convert_ms

    def set_ambient(self, celsius: float) -> None:
        self.ambient_c = float(celsius)

    def read(self) -> tuple[int, bool]:
        """(register counts, clamped?) - floor of ambient in 1/16 degree units."""
        clamped = min(max(self.ambient_c, TEMP_MIN_C), TEMP_MAX_C)
        return math.floor(clamped / TEMP_STEP_C), clamped != self.ambient_c


class AutomationController:
    name = "automation"
    device_class = msg.DeviceClass.AUTOMATION

    def __init__(self, clock: SimClock, sensor: TempSensor | None = None,
                 mains_freq: float = MAINS_FREQ_HZ, emit: Callable | None = None):
        self._clock = clock
        self.sensor = sensor or TempSensor()
        self.mains_freq = mains_freq
        self._emit_cb = emit
        self.light1 = False
        self.light2 = False
        self.fan_on = False
        self.fan_level = 0
        self.events: list[dict] = []

    # -- observable state --------------------------------------------------

    @property
    def firing_angle(self) -> float:
        return fan_level_to_angle(self.fan_level)

    @property
    def delivered_power(self) -> float:
        """Fraction of full fan power actually delivered right now."""
        if not self.fan_on:
            return 0.0
        return dimmer_power_fraction(self.firing_angle)

    @property
    def status_flags(self) -> int:
        return ((FLAG_LIGHT1 if self.light1 else 0)
                | (FLAG_LIGHT2 if self.light2 else 0)
                | (FLAG_FAN_ON if self.fan_on else 0))

    # -- wire commands ------------------------------------------------------

    def handle_command(self, command: msg.Message, session) -> msg.Response:
        if isinstance(command, msg.LightSet):
            if command.light_id not in (1, 2):
                return msg.Nack(msg.NACK_BAD_ARG)
            if command.light_id == 1:
                self.light1 = command.on
            else:
                self.light2 = command.on
            self._emit("light", light_id=command.light_id, on=command.on)
            self._toast(f"Light{command.light_id} {'On' if command.on else 'Off'}")
            return msg.Ack()
        if isinstance(command, msg.FanSet):
            self.fan_on = command.on
            self._emit("fan", on=self.fan_on, level=self.fan_level)
            self._toast(f"FAN {'On' if command.on else 'Off'}")
            return msg.Ack()
        if isinstance(command, msg.FanStep):
            if not self.fan_on:
                return msg.Nack(msg.NACK_FAN_OFF)
            before = self.fan_level
            self.fan_level = min(max(before + command.delta, 0), FAN_LEVEL_MAX)
            if self.fan_level != before:
                self._emit("fan", on=self.fan_on, level=self.fan_level)
            self._toast("Speed Increasing" if command.delta > 0 else "Speed Decreasing")
            return msg.Ack()
        if isinstance(command, msg.TempQuery):
            register, clamped = self.sensor.read()
            self._emit("temp_read", register=register, clamped=clamped)
            return msg.TempReport(register)
        if isinstance(command, msg.StatusQuery):
            return msg.StatusReport(self.light1, self.light2, self.fan_on, self.fan_level, 0)
        return msg.Nack(msg.NACK_UNSUPPORTED)

    # -- internals -----------------------------------------------------------

    def _toast(self, text: str) -> None:
        self._emit("toast", text=text)

    def _emit(self, kind: str, **fields) -> None:
        event = {"kind": kind, **fields}
        self.events.append(event)
        if self._emit_cb is not None:
            self._emit_cb(kind, **fields)
