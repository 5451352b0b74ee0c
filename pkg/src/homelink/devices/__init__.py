"""The three simulated controllers.

Each controller is a deterministic state machine: wire commands and local
inputs (keypad, ambient temperature, clock) go in, responses and events
come out. Controllers never touch sockets; the gateway owns transport.
"""

from dataclasses import dataclass, field

from .automation import (
    AutomationController,
    TempSensor,
    dimmer_power_fraction,
    fan_level_to_angle,
    zero_crossing_schedule,
)
from .car import CarController
from .entry import EntryController, LcdModel


@dataclass
class LinkSession:
    """Per-attachment state; a fresh one is made for every accepted link."""

    authorized: bool = False


__all__ = [
    "AutomationController",
    "CarController",
    "EntryController",
    "LcdModel",
    "LinkSession",
    "TempSensor",
    "dimmer_power_fraction",
    "fan_level_to_angle",
    "zero_crossing_schedule",
]
