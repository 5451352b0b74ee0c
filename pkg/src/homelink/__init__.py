"""Simulated Bluetooth home security and automation stack.

Three virtual serial-over-Bluetooth controllers (entry security, room
automation, car lock), a gateway service that hosts them, and a CLI.
"""

__version__ = "0.1.0"
