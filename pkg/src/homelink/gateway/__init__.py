"""Gateway service: hosts the radio, the devices, and the client planes."""

from .config import ConfigError, GatewayConfig, load_config
from .events import EventLog, replay
from .service import Gateway

__all__ = ["ConfigError", "EventLog", "Gateway", "GatewayConfig", "load_config", "replay"]
