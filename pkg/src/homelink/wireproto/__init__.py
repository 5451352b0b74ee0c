"""Framed binary protocol for the serial Bluetooth link."""

from .framing import (
    BACKEND,
    DecodeError,
    DecodeErrorKind,
    EncodeError,
    Frame,
    FrameDecoder,
    MAX_PAYLOAD,
    SOF,
    VERSION,
    checksum,
    decode_all,
    encode_frame,
)
from .messages import (
    Ack,
    Auth,
    Collapsed,
    Command,
    DeviceClass,
    FanSet,
    FanStep,
    LightSet,
    Lock,
    LOCK_STATES,
    Message,
    MessageError,
    Nack,
    NACK_BAD_ARG,
    NACK_BAD_AUTH,
    NACK_BUSY,
    NACK_FAN_OFF,
    NACK_MALFORMED,
    NACK_REASONS,
    NACK_UNAUTHORIZED,
    NACK_UNSUPPORTED,
    PASSWORD_MAX_LEN,
    ResetAuth,
    Response,
    StatusQuery,
    StatusReport,
    TempQuery,
    TempReport,
    Unlock,
    pack_payload,
    unpack_message,
)

__all__ = [name for name in dir() if not name.startswith("_")]
