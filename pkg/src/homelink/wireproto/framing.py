"""Framing for the serial byte stream.

Wire layout, per frame:

    0x7E | version | device_class | opcode | length | payload... | checksum

Everything after the 0x7E start byte is byte-stuffed (0x7E -> 0x7D 0x5E,
0x7D -> 0x7D 0x5D) so a raw 0x7E can only ever mean "frame starts here".
The checksum is the XOR of version, device_class, opcode, the length byte
and every payload byte. Payloads are capped at 64 bytes. There is no end
marker; the length byte delimits the body, which keeps incremental
decoding a single forward scan.

The decoder never gives up on the stream: any malformed body produces one
error value and the scan resumes at the next raw 0x7E.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ._backend import BACKEND, kernels as _default_kernels
from .messages import DeviceClass, Message, MessageError, pack_payload, unpack_message

SOF = 0x7E
VERSION = 1
MAX_PAYLOAD = 64

_HEADER_LEN = 4  # version, device_class, opcode, length
_LEN_INDEX = 3


class EncodeError(ValueError):
    """Message cannot be represented as a frame (oversize payload)."""


class DecodeErrorKind(Enum):
    CHECKSUM_MISMATCH = "checksum-mismatch"
    BAD_STUFFING = "bad-stuffing"
    OVERSIZE = "oversize"
    BAD_HEADER = "bad-header"


@dataclass(frozen=True)
class DecodeError:
    """One malformed body; the decoder has already resynchronized."""

    kind: DecodeErrorKind
    detail: str


@dataclass(frozen=True)
class Frame:
    version: int
    device_class: int
    opcode: int
    payload: bytes

    @property
    def checksum(self) -> int:
        return checksum(bytes([self.version, self.device_class, self.opcode, len(self.payload)]) + self.payload)

    def message(self) -> Message:
        """Parse the typed command/response this frame carries."""
        return unpack_message(self.opcode, self.payload)


def checksum(body: bytes) -> int:
    """XOR fold of the unstuffed body bytes, initial 0x00."""
    return _default_kernels.xor_fold(body)


def encode_frame(msg: Message, device_class: int | DeviceClass) -> bytes:
    """Encode a command or response as a complete stuffed frame."""
    payload = pack_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise EncodeError(f"payload is {len(payload)} bytes, max {MAX_PAYLOAD}")
    body = bytes([VERSION, int(device_class), msg.opcode, len(payload)]) + payload
    body += bytes([_default_kernels.xor_fold(body)])
    return bytes([SOF]) + _default_kernels.stuff(body)


class FrameDecoder:
    """Incremental frame decoder with resynchronization.

    feed() accepts arbitrary chunking and returns, in stream order, every
    completed Frame and every DecodeError encountered. One instance per
    connection; not safe for concurrent feeders.
    """

    def __init__(self, kernels=None):
        self._k = kernels or _default_kernels
        self._buf = bytearray()
        self._in_body = False
        self._body = bytearray()
        self._esc = False

    def feed(self, data: bytes) -> list[Frame | DecodeError]:
        self._buf.extend(data)
        out: list[Frame | DecodeError] = []
        pos = 0
        while True:
            if not self._in_body:
                idx = self._buf.find(SOF, pos)
                if idx < 0:
                    pos = len(self._buf)
                    break
                pos = idx + 1
                self._in_body = True
                self._body.clear()
                self._esc = False
                continue

            want = self._body_target() - len(self._body)
            pos, chunk, self._esc, status = self._k.unstuff_scan(self._buf, pos, self._esc, want)
            self._body.extend(chunk)

            if status == self._k.SCAN_NEED_MORE:
                break
            if status == self._k.SCAN_SOF:
                # raw SOF inside a body: previous frame was truncated
                if self._body or self._esc:
                    out.append(DecodeError(DecodeErrorKind.BAD_STUFFING, "frame truncated by new start byte"))
                pos += 1
                self._body.clear()
                self._esc = False
                continue
            if status == self._k.SCAN_BAD_ESC:
                out.append(DecodeError(DecodeErrorKind.BAD_STUFFING, "invalid escape sequence"))
                self._reset_to_idle()
                continue

            # SCAN_FILLED: reached the current target
            if len(self._body) == _HEADER_LEN:
                length = self._body[_LEN_INDEX]
                if length > MAX_PAYLOAD:
                    out.append(DecodeError(DecodeErrorKind.OVERSIZE, f"declared payload {length} > {MAX_PAYLOAD}"))
                    self._reset_to_idle()
                continue  # checksum byte still outstanding, target grew

            result = self._finish_body()
            if result is not None:
                out.append(result)
            self._reset_to_idle()

        del self._buf[:pos]
        return out

    def flush(self) -> list[DecodeError]:
        """Signal end-of-stream; reports a partially received body."""
        out = []
        if self._in_body and (self._body or self._esc):
            out.append(DecodeError(DecodeErrorKind.BAD_STUFFING, "stream ended mid-frame"))
        self._reset_to_idle()
        self._buf.clear()
        return out

    def _body_target(self) -> int:
        if len(self._body) < _HEADER_LEN:
            return _HEADER_LEN
        return _HEADER_LEN + self._body[_LEN_INDEX] + 1

    def _finish_body(self) -> Frame | DecodeError:
        body = bytes(self._body)
        if self._k.xor_fold(body[:-1]) != body[-1]:
            return DecodeError(DecodeErrorKind.CHECKSUM_MISMATCH, "checksum mismatch")
        if body[0] != VERSION:
            return DecodeError(DecodeErrorKind.BAD_HEADER, f"unsupported version {body[0]}")
        if body[1] not in (DeviceClass.ENTRY, DeviceClass.AUTOMATION, DeviceClass.CAR):
            return DecodeError(DecodeErrorKind.BAD_HEADER, f"unknown device class 0x{body[1]:02X}")
        return Frame(body[0], body[1], body[2], body[_HEADER_LEN:-1])

    def _reset_to_idle(self):
        self._in_body = False
        self._body.clear()
        self._esc = False


def decode_all(data: bytes, kernels=None) -> list[Frame | DecodeError]:
    """One-shot decode of a complete buffer (fresh decoder, then flush)."""
    dec = FrameDecoder(kernels=kernels)
    items: list[Frame | DecodeError] = dec.feed(data)
    items.extend(dec.flush())
    return items


__all__ = [
    "BACKEND",
    "DecodeError",
    "DecodeErrorKind",
    "EncodeError",
    "Frame",
    "FrameDecoder",
    "MAX_PAYLOAD",
    "SOF",
    "VERSION",
    "checksum",
    "decode_all",
    "encode_frame",
]
