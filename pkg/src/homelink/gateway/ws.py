"""Minimal WebSocket server support for the JSON plane.

Enough of RFC 6455 for a browser client exchanging small text messages:
the upgrade handshake, unfragmented text/close/ping frames, and client
masking. The JSON plane sniffs the first bytes of each connection; an
HTTP GET means this module takes over, anything else is treated as
newline-delimited JSON.
"""

from __future__ import annotations

import base64
import hashlib
import struct

GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WsError(ValueError):
    pass


def is_http_upgrade(prefix: bytes) -> bool:
    return prefix.startswith(b"GET ")


def handshake_response(request: bytes) -> bytes:
    """101 response for an upgrade request; raises WsError when malformed."""
    try:
        head = request.decode("latin-1")
    except UnicodeDecodeError as exc:
        raise WsError("undecodable handshake") from exc
    key = None
    for line in head.split("\r\n")[1:]:
        name, _, value = line.partition(":")
        if name.strip().lower() == "sec-websocket-key":
            key = value.strip()
    if not key:
        raise WsError("missing Sec-WebSocket-Key")
    accept = base64.b64encode(hashlib.sha1((key + GUID).encode("ascii")).digest()).decode("ascii")
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept}\r\n"
        "\r\n"
    ).encode("ascii")


def encode_text(payload: str) -> bytes:
    data = payload.encode("utf-8")
    n = len(data)
    if n < 126:
        header = struct.pack("!BB", 0x80 | OP_TEXT, n)
    elif n < 65536:
        header = struct.pack("!BBH", 0x80 | OP_TEXT, 126, n)
    else:
        header = struct.pack("!BBQ", 0x80 | OP_TEXT, 127, n)
    return header + data


def encode_close() -> bytes:
    return struct.pack("!BB", 0x80 | OP_CLOSE, 0)


def encode_pong(payload: bytes) -> bytes:
    return struct.pack("!BB", 0x80 | OP_PONG, len(payload) & 0x7F) + payload[:125]


def decode_frames(buffer: bytearray) -> list[tuple[int, bytes]]:
    """Consume complete frames from buffer, returning (opcode, payload) pairs.

    Partial frames stay in the buffer for the next read. Client frames
    must be masked per the RFC.
    """
    frames = []
    while True:
        if len(buffer) < 2:
            return frames
        first, second = buffer[0], buffer[1]
        if not first & 0x80:
            raise WsError("fragmented frames are not supported")
        opcode = first & 0x0F
        masked = bool(second & 0x80)
        length = second & 0x7F
        offset = 2
        if length == 126:
            if len(buffer) < 4:
                return frames
            length = struct.unpack_from("!H", buffer, 2)[0]
            offset = 4
        elif length == 127:
            if len(buffer) < 10:
                return frames
            length = struct.unpack_from("!Q", buffer, 2)[0]
            offset = 10
        if not masked:
            raise WsError("client frames must be masked")
        if len(buffer) < offset + 4 + length:
            return frames
        mask = buffer[offset:offset + 4]
        start = offset + 4
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(buffer[start:start + length]))
        del buffer[:start + length]
        frames.append((opcode, payload))
