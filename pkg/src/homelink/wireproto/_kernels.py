"""Pure-Python byte-level kernels for the serial frame codec.

These are the per-byte inner loops (checksum fold, byte stuffing, bounded
unstuffing scan). A compiled twin lives in ``_ckernels.pyx``; both expose
the exact same functions and are interchangeable. Selection happens in
``_backend``.
"""

SOF = 0x7E
ESC = 0x7D
ESC_SOF = 0x5E
ESC_ESC = 0x5D

# unstuff_scan status codes
SCAN_NEED_MORE = 0  # input exhausted before max_out reached
SCAN_FILLED = 1  # produced max_out unstuffed bytes
SCAN_SOF = 2  # raw SOF encountered; next_pos points AT the SOF byte
SCAN_BAD_ESC = 3  # ESC followed by an invalid code; next_pos points past it


def xor_fold(data) -> int:
    """XOR-fold a byte sequence, initial value 0x00."""
    acc = 0
    for b in data:
        acc ^= b
    return acc


def stuff(data) -> bytes:
    """Escape SOF/ESC occurrences so the result contains neither raw."""
    out = bytearray()
    for b in data:
        if b == SOF:
            out.append(ESC)
            out.append(ESC_SOF)
        elif b == ESC:
            out.append(ESC)
            out.append(ESC_ESC)
        else:
            out.append(b)
    return bytes(out)


def unstuff_scan(buf, pos: int, esc_pending: bool, max_out: int):
    """Unstuff bytes from ``buf[pos:]`` until ``max_out`` bytes are produced.

    Stops early on a raw SOF (frame boundary) or an invalid escape code.
    Returns ``(next_pos, out_bytes, esc_pending, status)`` so the caller can
    resume exactly where the scan left off, even across chunk boundaries.
    """
    out = bytearray()
    n = len(buf)
    while pos < n and len(out) < max_out:
        b = buf[pos]
        if esc_pending:
            pos += 1
            esc_pending = False
            if b == ESC_SOF:
                out.append(SOF)
            elif b == ESC_ESC:
                out.append(ESC)
            else:
                return pos, bytes(out), False, SCAN_BAD_ESC
        elif b == SOF:
            return pos, bytes(out), False, SCAN_SOF
        elif b == ESC:
            pos += 1
            esc_pending = True
        else:
            pos += 1
            out.append(b)
    status = SCAN_FILLED if len(out) >= max_out else SCAN_NEED_MORE
    return pos, bytes(out), esc_pending, status
