# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled byte-level kernels for the serial frame codec.

Same contract as ``_kernels.py`` (the pure-Python twin); kept line-for-line
comparable so the equivalence test can fuzz both.
"""

SOF = 0x7E
ESC = 0x7D
ESC_SOF = 0x5E
ESC_ESC = 0x5D

SCAN_NEED_MORE = 0
SCAN_FILLED = 1
SCAN_SOF = 2
SCAN_BAD_ESC = 3

DEF C_SOF = 0x7E
DEF C_ESC = 0x7D
DEF C_ESC_SOF = 0x5E
DEF C_ESC_ESC = 0x5D


def xor_fold(data) -> int:
    """XOR-fold a byte sequence, initial value 0x00."""
    cdef const unsigned char[:] view = bytes(data) if not isinstance(data, (bytes, bytearray)) else data
    cdef Py_ssize_t i, n = len(view)
    cdef unsigned char acc = 0
    for i in range(n):
        acc ^= view[i]
    return acc


def stuff(data) -> bytes:
    """Escape SOF/ESC occurrences so the result contains neither raw."""
    cdef const unsigned char[:] view = bytes(data) if not isinstance(data, (bytes, bytearray)) else data
    cdef Py_ssize_t i, n = len(view)
    cdef bytearray out = bytearray()
    cdef unsigned char b
    for i in range(n):
        b = view[i]
        if b == C_SOF:
            out.append(C_ESC)
            out.append(C_ESC_SOF)
        elif b == C_ESC:
            out.append(C_ESC)
            out.append(C_ESC_ESC)
        else:
            out.append(b)
    return bytes(out)


def unstuff_scan(buf, pos, esc_pending, max_out):
    """Unstuff bytes from ``buf[pos:]`` until ``max_out`` bytes are produced.

    Stops early on a raw SOF (frame boundary) or an invalid escape code.
    Returns ``(next_pos, out_bytes, esc_pending, status)``.
    """
    cdef const unsigned char[:] view = bytes(buf) if not isinstance(buf, (bytes, bytearray)) else buf
    cdef Py_ssize_t i = pos, n = len(view)
    cdef Py_ssize_t want = max_out
    cdef bint esc = esc_pending
    cdef bytearray out = bytearray()
    cdef unsigned char b
    while i < n and len(out) < want:
        b = view[i]
        if esc:
            i += 1
            esc = False
            if b == C_ESC_SOF:
                out.append(C_SOF)
            elif b == C_ESC_ESC:
                out.append(C_ESC)
            else:
                return i, bytes(out), False, SCAN_BAD_ESC
        elif b == C_SOF:
            return i, bytes(out), False, SCAN_SOF
        elif b == C_ESC:
            i += 1
            esc = True
        else:
            i += 1
            out.append(b)
    status = SCAN_FILLED if len(out) >= want else SCAN_NEED_MORE
    return i, bytes(out), esc, status
