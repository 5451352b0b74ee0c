"""Backend parity: compiled kernels must match the pure-Python ones exactly."""

import random

import pytest

from homelink.wireproto import _kernels as pure
from homelink.wireproto._backend import BACKEND

try:
    from homelink.wireproto import _ckernels as compiled
except ImportError:
    compiled = None

BACKENDS = [pure] if compiled is None else [pure, compiled]


@pytest.mark.parametrize("kern", BACKENDS, ids=lambda k: k.__name__.rsplit(".", 1)[-1])
def test_xor_fold_matches_reference(kern):
    rng = random.Random(11)
    for _ in range(200):
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(80)))
        expected = 0
        for b in data:
            expected ^= b
        assert kern.xor_fold(data) == expected


@pytest.mark.parametrize("kern", BACKENDS, ids=lambda k: k.__name__.rsplit(".", 1)[-1])
def test_stuff_never_leaks_reserved_bytes(kern):
    rng = random.Random(12)
    for _ in range(200):
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(80)))
        stuffed = kern.stuff(data)
        assert 0x7E not in stuffed
        # every ESC is followed by a valid code
        i = 0
        while i < len(stuffed):
            if stuffed[i] == 0x7D:
                assert stuffed[i + 1] in (0x5E, 0x5D)
                i += 2
            else:
                i += 1


@pytest.mark.skipif(compiled is None, reason="compiled kernels not built")
def test_backends_agree_on_random_inputs():
    rng = random.Random(13)
    for _ in range(500):
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(120)))
        assert pure.xor_fold(data) == compiled.xor_fold(data)
        assert pure.stuff(data) == compiled.stuff(data)

        pos = rng.randrange(len(data) + 1)
        esc = rng.random() < 0.2
        max_out = rng.randrange(40)
        assert pure.unstuff_scan(data, pos, esc, max_out) == compiled.unstuff_scan(
            data, pos, esc, max_out
        )


@pytest.mark.parametrize("kern", BACKENDS, ids=lambda k: k.__name__.rsplit(".", 1)[-1])
def test_unstuff_inverts_stuff(kern):
    rng = random.Random(14)
    for _ in range(200):
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(80)))
        stuffed = kern.stuff(data)
        pos, out, esc, status = kern.unstuff_scan(stuffed, 0, False, len(data))
        assert out == data
        assert pos == len(stuffed)
        assert esc is False or esc == 0
        assert status == (kern.SCAN_FILLED if data else kern.SCAN_FILLED)


def test_active_backend_is_reported():
    assert BACKEND in ("cython", "python")
    if compiled is not None:
        assert BACKEND == "cython"
