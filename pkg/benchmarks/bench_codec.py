"""Throughput comparison of the compiled and pure-Python codec kernels.

Runs the same frame corpus through decode_all with each kernel module and
times the three byte-loop kernels on their own.  Usage:

    python3 benchmarks/bench_codec.py [--frames N] [--repeats R]
"""

import argparse
import random
import string
import time

from homelink.wireproto import decode_all, encode_frame
from homelink.wireproto import messages as msg
from homelink.wireproto import _kernels as py_kernels
from homelink.wireproto._backend import BACKEND

try:
    from homelink.wireproto import _ckernels as c_kernels
except ImportError:
    c_kernels = None

# '~' and '}' force byte stuffing, so keep them frequent
PASSWORD_CHARS = string.ascii_letters + string.digits + "~}~}~}"


def build_corpus(rng: random.Random, n_frames: int) -> bytes:
    frames = []
    for _ in range(n_frames):
        pick = rng.randrange(5)
        if pick == 0:
            password = "".join(rng.choice(PASSWORD_CHARS) for _ in range(rng.randint(1, 16)))
            message = msg.Auth(password)
        elif pick == 1:
            message = msg.TempReport(rng.randint(-880, 2000))
        elif pick == 2:
            message = msg.StatusReport(True, False, True, rng.randrange(6), rng.randrange(4))
        elif pick == 3:
            message = msg.LightSet(rng.choice((1, 2)), True)
        else:
            message = msg.Ack()
        frames.append(encode_frame(message, rng.choice((1, 2, 3))))
    return b"".join(frames)


def best_of(repeats: int, fn) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def report(label: str, backend: str, seconds: float, n_bytes: int,
           baseline: float | None) -> None:
    rate = n_bytes / seconds / (1024 * 1024)
    line = f"{label:<14} {backend:<8} {rate:9.1f} MiB/s"
    if baseline is not None:
        line += f"   {baseline / seconds:5.1f}x vs python"
    print(line)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=20_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = random.Random(1)
    wire = build_corpus(rng, args.frames)
    n_frames = len(decode_all(wire))
    assert n_frames == args.frames

    print(f"active backend: {BACKEND}")
    print(f"corpus: {args.frames} frames, {len(wire) / 1024:.1f} KiB on the wire")
    print()

    backends = [("python", py_kernels)]
    if c_kernels is not None:
        backends.append(("cython", c_kernels))

    timings: dict[tuple[str, str], float] = {}
    for name, kernels in backends:
        timings[("decode_all", name)] = best_of(
            args.repeats, lambda k=kernels: decode_all(wire, kernels=k))
        timings[("xor_fold", name)] = best_of(
            args.repeats, lambda k=kernels: k.xor_fold(wire))
        timings[("stuff", name)] = best_of(
            args.repeats, lambda k=kernels: k.stuff(wire))
        stuffed = py_kernels.stuff(wire)
        timings[("unstuff_scan", name)] = best_of(
            args.repeats, lambda k=kernels, s=stuffed: k.unstuff_scan(s, 0, False, len(s) + 1))

    for label in ("decode_all", "xor_fold", "stuff", "unstuff_scan"):
        for name, _ in backends:
            baseline = timings[(label, "python")] if name != "python" else None
            report(label, name, timings[(label, name)], len(wire), baseline)
        print()


if __name__ == "__main__":
    main()
