"""Simulated proof-of-work search.

Every thread takes one nonce, hashes ``block_data + str(nonce)`` with 64-bit
FNV-1a and flags the nonce if the hash is strictly below the target.  The
host scans the per-device flag arrays and reports the smallest valid nonce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, SizeError
from ..kernel_model import IndexSpace2D, register_kernel
from ..partition import split_remainder_last
from ..runtime import BufferScope, Runtime

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
U64_MAX = (1 << 64) - 1

_POW10 = np.array([10**k for k in range(20)], dtype=np.uint64)


@dataclass(frozen=True)
class MiningJob:
    block_data: bytes
    target: int
    nonce_start: int
    nonce_count: int

    def __post_init__(self) -> None:
        if self.nonce_count < 1:
            raise SizeError("nonce_count must be >= 1")
        if not 0 <= self.target <= U64_MAX:
            raise ConfigurationError("target must fit in 64 bits")
        if self.nonce_start < 0 or self.nonce_start + self.nonce_count - 1 > U64_MAX:
            raise ConfigurationError("nonce range must fit in 64 bits")


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & U64_MAX
    return h


@register_kernel("mine")
def _mine_kernel(ctx, data, flags, nonce_start, count, target):
    tid = ctx.coord.linear_id
    guard = tid < count
    nonce = np.uint64(nonce_start) + np.where(guard, tid, 0).astype(np.uint64)
    prime = np.uint64(FNV_PRIME)
    h = np.full(ctx.shape, FNV_OFFSET, dtype=np.uint64)
    for byte in data:
        h = (h ^ np.uint64(byte)) * prime
    ndigits = np.ones(ctx.shape, dtype=np.int64)
    for k in range(1, 20):
        ndigits += nonce >= _POW10[k]
    for p in range(int(ndigits.max())):
        active = p < ndigits
        place = _POW10[np.clip(ndigits - 1 - p, 0, 19)]
        digit = (nonce // place) % np.uint64(10)
        h = np.where(active, (h ^ (digit + np.uint64(48))) * prime, h)
    ok = (h < np.uint64(target)).astype(np.uint8)
    ctx.store(flags, tid, ok, guard)


def mine_simulated(runtime: Runtime, job: MiningJob, num_devices: int = 2) -> int | None:
    if not 1 <= num_devices <= runtime.device_count():
        raise ConfigurationError(f"num_devices={num_devices} but runtime has {runtime.device_count()} devices")
    payload = np.frombuffer(job.block_data, dtype=np.uint8) if job.block_data else None
    with BufferScope(runtime) as scope:
        jobs = []
        for d, (lo, hi) in enumerate(split_remainder_last(job.nonce_count, num_devices)):
            if hi == lo:
                continue
            s = runtime.stream_for_op(d)
            # zero-length payloads cannot be allocated; pass an empty host array instead
            ddata = scope.upload(d, payload, "u8", s) if payload is not None else np.empty(0, np.uint8)
            dflags = scope.alloc_array(d, hi - lo, "u8")
            runtime.launch(s, "mine", IndexSpace2D.linear(hi - lo), ddata, dflags, job.nonce_start + lo, hi - lo, job.target)
            host = np.empty(hi - lo, dtype=np.uint8)
            runtime.memcpy_d2h(dflags, s, host)
            jobs.append((s, lo, host))
        for s, _, _ in jobs:
            runtime.synchronize_stream(s)
    for _, lo, host in jobs:
        hits = np.flatnonzero(host)
        if hits.size:
            return job.nonce_start + lo + int(hits[0])
    return None
