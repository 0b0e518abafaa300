"""Real-to-complex FFT on virtual devices.

The transform is an iterative radix-2 Cooley-Tukey: one kernel loads the
real input into complex storage in bit-reversed order, then one butterfly
kernel per stage, then a pack kernel keeps the ``N/2 + 1`` non-redundant bins.
Power-of-two lengths only.

``fft_chunked`` splits the signal into one contiguous chunk per device and
transforms each chunk on its own.  The result is a list of per-chunk spectra,
*not* the spectrum of the whole signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, SizeError
from ..kernel_model import IndexSpace2D, register_kernel
from ..runtime import BufferScope, Runtime
from .signal import Signal


@dataclass(frozen=True)
class ComplexSpectrum:
    """R2C output: ``num_chunks`` blocks of ``chunk_length // 2 + 1`` bins, in device order."""

    bins: np.ndarray = field(repr=False)
    chunk_length: int
    num_chunks: int = 1

    def __post_init__(self) -> None:
        per = self.chunk_length // 2 + 1 if self.chunk_length else 0
        if len(self.bins) != per * self.num_chunks:
            raise SizeError(
                f"{len(self.bins)} bins does not match {self.num_chunks} chunk(s) of length {self.chunk_length}"
            )

    @property
    def bins_per_chunk(self) -> int:
        return self.chunk_length // 2 + 1

    def chunk(self, k: int) -> np.ndarray:
        if not 0 <= k < self.num_chunks:
            raise IndexError(k)
        per = self.bins_per_chunk
        return self.bins[k * per : (k + 1) * per]

    def chunks(self) -> list[np.ndarray]:
        return [self.chunk(k) for k in range(self.num_chunks)]

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.bins.astype(np.complex128))


def is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@register_kernel("fft_load_bitrev")
def _load_bitrev(ctx, src, dst, n, bits):
    i = ctx.coord.linear_id
    guard = i < n
    rev = np.zeros_like(i)
    for b in range(bits):
        rev |= ((i >> b) & 1) << (bits - 1 - b)
    x = ctx.load(src, i, guard)
    ctx.store(dst, rev, x.astype(np.complex64), guard)


@register_kernel("fft_butterfly")
def _butterfly(ctx, data, n, half):
    t = ctx.coord.linear_id
    guard = t < n // 2
    group, j = t // half, t % half
    i0 = group * (2 * half) + j
    i1 = i0 + half
    w = np.exp(-2j * np.pi * j / (2 * half)).astype(np.complex64)
    u = ctx.load(data, i0, guard)
    v = ctx.load(data, i1, guard) * w
    ctx.store(data, i0, u + v, guard)
    ctx.store(data, i1, u - v, guard)


@register_kernel("fft_pack_r2c")
def _pack(ctx, data, out, nbins):
    i = ctx.coord.linear_id
    guard = i < nbins
    ctx.store(out, i, ctx.load(data, i, guard), guard)


def _enqueue_r2c(runtime: Runtime, scope: BufferScope, device_id: int, samples: np.ndarray, stream):
    n = len(samples)
    bits = n.bit_length() - 1
    nbins = n // 2 + 1
    src = scope.upload(device_id, samples, "f32", stream)
    work = scope.alloc_array(device_id, n, "c64")
    out = scope.alloc_array(device_id, nbins, "c64")
    runtime.launch(stream, "fft_load_bitrev", IndexSpace2D.linear(n), src, work, n, bits)
    half = 1
    while half < n:
        runtime.launch(stream, "fft_butterfly", IndexSpace2D.linear(max(1, n // 2)), work, n, half)
        half *= 2
    runtime.launch(stream, "fft_pack_r2c", IndexSpace2D.linear(nbins), work, out, nbins)
    return runtime.download(out, stream)


def _samples(signal) -> np.ndarray:
    x = signal.samples if isinstance(signal, Signal) else signal
    return np.ascontiguousarray(x, dtype=np.float32).reshape(-1)


def fft_single(runtime: Runtime, device_id: int, signal) -> ComplexSpectrum:
    """R2C transform of the whole signal on one device."""
    x = _samples(signal)
    if not is_pow2(len(x)):
        raise SizeError(f"FFT length must be a power of two, got {len(x)}")
    with BufferScope(runtime) as scope:
        stream = runtime.stream_for_op(device_id)
        host = _enqueue_r2c(runtime, scope, device_id, x, stream)
        runtime.synchronize_stream(stream)
    return ComplexSpectrum(host, len(x), 1)


def fft_chunked(runtime: Runtime, signal, num_devices: int = 2) -> ComplexSpectrum:
    """Per-device R2C transforms of contiguous chunks, concatenated in device order."""
    x = _samples(signal)
    if not 1 <= num_devices <= runtime.device_count():
        raise ConfigurationError(f"num_devices={num_devices} but runtime has {runtime.device_count()} devices")
    if len(x) % num_devices:
        raise SizeError(f"signal length {len(x)} is not divisible by {num_devices} devices")
    chunk = len(x) // num_devices
    if not is_pow2(chunk):
        raise SizeError(f"chunk length {chunk} is not a power of two")
    with BufferScope(runtime) as scope:
        streams, outs = [], []
        for d in range(num_devices):
            s = runtime.stream_for_op(d)
            streams.append(s)
            outs.append(_enqueue_r2c(runtime, scope, d, x[d * chunk : (d + 1) * chunk], s))
        for s in streams:
            runtime.synchronize_stream(s)
    return ComplexSpectrum(np.concatenate(outs), chunk, num_devices)
