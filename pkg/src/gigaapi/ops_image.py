"""Image kernels split by output rows across devices.

Every op builds a :class:`SplitPlan`: a partition of the output rows over the
devices plus, for each device, the input rows its output rows read.  For the
3x3 sharpening stencil that input range carries one halo row past each seam,
so the split result is byte-identical to the unsplit one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .images import ImageGray8, ImageRgb8
from .kernel_model import IndexSpace2D, register_kernel
from .partition import split_extra_first
from .runtime import BufferScope, Runtime

SHARPEN_KERNEL = np.array([[-1, -1, -1], [-1, 8, -1], [-1, -1, -1]], dtype=np.int32)

# fixed-point luma weights (x1000): exact evaluation of 0.299 R + 0.587 G + 0.114 B
_LUMA = (299, 587, 114)


@dataclass(frozen=True)
class SplitPlan:
    out_ranges: list[tuple[int, int]]
    in_ranges: list[tuple[int, int]]
    devices: list[int]

    def __iter__(self):
        return iter(zip(self.devices, self.out_ranges, self.in_ranges))


def _plan(out_height: int, num_devices: int, in_rows) -> SplitPlan:
    outs, ins, devs = [], [], []
    for d, (lo, hi) in enumerate(split_extra_first(out_height, num_devices)):
        if hi > lo:
            outs.append((lo, hi))
            ins.append(in_rows(lo, hi))
            devs.append(d)
    return SplitPlan(outs, ins, devs)


def plan_pointwise(height: int, num_devices: int) -> SplitPlan:
    return _plan(height, num_devices, lambda lo, hi: (lo, hi))


def plan_upsample(height: int, scale: int, num_devices: int) -> SplitPlan:
    return _plan(height * scale, num_devices, lambda lo, hi: (lo // scale, (hi - 1) // scale + 1))


def plan_sharpen(height: int, num_devices: int) -> SplitPlan:
    return _plan(height, num_devices, lambda lo, hi: (max(0, lo - 1), min(height, hi + 1)))


def _check(runtime: Runtime, num_devices: int) -> None:
    if not 1 <= num_devices <= runtime.device_count():
        raise ConfigurationError(f"num_devices={num_devices} but runtime has {runtime.device_count()} devices")


# -- grayscale -----------------------------------------------------------------

@register_kernel("grayscale")
def _grayscale_kernel(ctx, rgb, gray, width, rows):
    x, y = ctx.coord.global_x, ctx.coord.global_y
    guard = (x < width) & (y < rows)
    px = y * width + x
    acc = np.zeros(ctx.shape, dtype=np.int32)
    for c, weight in enumerate(_LUMA):
        acc += weight * ctx.load(rgb, 3 * px + c, guard).astype(np.int32)
    # round half away from zero; the sum of weights is 1000 so no clamp is needed
    ctx.store(gray, px, ((acc + 500) // 1000).astype(np.uint8), guard)


def grayscale(runtime: Runtime, img: ImageRgb8, num_devices: int = 2) -> ImageGray8:
    _check(runtime, num_devices)
    w = img.width
    out = np.empty(w * img.height, dtype=np.uint8)
    with BufferScope(runtime) as scope:
        streams = []
        for d, (lo, hi), _ in plan_pointwise(img.height, num_devices):
            rows = hi - lo
            s = runtime.stream_for_op(d)
            src = scope.upload(d, img.data[3 * w * lo : 3 * w * hi], "u8", s)
            dst = scope.alloc(d, w * rows, "u8")
            runtime.launch(s, "grayscale", IndexSpace2D.covering(w, rows), src, dst, w, rows)
            runtime.memcpy_d2h(dst, s, out[w * lo : w * hi])
            streams.append(s)
        for s in streams:
            runtime.synchronize_stream(s)
    return ImageGray8(w, img.height, out)


# -- nearest-neighbour upsampling ------------------------------------------------

@register_kernel("upsample_nn")
def _upsample_kernel(ctx, src, dst, width, scale, out_row0, in_row0, rows_out):
    out_w = width * scale
    x, y = ctx.coord.global_x, ctx.coord.global_y
    guard = (x < out_w) & (y < rows_out)
    sx = x // scale
    sy = (out_row0 + y) // scale - in_row0
    src_px = sy * width + sx
    dst_px = y * out_w + x
    for c in range(3):
        ctx.store(dst, 3 * dst_px + c, ctx.load(src, 3 * src_px + c, guard), guard)


def upsample_device_bytes(width: int, height: int, scale: int, num_devices: int) -> list[int]:
    """Bytes each device must allocate (input slice + output slice) to upsample."""
    plan = plan_upsample(height, scale, num_devices)
    return [
        3 * width * (ihi - ilo) + 3 * width * scale * (ohi - olo)
        for _, (olo, ohi), (ilo, ihi) in plan
    ]


def upsample_nn(runtime: Runtime, img: ImageRgb8, scale: int, num_devices: int = 2) -> ImageRgb8:
    if not isinstance(scale, (int, np.integer)) or isinstance(scale, bool) or scale < 1:
        raise ConfigurationError(f"scale must be a positive integer, got {scale!r}")
    scale = int(scale)
    _check(runtime, num_devices)
    w = img.width
    out_w, out_h = w * scale, img.height * scale
    out = np.empty(3 * out_w * out_h, dtype=np.uint8)
    with BufferScope(runtime) as scope:
        streams = []
        for d, (olo, ohi), (ilo, ihi) in plan_upsample(img.height, scale, num_devices):
            rows = ohi - olo
            s = runtime.stream_for_op(d)
            src = scope.upload(d, img.data[3 * w * ilo : 3 * w * ihi], "u8", s)
            dst = scope.alloc(d, 3 * out_w * rows, "u8")
            runtime.launch(s, "upsample_nn", IndexSpace2D.covering(out_w, rows), src, dst, w, scale, olo, ilo, rows)
            runtime.memcpy_d2h(dst, s, out[3 * out_w * olo : 3 * out_w * ohi])
            streams.append(s)
        for s in streams:
            runtime.synchronize_stream(s)
    return ImageRgb8(out_w, out_h, out)


# -- Laplacian sharpening --------------------------------------------------------

@register_kernel("sharpen")
def _sharpen_kernel(ctx, src, dst, width, height, out_row0, in_row0, rows_out):
    x, y = ctx.coord.global_x, ctx.coord.global_y
    guard = (x < width) & (y < rows_out)
    gy = out_row0 + y
    for c in range(3):
        acc = np.zeros(ctx.shape, dtype=np.int32)
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                ny, nx = gy + i, x + j
                # out-of-image neighbours contribute nothing
                inside = guard & (ny >= 0) & (ny < height) & (nx >= 0) & (nx < width)
                v = ctx.load(src, 3 * ((ny - in_row0) * width + nx) + c, inside)
                acc += SHARPEN_KERNEL[i + 1, j + 1] * v.astype(np.int32)
        ctx.store(dst, 3 * (y * width + x) + c, np.clip(acc, 0, 255).astype(np.uint8), guard)


def sharpen(runtime: Runtime, img: ImageRgb8, num_devices: int = 2) -> ImageRgb8:
    _check(runtime, num_devices)
    w, h = img.width, img.height
    out = np.empty(3 * w * h, dtype=np.uint8)
    with BufferScope(runtime) as scope:
        streams = []
        for d, (olo, ohi), (ilo, ihi) in plan_sharpen(h, num_devices):
            rows = ohi - olo
            s = runtime.stream_for_op(d)
            src = scope.upload(d, img.data[3 * w * ilo : 3 * w * ihi], "u8", s)
            dst = scope.alloc(d, 3 * w * rows, "u8")
            runtime.launch(s, "sharpen", IndexSpace2D.covering(w, rows), src, dst, w, h, olo, ilo, rows)
            runtime.memcpy_d2h(dst, s, out[3 * w * olo : 3 * w * ohi])
            streams.append(s)
        for s in streams:
            runtime.synchronize_stream(s)
    return ImageRgb8(w, h, out)


def upsample_then_sharpen(runtime: Runtime, img: ImageRgb8, scale: int, num_devices: int = 2) -> ImageRgb8:
    return sharpen(runtime, upsample_nn(runtime, img, scale, num_devices), num_devices)
