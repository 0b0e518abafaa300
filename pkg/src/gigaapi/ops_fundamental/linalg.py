"""Split matrix multiplication, dot product and L2 norm."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, SizeError
from ..kernel_model import IndexSpace2D, reduce_block_sum, register_kernel
from ..partition import split_remainder_last
from ..runtime import BufferScope, Runtime

# grid size cap for the reduction kernels; threads grid-stride over the rest
DOT_MAX_BLOCKS = 64


@dataclass(frozen=True)
class MatrixF32:
    rows: int
    cols: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.values.size != self.rows * self.cols:
            raise SizeError(f"{self.values.size} values for a {self.rows}x{self.cols} matrix")

    @classmethod
    def from_array(cls, a) -> "MatrixF32":
        a = np.ascontiguousarray(a, dtype=np.float32)
        if a.ndim != 2:
            raise SizeError(f"expected a 2-D array, got shape {a.shape}")
        return cls(a.shape[0], a.shape[1], a.reshape(-1))

    def to_array(self) -> np.ndarray:
        return self.values.reshape(self.rows, self.cols)


def _check_devices(runtime: Runtime, num_devices: int) -> None:
    if not 1 <= num_devices <= runtime.device_count():
        raise ConfigurationError(f"num_devices={num_devices} but runtime has {runtime.device_count()} devices")


@register_kernel("matmul")
def _matmul_kernel(ctx, a, b, c, rows, inner, cols):
    row = ctx.coord.global_y
    col = ctx.coord.global_x
    guard = (row < rows) & (col < cols)
    # out-of-range threads read a clamped element and never write
    arow = np.minimum(row, rows - 1) * inner
    bcol = np.minimum(col, cols - 1)
    acc = np.zeros(ctx.shape, dtype=np.float32)
    prod = np.empty(ctx.shape, dtype=np.float32)
    for k in range(inner):
        np.multiply(a[arow + k], b[k * cols + bcol], out=prod)
        acc += prod
    ctx.store(c, row * cols + col, acc, guard)


def matmul(runtime: Runtime, a, b, num_devices: int = 2) -> MatrixF32:
    """C = A @ B with the rows of C split contiguously over devices.

    Each device gets its slice of A's rows and a full copy of B.
    """
    A = a if isinstance(a, MatrixF32) else MatrixF32.from_array(a)
    B = b if isinstance(b, MatrixF32) else MatrixF32.from_array(b)
    if A.cols != B.rows:
        raise SizeError(f"cannot multiply {A.rows}x{A.cols} by {B.rows}x{B.cols}")
    _check_devices(runtime, num_devices)
    out = np.zeros(A.rows * B.cols, dtype=np.float32)
    if out.size == 0:
        return MatrixF32(A.rows, B.cols, out)
    a2 = A.to_array()
    with BufferScope(runtime) as scope:
        jobs = []
        for d, (lo, hi) in enumerate(split_remainder_last(A.rows, num_devices)):
            if hi == lo:
                continue
            s = runtime.stream_for_op(d)
            da = scope.upload(d, a2[lo:hi], "f32", s)
            db = scope.upload(d, B.values, "f32", s)
            dc = scope.alloc_array(d, (hi - lo) * B.cols, "f32")
            runtime.launch(s, "matmul", IndexSpace2D.covering(B.cols, hi - lo), da, db, dc, hi - lo, A.cols, B.cols)
            runtime.memcpy_d2h(dc, s, out[lo * B.cols : hi * B.cols])
            jobs.append(s)
        for s in jobs:
            runtime.synchronize_stream(s)
    return MatrixF32(A.rows, B.cols, out)


@register_kernel("dot_partial")
def _dot_kernel(ctx, x, y, partials, n, total_threads):
    tid = ctx.coord.linear_id
    acc = np.zeros(ctx.shape, dtype=np.float32)
    # grid-stride running sum
    for base in range(0, n, total_threads):
        i = base + tid
        g = i < n
        acc += ctx.load(x, i, g) * ctx.load(y, i, g)
    cache = ctx.shared_cache(np.float32)
    cache[...] = ctx.to_slots(acc)
    ctx.barrier()
    block_sum = reduce_block_sum(cache, barrier=ctx.barrier)
    leader = ctx.coord.thread_rank == 0
    ctx.store(partials, ctx.coord.block_rank, block_sum[:, :, None, None], leader)


def _vector(v) -> np.ndarray:
    arr = np.ascontiguousarray(v, dtype=np.float32).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise SizeError("vector contains non-finite values")
    return arr


def _device_sums(runtime: Runtime, x: np.ndarray, y: np.ndarray | None, num_devices: int) -> float:
    _check_devices(runtime, num_devices)
    subtotals = []
    with BufferScope(runtime) as scope:
        jobs = []
        for d, (lo, hi) in enumerate(split_remainder_last(len(x), num_devices)):
            if hi == lo:
                continue
            n = hi - lo
            s = runtime.stream_for_op(d)
            dx = scope.upload(d, x[lo:hi], "f32", s)
            dy = dx if y is None else scope.upload(d, y[lo:hi], "f32", s)
            space = IndexSpace2D.linear(n, max_blocks=DOT_MAX_BLOCKS)
            dp = scope.alloc_array(d, space.num_blocks, "f32")
            runtime.launch(s, "dot_partial", space, dx, dy, dp, n, space.total_threads)
            host = np.empty(space.num_blocks, dtype=np.float32)
            runtime.memcpy_d2h(dp, s, host)
            jobs.append((s, host))
        for s, host in jobs:
            runtime.synchronize_stream(s)
            subtotals.append(float(np.sum(host.astype(np.float64))))
    total = 0.0
    for t in subtotals:
        total += t
    return total


def dot(runtime: Runtime, x, y, num_devices: int = 2) -> float:
    """Dot product: per-device block reductions in f32, host aggregation in f64."""
    xv, yv = _vector(x), _vector(y)
    if len(xv) != len(yv):
        raise SizeError(f"length mismatch: {len(xv)} vs {len(yv)}")
    if len(xv) == 0:
        raise SizeError("vectors must be non-empty")
    return _device_sums(runtime, xv, yv, num_devices)


def l2_norm(runtime: Runtime, x, num_devices: int = 2) -> float:
    """Euclidean norm; the square root is taken once on the host after aggregation."""
    xv = _vector(x)
    if len(xv) == 0:
        raise SizeError("vector must be non-empty")
    return math.sqrt(_device_sums(runtime, xv, None, num_devices))
