"""Grid/block/thread dispatch model.

Kernels are written per thread, CUDA style, but executed SIMT-fashion: the
body is called once per *batch of blocks* and every thread coordinate is a
numpy array broadcastable to the lane shape ``(blocks_y, blocks_x, block_h,
block_w)``.  Each lane is one (block, thread) pair, so a body that reads
``ctx.coord.global_x`` sees the coordinate of every thread in the batch.

Threads of a block run in lockstep between barriers, which is the only
schedule the kernels in this package rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import BarrierDivergenceError, ConfigurationError, KernelFault

BLOCK_W = 16
BLOCK_H = 16
THREADS_PER_BLOCK = BLOCK_W * BLOCK_H

# upper bound on lanes materialised per batch
DEFAULT_MAX_LANES = 1 << 20


def grid_cover(width: int, height: int, block_w: int = BLOCK_W, block_h: int = BLOCK_H) -> tuple[int, int]:
    """Number of blocks needed along each axis to cover a ``width x height`` domain."""
    for name, v in (("width", width), ("height", height), ("block_w", block_w), ("block_h", block_h)):
        if v < 1:
            raise ConfigurationError(f"{name} must be >= 1, got {v}")
    return -(-width // block_w), -(-height // block_h)


@dataclass(frozen=True)
class IndexSpace2D:
    grid_w: int
    grid_h: int
    block_w: int = BLOCK_W
    block_h: int = BLOCK_H

    def __post_init__(self) -> None:
        if min(self.grid_w, self.grid_h, self.block_w, self.block_h) < 1:
            raise ConfigurationError(f"invalid index space {self}")

    @classmethod
    def covering(cls, width: int, height: int, block_w: int = BLOCK_W, block_h: int = BLOCK_H) -> "IndexSpace2D":
        gw, gh = grid_cover(width, height, block_w, block_h)
        return cls(gw, gh, block_w, block_h)

    @classmethod
    def linear(cls, n: int, max_blocks: int | None = None) -> "IndexSpace2D":
        """1-D launch of 256-thread blocks, enough to give every element a thread."""
        if n < 1:
            raise ConfigurationError(f"linear domain must be >= 1, got {n}")
        blocks = -(-n // THREADS_PER_BLOCK)
        if max_blocks is not None:
            blocks = min(blocks, max_blocks)
        return cls(blocks, 1)

    @property
    def threads_per_block(self) -> int:
        return self.block_w * self.block_h

    @property
    def num_blocks(self) -> int:
        return self.grid_w * self.grid_h

    @property
    def total_threads(self) -> int:
        return self.num_blocks * self.threads_per_block


@dataclass(frozen=True)
class ThreadCoord:
    """Thread coordinates; fields are ints or lane-broadcastable arrays."""

    block_x: Any
    block_y: Any
    thread_x: Any
    thread_y: Any
    block_w: int = BLOCK_W
    block_h: int = BLOCK_H
    grid_w: int = 1

    @property
    def global_x(self):
        return self.block_x * self.block_w + self.thread_x

    @property
    def global_y(self):
        return self.block_y * self.block_h + self.thread_y

    @property
    def thread_rank(self):
        """Slot of this thread inside its block's shared cache."""
        return self.thread_y * self.block_w + self.thread_x

    @property
    def block_rank(self):
        return self.block_y * self.grid_w + self.block_x

    @property
    def linear_id(self):
        return self.block_rank * (self.block_w * self.block_h) + self.thread_rank


class BlockGroup:
    """Execution context handed to a kernel body for one batch of blocks."""

    def __init__(self, space: IndexSpace2D, by: tuple[int, int], bx: tuple[int, int]):
        self.space = space
        nby, nbx = by[1] - by[0], bx[1] - bx[0]
        self.shape = (nby, nbx, space.block_h, space.block_w)
        self.coord = ThreadCoord(
            block_x=np.arange(bx[0], bx[1], dtype=np.int64).reshape(1, nbx, 1, 1),
            block_y=np.arange(by[0], by[1], dtype=np.int64).reshape(nby, 1, 1, 1),
            thread_x=np.arange(space.block_w, dtype=np.int64).reshape(1, 1, 1, space.block_w),
            thread_y=np.arange(space.block_h, dtype=np.int64).reshape(1, 1, space.block_h, 1),
            block_w=space.block_w,
            block_h=space.block_h,
            grid_w=space.grid_w,
        )
        self.barriers = 0

    @property
    def lanes(self) -> int:
        return int(np.prod(self.shape))

    def barrier(self, reached=None) -> None:
        """Block-wide barrier (``__syncthreads``).

        ``reached`` marks the threads that arrive; a block where only some
        threads arrive would hang on hardware, so it is reported instead.
        """
        if reached is not None:
            mask = np.broadcast_to(np.asarray(reached, dtype=bool), self.shape)
            counts = mask.reshape(self.shape[0], self.shape[1], -1).sum(axis=-1)
            tpb = self.space.threads_per_block
            bad = (counts > 0) & (counts < tpb)
            if bad.any():
                j, i = np.argwhere(bad)[0]
                raise BarrierDivergenceError(
                    f"barrier {self.barriers}: block ({int(self.coord.block_x.flat[i])}, "
                    f"{int(self.coord.block_y.flat[j])}) reached by {int(counts[j, i])}/{tpb} threads"
                )
        self.barriers += 1

    def shared_cache(self, dtype=np.float32) -> np.ndarray:
        """Per-block shared cache, one slot per thread, shape ``(blocks_y, blocks_x, slots)``.

        Float caches start as NaN since contents are undefined before the first write.
        """
        fill = np.nan if np.issubdtype(np.dtype(dtype), np.floating) else 0
        return np.full(self.shape[:2] + (self.space.threads_per_block,), fill, dtype=dtype)

    def to_slots(self, lane_values) -> np.ndarray:
        """Reshape lane-shaped values into the ``(blocks_y, blocks_x, slots)`` cache layout."""
        return np.broadcast_to(lane_values, self.shape).reshape(self.shape[0], self.shape[1], -1)

    def load(self, src: np.ndarray, index, guard, fill=0):
        """Guarded gather; inactive lanes yield ``fill`` and never touch memory."""
        index = np.broadcast_to(index, self.shape)
        guard = np.broadcast_to(guard, self.shape)
        _check_bounds(src, index, guard)
        safe = np.where(guard, index, 0)
        out = src[safe] if src.size else np.zeros(self.shape, dtype=src.dtype)
        return np.where(guard, out, np.asarray(fill, dtype=src.dtype))

    def store(self, dst: np.ndarray, index, values, guard) -> None:
        """Guarded scatter: only lanes whose guard holds write."""
        guard = np.broadcast_to(guard, self.shape)
        index = np.broadcast_to(index, self.shape)
        _check_bounds(dst, index, guard)
        dst[index[guard]] = np.broadcast_to(values, self.shape)[guard]


def _check_bounds(arr: np.ndarray, index, guard) -> None:
    active = index[guard]
    if active.size and (active.min() < 0 or active.max() >= arr.shape[0]):
        raise KernelFault(
            f"out-of-bounds access: index range [{active.min()}, {active.max()}] "
            f"on buffer of {arr.shape[0]} elements"
        )


def _batches(space: IndexSpace2D, max_lanes: int):
    tpb = space.threads_per_block
    bx_step = max(1, min(space.grid_w, max_lanes // tpb))
    by_step = max(1, max_lanes // (bx_step * tpb))
    for by0 in range(0, space.grid_h, by_step):
        by1 = min(space.grid_h, by0 + by_step)
        for bx0 in range(0, space.grid_w, bx_step):
            yield (by0, by1), (bx0, min(space.grid_w, bx0 + bx_step))


def dispatch(
    space: IndexSpace2D,
    body: Callable[..., Any],
    *args: Any,
    max_lanes: int = DEFAULT_MAX_LANES,
) -> int:
    """Run ``body(ctx, *args)`` over every (block, thread) of ``space``.

    Blocks are grouped into batches of at most ``max_lanes`` threads; each
    batch is one call.  Returns the number of thread invocations performed.
    """
    lanes = 0
    for by, bx in _batches(space, max_lanes):
        ctx = BlockGroup(space, by, bx)
        body(ctx, *args)
        lanes += ctx.lanes
    return lanes


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def reduce_block_sum(cache: np.ndarray, active_count: int | None = None, barrier: Callable[[], None] | None = None):
    """Halving tree reduction over the last axis of ``cache``.

    Slots ``[0, active_count)`` hold the inputs; the count is zero-padded up
    to a power of two, then at every step slot ``i`` adds slot ``i + stride``
    for ``i < stride`` while the stride halves.  Leading axes are independent
    blocks.  Slot 0 ends up with the sum and is returned (scalar or array).
    The cache is modified in place.
    """
    slots = cache.shape[-1]
    if active_count is None:
        active_count = slots
    if not 1 <= active_count <= slots:
        raise ConfigurationError(f"active_count must be in [1, {slots}], got {active_count}")
    width = next_pow2(active_count)
    if width > slots:
        raise ConfigurationError(f"padded width {width} exceeds {slots} cache slots")
    cache[..., active_count:width] = 0
    stride = width // 2
    while stride > 0:
        cache[..., :stride] += cache[..., stride : 2 * stride]
        if barrier is not None:
            barrier()
        stride //= 2
    return cache[..., 0]


# name -> body(ctx, *args); bodies are registered by the ops modules at import time
_KERNELS: dict[str, Callable[..., Any]] = {}


def register_kernel(name: str):
    def deco(fn):
        _KERNELS[name] = fn
        return fn

    return deco


def get_kernel(name: str) -> Callable[..., Any]:
    try:
        return _KERNELS[name]
    except KeyError:
        raise ConfigurationError(f"unknown kernel {name!r}") from None


def kernel_names() -> list[str]:
    return sorted(_KERNELS)
