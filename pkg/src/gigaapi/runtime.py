"""Virtual multi-device runtime.

Each :class:`VirtualDevice` owns a capacity-accounted memory pool and a
single worker thread.  Streams are FIFO views onto that worker, so work on
one stream (indeed on one device) completes in enqueue order, while work on
different devices runs concurrently.  Every allocation, transfer and kernel
lands in an :class:`ActivityTrace`.
"""

from __future__ import annotations

import itertools
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DeviceAffinityError,
    InvalidHandleError,
    KernelFault,
    OrderingError,
    OutOfDeviceMemory,
    SizeError,
)
from .kernel_model import IndexSpace2D, dispatch, get_kernel

ELEMENT_KINDS: dict[str, np.dtype] = {
    "u8": np.dtype(np.uint8),
    "f32": np.dtype(np.float32),
    "c64": np.dtype(np.complex64),
}


@dataclass(frozen=True)
class DeviceSpec:
    id: int
    memory_capacity: int

    def __post_init__(self) -> None:
        if self.memory_capacity <= 0:
            raise ConfigurationError(f"device {self.id}: memory_capacity must be > 0")


@dataclass(frozen=True)
class TraceRecord:
    device_id: int
    kind: str  # alloc | free | h2d | d2h | event | kernel:<name>
    start_ns: int
    end_ns: int
    label: str = ""

    @property
    def stream_id(self) -> int | None:
        for part in self.label.split():
            if part.startswith("stream="):
                return int(part[7:])
        return None


class ActivityTrace(list):
    """Ordered list of :class:`TraceRecord`."""

    def for_device(self, device_id: int) -> "ActivityTrace":
        return ActivityTrace(r for r in self if r.device_id == device_id)

    def kernels(self) -> "ActivityTrace":
        return ActivityTrace(r for r in self if r.kind.startswith("kernel:"))


class DeviceBuffer:
    """Handle to device-resident storage.  Only the runtime touches the bytes."""

    __slots__ = ("handle", "device_id", "length_bytes", "element_kind", "_storage", "_live")

    def __init__(self, handle: int, device_id: int, length_bytes: int, element_kind: str):
        self.handle = handle
        self.device_id = device_id
        self.length_bytes = length_bytes
        self.element_kind = element_kind
        self._storage: np.ndarray | None = np.zeros(length_bytes, dtype=np.uint8)
        self._live = True

    @property
    def dtype(self) -> np.dtype:
        return ELEMENT_KINDS[self.element_kind]

    @property
    def count(self) -> int:
        return self.length_bytes // self.dtype.itemsize

    @property
    def live(self) -> bool:
        return self._live

    def _view(self) -> np.ndarray:
        if not self._live:
            raise InvalidHandleError(f"buffer {self.handle} has been freed")
        return self._storage.view(self.dtype)

    def __repr__(self) -> str:
        state = "live" if self._live else "freed"
        return f"DeviceBuffer(#{self.handle}, dev={self.device_id}, {self.length_bytes}B {self.element_kind}, {state})"


class VirtualDevice:
    def __init__(self, spec: DeviceSpec):
        self.spec = spec
        self.allocated_bytes = 0
        self.buffers: dict[int, DeviceBuffer] = {}
        self.executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix=f"vdev{spec.id}")
        self.pending: list[Future] = []

    @property
    def id(self) -> int:
        return self.spec.id

    @property
    def capacity(self) -> int:
        return self.spec.memory_capacity


class Event:
    def __init__(self, stream: "Stream", seq: int):
        self.stream = stream
        self.seq = seq
        self.timestamp_ns: int | None = None
        self._done = threading.Event()

    @property
    def complete(self) -> bool:
        return self._done.is_set()

    def wait(self) -> None:
        self._done.wait()


class Stream:
    def __init__(self, runtime: "Runtime", device_id: int, stream_id: int):
        self.runtime = runtime
        self.device_id = device_id
        self.id = stream_id
        self.pending: list[Future] = []
        self._events = itertools.count()

    def __repr__(self) -> str:
        return f"Stream({self.id}, dev={self.device_id})"


class Runtime:
    """A set of virtual devices plus their shared accounting and trace state.

    ``stream_policy`` picks what :meth:`stream_for_op` returns: a fresh stream
    per operation (``"per_op"``) or the device's default stream (``"per_device"``).
    ``kernel_delay`` adds a sleep to every kernel, which is how the parallelism
    evidence suite makes kernel intervals wide enough to observe.
    """

    def __init__(
        self,
        specs: Sequence[DeviceSpec],
        *,
        stream_policy: str = "per_op",
        kernel_delay: float = 0.0,
    ):
        specs = list(specs)
        if not specs:
            raise ConfigurationError("at least one device is required")
        if sorted(s.id for s in specs) != list(range(len(specs))):
            raise ConfigurationError(f"device ids must be dense 0..{len(specs) - 1}, got {[s.id for s in specs]}")
        if stream_policy not in ("per_op", "per_device"):
            raise ConfigurationError(f"unknown stream policy {stream_policy!r}")
        if kernel_delay < 0:
            raise ConfigurationError("kernel_delay must be >= 0")
        self.devices = [VirtualDevice(s) for s in sorted(specs, key=lambda s: s.id)]
        self.stream_policy = stream_policy
        self.kernel_delay = kernel_delay
        self._lock = threading.RLock()
        self._trace = ActivityTrace()
        self._handles = itertools.count(1)
        self._stream_ids = itertools.count(0)
        self._default_streams = [Stream(self, d.id, next(self._stream_ids)) for d in self.devices]
        self._closed = False

    # -- lifecycle -----------------------------------------------------

    def device_count(self) -> int:
        return len(self.devices)

    def close(self) -> None:
        if self._closed:
            return
        for dev in self.devices:
            dev.executor.shutdown(wait=True)
        with self._lock:
            for dev in self.devices:
                for buf in dev.buffers.values():
                    buf._live = False
                    buf._storage = None
                dev.buffers.clear()
                dev.allocated_bytes = 0
        self._closed = True

    def __enter__(self) -> "Runtime":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def device(self, device_id: int) -> VirtualDevice:
        if not 0 <= device_id < len(self.devices):
            raise ConfigurationError(f"no device {device_id} (runtime has {len(self.devices)})")
        return self.devices[device_id]

    # -- accounting ----------------------------------------------------

    def allocated_bytes(self, device_id: int) -> int:
        with self._lock:
            return self.device(device_id).allocated_bytes

    def live_buffers(self, device_id: int) -> list[DeviceBuffer]:
        with self._lock:
            return list(self.device(device_id).buffers.values())

    def _record(self, device_id: int, kind: str, start: int, end: int, label: str = "") -> None:
        with self._lock:
            self._trace.append(TraceRecord(device_id, kind, start, end, label))

    def trace_snapshot(self) -> ActivityTrace:
        with self._lock:
            return ActivityTrace(self._trace)

    def clear_trace(self) -> None:
        with self._lock:
            self._trace.clear()

    def alloc(self, device_id: int, length_bytes: int, element_kind: str = "u8") -> DeviceBuffer:
        if element_kind not in ELEMENT_KINDS:
            raise ConfigurationError(f"unknown element kind {element_kind!r}")
        if length_bytes <= 0:
            raise SizeError(f"allocation length must be > 0, got {length_bytes}")
        if length_bytes % ELEMENT_KINDS[element_kind].itemsize:
            raise SizeError(f"{length_bytes} bytes is not a whole number of {element_kind} elements")
        t0 = time.perf_counter_ns()
        with self._lock:
            dev = self.device(device_id)
            if dev.allocated_bytes + length_bytes > dev.capacity:
                raise OutOfDeviceMemory(device_id, length_bytes, dev.allocated_bytes, dev.capacity)
            buf = DeviceBuffer(next(self._handles), device_id, length_bytes, element_kind)
            dev.buffers[buf.handle] = buf
            dev.allocated_bytes += length_bytes
            self._trace.append(
                TraceRecord(device_id, "alloc", t0, time.perf_counter_ns(), f"buffer={buf.handle} bytes={length_bytes}")
            )
        return buf

    def alloc_array(self, device_id: int, count: int, element_kind: str) -> DeviceBuffer:
        return self.alloc(device_id, count * ELEMENT_KINDS[element_kind].itemsize, element_kind)

    def free(self, buffer: DeviceBuffer) -> None:
        """Release a buffer.  Like ``cudaFree`` this waits for the device to go idle."""
        with self._lock:
            dev = self.device(buffer.device_id)
            if dev.buffers.get(buffer.handle) is not buffer:
                raise InvalidHandleError(f"buffer {buffer.handle} is not live on device {buffer.device_id}")
        self._drain(dev)
        t0 = time.perf_counter_ns()
        with self._lock:
            if dev.buffers.pop(buffer.handle, None) is not buffer:
                raise InvalidHandleError(f"buffer {buffer.handle} freed concurrently")
            dev.allocated_bytes -= buffer.length_bytes
            buffer._live = False
            buffer._storage = None
            self._trace.append(
                TraceRecord(dev.id, "free", t0, time.perf_counter_ns(), f"buffer={buffer.handle} bytes={buffer.length_bytes}")
            )

    # -- streams -------------------------------------------------------

    def create_stream(self, device_id: int) -> Stream:
        self.device(device_id)
        with self._lock:
            return Stream(self, device_id, next(self._stream_ids))

    def default_stream(self, device_id: int) -> Stream:
        self.device(device_id)
        return self._default_streams[device_id]

    def stream_for_op(self, device_id: int) -> Stream:
        if self.stream_policy == "per_device":
            return self.default_stream(device_id)
        return self.create_stream(device_id)

    def _submit(self, stream: Stream, kind: str | None, fn: Callable[[], Any], label: str = "") -> Future:
        if stream.runtime is not self:
            raise ConfigurationError("stream belongs to another runtime")
        dev = self.device(stream.device_id)
        tag = f"stream={stream.id}" + (f" {label}" if label else "")

        def run():
            t0 = time.perf_counter_ns()
            try:
                return fn()
            finally:
                if kind is not None:
                    self._record(dev.id, kind, t0, time.perf_counter_ns(), tag)

        with self._lock:
            stream.pending = _prune(stream.pending)
            dev.pending = _prune(dev.pending)
            fut = dev.executor.submit(run)
            stream.pending.append(fut)
            dev.pending.append(fut)
        return fut

    def launch(self, stream: Stream, kernel_name: str, index_space: IndexSpace2D, *args: Any) -> Future:
        """Enqueue ``kernel_name`` over ``index_space``; returns immediately."""
        body = get_kernel(kernel_name)
        for a in args:
            if isinstance(a, DeviceBuffer):
                if a.device_id != stream.device_id:
                    raise DeviceAffinityError(
                        f"kernel {kernel_name} on device {stream.device_id} given buffer {a.handle} "
                        f"owned by device {a.device_id}"
                    )
                if not a.live:
                    raise InvalidHandleError(f"buffer {a.handle} has been freed")
        delay = self.kernel_delay

        def run():
            if delay:
                time.sleep(delay)
            resolved = [a._view() if isinstance(a, DeviceBuffer) else a for a in args]
            try:
                dispatch(index_space, body, *resolved)
            except KernelFault:
                raise
            except Exception as exc:
                raise KernelFault(f"kernel {kernel_name} failed: {exc}") from exc

        return self._submit(stream, f"kernel:{kernel_name}", run)

    def synchronize_stream(self, stream: Stream) -> None:
        with self._lock:
            pending, stream.pending = stream.pending, []
        _wait_and_raise(pending)

    def synchronize_device(self, device_id: int) -> None:
        dev = self.device(device_id)
        with self._lock:
            pending, dev.pending = dev.pending, []
        _wait_and_raise(pending)

    def synchronize(self) -> None:
        for dev in self.devices:
            self.synchronize_device(dev.id)

    def _drain(self, dev: VirtualDevice) -> None:
        with self._lock:
            pending = list(dev.pending)
        wait(pending)
        with self._lock:
            dev.pending = _prune(dev.pending)

    # -- transfers -----------------------------------------------------

    def memcpy_h2d(self, buffer: DeviceBuffer, host, stream: Stream | None = None) -> None:
        """Copy host bytes (or any contiguous array) into ``buffer``.

        Without a stream the copy is synchronous; with one it is queued and the
        caller must keep ``host`` unchanged until the stream is synchronized.
        """
        payload = np.frombuffer(memoryview(np.ascontiguousarray(host)).cast("B"), dtype=np.uint8)
        if payload.size != buffer.length_bytes:
            raise SizeError(f"host payload is {payload.size} bytes, buffer {buffer.handle} is {buffer.length_bytes}")
        self._check_live(buffer)
        s = stream if stream is not None else self.default_stream(buffer.device_id)
        self._check_stream(s, buffer)

        def run():
            buffer._view().view(np.uint8)[:] = payload

        fut = self._submit(s, "h2d", run, f"buffer={buffer.handle}")
        if stream is None:
            _wait_and_raise([fut])

    def memcpy_d2h(self, buffer: DeviceBuffer, stream: Stream | None = None, out: np.ndarray | None = None):
        """Copy a buffer back to the host.

        Synchronous form returns ``bytes``.  With a stream, ``out`` must be a
        writable host array of the same byte length; it is filled once the
        stream reaches the copy, and ``out`` is returned.
        """
        self._check_live(buffer)
        if stream is None:
            dst = np.empty(buffer.length_bytes, dtype=np.uint8)
            s = self.default_stream(buffer.device_id)
        else:
            if out is None:
                raise SizeError("asynchronous d2h needs a destination array")
            dst = out.reshape(-1).view(np.uint8)
            if dst.size != buffer.length_bytes:
                raise SizeError(f"destination is {dst.size} bytes, buffer {buffer.handle} is {buffer.length_bytes}")
            s = stream
        self._check_stream(s, buffer)

        def run():
            dst[:] = buffer._view().view(np.uint8)

        fut = self._submit(s, "d2h", run, f"buffer={buffer.handle}")
        if stream is None:
            _wait_and_raise([fut])
            return dst.tobytes()
        return out

    def upload(self, device_id: int, array: np.ndarray, element_kind: str, stream: Stream | None = None) -> DeviceBuffer:
        """Allocate a buffer sized for ``array`` and copy it over."""
        arr = np.ascontiguousarray(array, dtype=ELEMENT_KINDS[element_kind])
        buf = self.alloc(device_id, arr.nbytes, element_kind)
        self.memcpy_h2d(buf, arr, stream)
        return buf

    def download(self, buffer: DeviceBuffer, stream: Stream | None = None) -> np.ndarray:
        out = np.empty(buffer.count, dtype=buffer.dtype)
        if stream is None:
            out.view(np.uint8)[:] = np.frombuffer(self.memcpy_d2h(buffer), dtype=np.uint8)
            return out
        return self.memcpy_d2h(buffer, stream, out)

    def _check_live(self, buffer: DeviceBuffer) -> None:
        if not buffer.live:
            raise InvalidHandleError(f"buffer {buffer.handle} has been freed")

    def _check_stream(self, stream: Stream, buffer: DeviceBuffer) -> None:
        if stream.device_id != buffer.device_id:
            raise DeviceAffinityError(
                f"buffer {buffer.handle} lives on device {buffer.device_id}, stream on device {stream.device_id}"
            )

    # -- events --------------------------------------------------------

    def record_event(self, stream: Stream) -> Event:
        ev = Event(stream, next(stream._events))

        def run():
            ev.timestamp_ns = time.perf_counter_ns()
            ev._done.set()

        self._submit(stream, None, run)
        return ev

    @staticmethod
    def elapsed_ms(start: Event, end: Event) -> float:
        if start.stream is end.stream and end.seq < start.seq:
            raise OrderingError("end event was recorded before start event")
        start.wait()
        end.wait()
        delta = end.timestamp_ns - start.timestamp_ns
        if delta < 0:
            raise OrderingError(f"end event precedes start event by {-delta} ns")
        return delta / 1e6


def _prune(futures: list[Future]) -> list[Future]:
    # completed-ok work needs no further tracking; failures stay until a sync reports them
    return [f for f in futures if not f.done() or f.exception() is not None]


def _wait_and_raise(futures: Iterable[Future]) -> None:
    futures = list(futures)
    wait(futures)
    for f in futures:
        exc = f.exception()
        if exc is not None:
            raise exc


def create_runtime(specs: Sequence[DeviceSpec], **kwargs: Any) -> Runtime:
    return Runtime(specs, **kwargs)


def uniform_specs(count: int, memory_capacity: int) -> list[DeviceSpec]:
    if count < 1:
        raise ConfigurationError(f"device count must be >= 1, got {count}")
    return [DeviceSpec(i, memory_capacity) for i in range(count)]


class BufferScope:
    """Frees every buffer it allocated on exit, error or not."""

    def __init__(self, runtime: Runtime):
        self.runtime = runtime
        self.buffers: list[DeviceBuffer] = []

    def alloc(self, device_id: int, length_bytes: int, element_kind: str = "u8") -> DeviceBuffer:
        buf = self.runtime.alloc(device_id, length_bytes, element_kind)
        self.buffers.append(buf)
        return buf

    def alloc_array(self, device_id: int, count: int, element_kind: str) -> DeviceBuffer:
        buf = self.runtime.alloc_array(device_id, count, element_kind)
        self.buffers.append(buf)
        return buf

    def upload(self, device_id: int, array: np.ndarray, element_kind: str, stream: Stream | None = None) -> DeviceBuffer:
        arr = np.ascontiguousarray(array, dtype=ELEMENT_KINDS[element_kind])
        buf = self.alloc(device_id, arr.nbytes, element_kind)
        self.runtime.memcpy_h2d(buf, arr, stream)
        return buf

    def __enter__(self) -> "BufferScope":
        return self

    def __exit__(self, *exc) -> None:
        for buf in reversed(self.buffers):
            if buf.live:
                self.runtime.free(buf)
        self.buffers.clear()
