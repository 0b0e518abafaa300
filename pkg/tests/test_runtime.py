import threading
import time

import numpy as np
import pytest

from gigaapi.errors import (
    ConfigurationError,
    DeviceAffinityError,
    InvalidHandleError,
    KernelFault,
    OrderingError,
    OutOfDeviceMemory,
    SizeError,
)
from gigaapi.kernel_model import IndexSpace2D, register_kernel
from gigaapi.runtime import BufferScope, DeviceSpec, Runtime, create_runtime, uniform_specs

GiB = 1 << 30
ONE = IndexSpace2D(1, 1)


@register_kernel("test_sleep")
def _sleep(ctx, seconds):
    time.sleep(seconds)


@register_kernel("test_fill")
def _fill(ctx, buf, value):
    i = ctx.coord.linear_id
    ctx.store(buf, i, value, i < buf.shape[0])


@register_kernel("test_boom")
def _boom(ctx):
    raise RuntimeError("boom")


def small(capacity=100, n=1):
    return Runtime(uniform_specs(n, capacity))


def test_create_two_devices():
    with create_runtime([DeviceSpec(0, 24 * GiB), DeviceSpec(1, 24 * GiB)]) as rt:
        assert rt.device_count() == 2
        assert rt.allocated_bytes(0) == rt.allocated_bytes(1) == 0
        assert rt.trace_snapshot() == []


def test_single_device_runtime():
    with small() as rt:
        assert rt.device_count() == 1


@pytest.mark.parametrize("specs", [[], [DeviceSpec(0, 10), DeviceSpec(0, 10)], [DeviceSpec(1, 10)]])
def test_bad_device_sets(specs):
    with pytest.raises(ConfigurationError):
        Runtime(specs)


def test_capacity_must_be_positive():
    with pytest.raises(ConfigurationError):
        DeviceSpec(0, 0)


def test_alloc_boundary_and_oom():
    with small(100) as rt:
        b = rt.alloc(0, 100)
        assert rt.allocated_bytes(0) == 100
        rt.free(b)
        with pytest.raises(OutOfDeviceMemory):
            rt.alloc(0, 101)


def test_second_alloc_fails_first_unaffected():
    with small(100) as rt:
        a = rt.alloc(0, 60)
        with pytest.raises(OutOfDeviceMemory) as info:
            rt.alloc(0, 60)
        assert info.value.allocated == 60
        assert a.live and rt.allocated_bytes(0) == 60


def test_alloc_rejects_empty():
    with small() as rt:
        with pytest.raises(SizeError):
            rt.alloc(0, 0)


def test_free_accounting_and_double_free():
    with small(100) as rt:
        b = rt.alloc(0, 50)
        rt.free(b)
        assert rt.allocated_bytes(0) == 0
        with pytest.raises(InvalidHandleError):
            rt.free(b)
        full = rt.alloc(0, 100)
        assert full.length_bytes == 100


def test_roundtrip_bytes(rng):
    with small(4096) as rt:
        payload = rng.integers(0, 256, 1024, dtype=np.uint8).tobytes()
        b = rt.alloc(0, 1024)
        rt.memcpy_h2d(b, payload)
        assert rt.memcpy_d2h(b) == payload
        kinds = [r.kind for r in rt.trace_snapshot()]
        assert kinds == ["alloc", "h2d", "d2h"]


def test_size_mismatch():
    with small() as rt:
        b = rt.alloc(0, 10)
        with pytest.raises(SizeError):
            rt.memcpy_h2d(b, b"123")


def test_fresh_buffer_reads_zero():
    with small() as rt:
        assert rt.memcpy_d2h(rt.alloc(0, 16)) == bytes(16)


def test_launch_affinity(rt):
    buf = rt.alloc(1, 64, "f32")
    with pytest.raises(DeviceAffinityError):
        rt.launch(rt.create_stream(0), "test_fill", ONE, buf, 1.0)


def test_transfer_affinity(rt):
    buf = rt.alloc(1, 4)
    with pytest.raises(DeviceAffinityError):
        rt.memcpy_h2d(buf, b"abcd", rt.create_stream(0))


def test_same_stream_fifo(rt):
    s = rt.create_stream(0)
    for _ in range(2):
        rt.launch(s, "test_sleep", ONE, 0.01)
    rt.synchronize_stream(s)
    k = rt.trace_snapshot().kernels()
    assert len(k) == 2
    assert k[0].end_ns <= k[1].start_ns
    assert k[0].stream_id == k[1].stream_id == s.id


def test_cross_device_overlap(rt):
    s0, s1 = rt.create_stream(0), rt.create_stream(1)
    rt.launch(s0, "test_sleep", ONE, 0.05)
    rt.launch(s1, "test_sleep", ONE, 0.05)
    rt.synchronize()
    a, b = rt.trace_snapshot().kernels()
    assert a.device_id != b.device_id
    assert min(a.end_ns, b.end_ns) > max(a.start_ns, b.start_ns)


def test_sync_empty_stream(rt):
    t0 = time.perf_counter()
    rt.synchronize_stream(rt.create_stream(0))
    assert time.perf_counter() - t0 < 0.05


def test_sync_waits_for_kernel(rt):
    s = rt.create_stream(0)
    t0 = time.perf_counter()
    rt.launch(s, "test_sleep", ONE, 0.05)
    rt.synchronize_stream(s)
    assert time.perf_counter() - t0 >= 0.05


def test_launch_is_asynchronous(rt):
    s = rt.create_stream(0)
    t0 = time.perf_counter()
    rt.launch(s, "test_sleep", ONE, 0.1)
    assert time.perf_counter() - t0 < 0.05
    rt.synchronize_device(0)


def test_d2h_after_sync_sees_kernel_writes(rt):
    buf = rt.alloc_array(0, 300, "f32")
    s = rt.create_stream(0)
    rt.launch(s, "test_fill", IndexSpace2D.linear(300), buf, 2.5)
    rt.synchronize_stream(s)
    assert np.all(rt.download(buf) == 2.5)


def test_async_d2h_into_host_array(rt):
    buf = rt.upload(0, np.arange(10, dtype=np.float32), "f32")
    s = rt.create_stream(0)
    out = np.zeros(10, dtype=np.float32)
    rt.launch(s, "test_fill", IndexSpace2D.linear(10), buf, 7.0)
    rt.memcpy_d2h(buf, s, out)
    rt.synchronize_stream(s)
    assert np.all(out == 7.0)


def test_event_elapsed(rt):
    s = rt.create_stream(0)
    a, b = rt.record_event(s), rt.record_event(s)
    assert 0 <= Runtime.elapsed_ms(a, b) < 50
    c = rt.record_event(s)
    rt.launch(s, "test_sleep", ONE, 0.02)
    d = rt.record_event(s)
    assert Runtime.elapsed_ms(c, d) >= 20
    with pytest.raises(OrderingError):
        Runtime.elapsed_ms(d, c)


def test_trace_snapshot_is_a_copy(rt):
    assert rt.trace_snapshot() == []
    rt.alloc(0, 8)
    snap = rt.trace_snapshot()
    assert [r.kind for r in snap] == ["alloc"]
    rt.alloc(1, 8)
    assert len(snap) == 1


def test_kernel_errors_surface_on_sync(rt):
    s = rt.create_stream(0)
    rt.launch(s, "test_boom", ONE)
    with pytest.raises(KernelFault, match="boom"):
        rt.synchronize_stream(s)


def test_unknown_kernel(rt):
    with pytest.raises(ConfigurationError):
        rt.launch(rt.create_stream(0), "no_such_kernel", ONE)


def test_scope_frees_on_error(rt):
    with pytest.raises(OutOfDeviceMemory):
        with BufferScope(rt) as scope:
            scope.alloc(0, 1000)
            scope.alloc(0, 1 << 40)
    assert rt.allocated_bytes(0) == 0


def test_stream_policy(rt):
    assert rt.stream_for_op(0) is not rt.stream_for_op(0)
    with Runtime(uniform_specs(1, 10), stream_policy="per_device") as r2:
        assert r2.stream_for_op(0) is r2.stream_for_op(0)
    with pytest.raises(ConfigurationError):
        Runtime(uniform_specs(1, 10), stream_policy="bogus")


def test_accounting_under_concurrent_callers(rt):
    def worker():
        for _ in range(50):
            rt.free(rt.alloc(0, 1000))
            rt.alloc(1, 10)

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert rt.allocated_bytes(0) == 0
    assert rt.allocated_bytes(1) == sum(b.length_bytes for b in rt.live_buffers(1)) == 2000
