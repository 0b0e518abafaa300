"""Benchmark suites: single-device vs multi-device sweeps with in-run correctness checks.

Each suite returns a :class:`SuiteResult`; ``passed`` is False whenever a
numerical cross-check failed, regardless of the timings collected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .api import DEFAULT_DEVICE_MEMORY, GigaConfig, GigaGpu
from .errors import ConfigurationError, OutOfDeviceMemory
from .images import ImageRgb8, synthesize_image
from .io_formats import BenchRecord, write_spectrum, write_trace
from .ops_fundamental import SIGNAL_KINDS, fft_single, generate_signal
from .ops_image import upsample_device_bytes
from .runtime import ActivityTrace, Runtime

SUITES = ("evidence", "fft", "matmul", "vector", "upsample", "sharpen", "grayscale")

MATMUL_MAX_EXP = 15
MATMUL_DESK_EXP = 10
VECTOR_MAX_EXP = 27  # 2**27 = 67108864 elements
VECTOR_DESK_EXP = 20
UPSAMPLE_SCALES = (2, 40)
SHARPEN_SCALES = (2, 20)
# where the single-device upsample sweep first runs out of memory when no capacity is given
UPSAMPLE_SINGLE_FAIL_SCALE = 24
FFT_PARAMS = dict(frequency=1.0, sample_rate=1024.0, duration=1.0)

VECTOR_REL_TOL = 1e-5
MATMUL_REL_TOL = 1e-6
CHUNK_ABS_TOL = 1e-4


@dataclass
class SuiteSpec:
    suite: str
    device_count: int = 2
    device_mem: int | None = None
    seed: int = 0
    min_exp: int = 1
    max_exp: int | None = None
    min_scale: int | None = None
    max_scale: int | None = None
    base_size: tuple[int, int] = (64, 36)  # 4K frame (3840x2160) at 1/60 scale
    gray_size: tuple[int, int] = (1920, 1080)
    kernel_delay: float = 0.05
    out_dir: Path | None = None
    trace_path: Path | None = None

    def __post_init__(self) -> None:
        if self.suite not in SUITES:
            raise ConfigurationError(f"unknown suite {self.suite!r}; expected one of {SUITES}")
        if self.device_count < 1:
            raise ConfigurationError("device_count must be >= 1")
        if self.min_exp < 1:
            raise ConfigurationError("min_exp must be >= 1")
        cap = {"matmul": MATMUL_MAX_EXP, "vector": VECTOR_MAX_EXP}.get(self.suite)
        if cap is not None and self.max_exp is not None and self.max_exp > cap:
            raise ConfigurationError(f"{self.suite} sweep is capped at 2^{cap}")
        lo, hi = {"upsample": UPSAMPLE_SCALES, "sharpen": SHARPEN_SCALES}.get(self.suite, (1, 1 << 30))
        for v in (self.min_scale, self.max_scale):
            if v is not None and not lo <= v <= hi:
                raise ConfigurationError(f"{self.suite} scales must lie in [{lo}, {hi}]")


@dataclass
class SuiteResult:
    suite: str
    records: list[BenchRecord] = field(default_factory=list)
    summary: list[str] = field(default_factory=list)
    passed: bool = True
    trace: ActivityTrace | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def fail(self, message: str) -> None:
        self.passed = False
        self.summary.append(f"CHECK FAILED: {message}")


def timed(runtime: Runtime, fn: Callable[[], Any]) -> tuple[Any, float, BaseException | None]:
    """Run ``fn`` bracketed by events on every device; returns (result, elapsed_ms, error).

    Devices execute stream work in FIFO order, so events enqueued before and
    after the (blocking) call bracket all of its device work.
    """
    n = runtime.device_count()
    starts = [runtime.record_event(runtime.create_stream(d)) for d in range(n)]
    result, error = None, None
    try:
        result = fn()
    except OutOfDeviceMemory as exc:
        error = exc
    ends = [runtime.record_event(runtime.create_stream(d)) for d in range(n)]
    for ev in starts + ends:
        ev.wait()
    span_ns = max(e.timestamp_ns for e in ends) - min(s.timestamp_ns for s in starts)
    return result, max(0.0, span_ns / 1e6), error


def _gpu(spec: SuiteSpec, memory: int | None = None, **kw) -> GigaGpu:
    mem = memory or spec.device_mem or DEFAULT_DEVICE_MEMORY
    return GigaGpu(GigaConfig(device_count=spec.device_count, memory_capacity=mem, rng_seed=spec.seed, **kw))


def _impls(spec: SuiteSpec) -> list[tuple[str, int]]:
    return [("single", 1), ("multi", spec.device_count)]


def _record(op: str, impl: str, size, elapsed: float, err) -> BenchRecord:
    return BenchRecord(op, impl, str(size), elapsed, "oom" if err is not None else "ok")


# -- matmul ---------------------------------------------------------------------

def suite_matmul(spec: SuiteSpec) -> SuiteResult:
    res = SuiteResult("matmul")
    max_exp = spec.max_exp if spec.max_exp is not None else MATMUL_DESK_EXP
    with _gpu(spec) as gpu:
        for k in range(spec.min_exp, max_exp + 1):
            n = 1 << k
            rng = np.random.default_rng(spec.seed)
            a = rng.uniform(0.0, 1.0, (n, n)).astype(np.float32)
            b = rng.uniform(0.0, 1.0, (n, n)).astype(np.float32)
            outs = {}
            for impl, nd in _impls(spec):
                c, ms, err = timed(gpu.runtime, lambda: gpu.perform_matrix_multiplication(a, b, nd))
                res.records.append(_record("matmul", impl, n, ms, err))
                if err is None:
                    outs[impl] = c.to_array()
            if len(outs) == 2:
                s, m = outs["single"], outs["multi"]
                if not np.all(np.abs(m - s) <= MATMUL_REL_TOL * np.abs(s)):
                    res.fail(f"matmul n={n}: multi-device result differs from single-device")
    ooms = sum(r.status == "oom" for r in res.records)
    res.summary.append(f"matmul: {len(res.records)} records, {ooms} oom")
    return res


# -- vector ---------------------------------------------------------------------

def suite_vector(spec: SuiteSpec) -> SuiteResult:
    res = SuiteResult("vector")
    max_exp = spec.max_exp if spec.max_exp is not None else VECTOR_DESK_EXP
    worst = 0.0
    with _gpu(spec) as gpu:
        for k in range(spec.min_exp, max_exp + 1):
            n = 1 << k
            rng = np.random.default_rng(spec.seed)
            x = rng.uniform(-10.0, 10.0, n).astype(np.float32)
            y = rng.uniform(-10.0, 10.0, n).astype(np.float32)
            x64, y64 = x.astype(np.float64), y.astype(np.float64)
            oracle = {"dot": float(np.dot(x64, y64)), "l2": float(np.sqrt(np.dot(x64, x64)))}
            for op in ("dot", "l2"):
                for impl, nd in _impls(spec):
                    if op == "dot":
                        fn = lambda: gpu.compute_dot_product(x, y, nd)
                    else:
                        fn = lambda: gpu.compute_l2_norm(x, nd)
                    val, ms, err = timed(gpu.runtime, fn)
                    res.records.append(_record(op, impl, n, ms, err))
                    if err is None:
                        ref = oracle[op]
                        rel = abs(val - ref) / abs(ref) if ref else abs(val)
                        worst = max(worst, rel)
                        if rel > VECTOR_REL_TOL:
                            res.fail(f"{op} n={n} {impl}: rel err {rel:.3e} vs f64 oracle")
    res.summary.append(f"vector: {len(res.records)} records, worst rel err vs f64 oracle {worst:.3e}")
    res.extra["worst_rel_err"] = worst
    return res


# -- upsample -------------------------------------------------------------------

def crossover_capacity(width: int, height: int, single_fail_scale: int = UPSAMPLE_SINGLE_FAIL_SCALE) -> int:
    """Smallest per-device capacity at which one device upsamples up to ``single_fail_scale - 1``."""
    return sum(upsample_device_bytes(width, height, single_fail_scale - 1, 1))


def predict_first_oom(width: int, height: int, capacity: int, num_devices: int, scales) -> int | None:
    """First scale whose largest per-device allocation exceeds ``capacity``."""
    for s in scales:
        if max(upsample_device_bytes(width, height, s, num_devices)) > capacity:
            return s
    return None


def _base_image(spec: SuiteSpec) -> ImageRgb8:
    w, h = spec.base_size
    return synthesize_image(w, h, spec.seed)


def suite_upsample(spec: SuiteSpec, image: ImageRgb8 | None = None) -> SuiteResult:
    res = SuiteResult("upsample")
    img = image or _base_image(spec)
    cap = spec.device_mem or crossover_capacity(img.width, img.height)
    scales = range(spec.min_scale or UPSAMPLE_SCALES[0], (spec.max_scale or UPSAMPLE_SCALES[1]) + 1)
    first_oom: dict[str, int | None] = {"single": None, "multi": None}
    with _gpu(spec, memory=cap) as gpu:
        for s in scales:
            outs = {}
            for impl, nd in _impls(spec):
                out, ms, err = timed(gpu.runtime, lambda: gpu.upsample_image(img, s, nd))
                res.records.append(_record("upsample", impl, s, ms, err))
                if err is None:
                    outs[impl] = out
                elif first_oom[impl] is None:
                    first_oom[impl] = s
            if len(outs) == 2 and outs["single"] != outs["multi"]:
                res.fail(f"upsample scale {s}: split output differs from single-device output")
    res.extra.update(capacity=cap, first_oom=first_oom)
    res.summary.append(f"upsample: base {img.width}x{img.height}, device capacity {cap} bytes")
    for impl in ("single", "multi"):
        f = first_oom[impl]
        res.summary.append(
            f"  {impl}: " + (f"last ok scale {f - 1}, first oom at {f}" if f else "no oom in sweep")
        )
    return res


# -- fft -------------------------------------------------------------------------

def _fft_devices(count: int) -> int:
    # chunks must be power-of-two lengths, so use a power-of-two device count
    return 1 << (count.bit_length() - 1)


def suite_fft(spec: SuiteSpec) -> SuiteResult:
    res = SuiteResult("fft")
    nd = _fft_devices(spec.device_count)
    if nd != spec.device_count:
        res.summary.append(f"fft: chunked run uses {nd} of {spec.device_count} devices (power of two)")
    with _gpu(spec) as gpu:
        for kind in SIGNAL_KINDS:
            sig = generate_signal(kind, **FFT_PARAMS)
            full, ms1, err1 = timed(gpu.runtime, lambda: gpu.perform_fft(sig))
            res.records.append(_record("fft", "single", kind, ms1, err1))
            chunked, ms2, err2 = timed(gpu.runtime, lambda: gpu.perform_fft_chunked(sig, nd))
            res.records.append(_record("fft", "multi", kind, ms2, err2))
            if err1 or err2:
                continue
            clen = len(sig) // nd
            for k in range(nd):
                ref = fft_single(gpu.runtime, k % gpu.device_count, sig.samples[k * clen : (k + 1) * clen])
                diff = float(np.max(np.abs(chunked.chunk(k) - ref.bins)))
                if diff > CHUNK_ABS_TOL:
                    res.fail(f"fft {kind}: chunk {k} differs from single-device transform by {diff:.3e}")
            if spec.out_dir is not None:
                out = Path(spec.out_dir)
                out.mkdir(parents=True, exist_ok=True)
                write_spectrum(out / f"fft_{kind}_single.txt", full)
                write_spectrum(out / f"fft_{kind}_chunked.txt", chunked)
            res.extra[kind] = int(np.argmax(full.magnitudes))
    res.summary.append(
        "fft: dominant bins " + ", ".join(f"{k}={res.extra[k]}" for k in SIGNAL_KINDS if k in res.extra)
    )
    return res


# -- sharpen / grayscale ------------------------------------------------------------

def suite_sharpen(spec: SuiteSpec, image: ImageRgb8 | None = None) -> SuiteResult:
    res = SuiteResult("sharpen")
    img = image or _base_image(spec)
    scales = range(spec.min_scale or SHARPEN_SCALES[0], (spec.max_scale or SHARPEN_SCALES[1]) + 1)
    upsample_ms = {"single": 0.0, "multi": 0.0}
    with _gpu(spec) as gpu:
        for s in scales:
            outs = {}
            for impl, nd in _impls(spec):
                up, ms_up, err = timed(gpu.runtime, lambda: gpu.upsample_image(img, s, nd))
                upsample_ms[impl] += ms_up
                if err is not None:
                    res.records.append(_record("sharpen", impl, s, ms_up, err))
                    continue
                out, ms, err = timed(gpu.runtime, lambda: gpu.sharpen_image(up, nd))
                res.records.append(_record("sharpen", impl, s, ms, err))
                if err is None:
                    outs[impl] = out
            if len(outs) == 2 and outs["single"] != outs["multi"]:
                res.fail(f"sharpen scale {s}: split output differs from single-device output")
    res.summary.append(
        f"sharpen: {len(res.records)} records; upsample stage total "
        f"single {upsample_ms['single']:.1f} ms, multi {upsample_ms['multi']:.1f} ms"
    )
    return res


def suite_grayscale(spec: SuiteSpec, image: ImageRgb8 | None = None) -> SuiteResult:
    res = SuiteResult("grayscale")
    img = image or synthesize_image(*spec.gray_size, seed=spec.seed)
    outs = {}
    with _gpu(spec) as gpu:
        for impl, nd in _impls(spec):
            out, ms, err = timed(gpu.runtime, lambda: gpu.convert_to_grayscale(img, nd))
            res.records.append(_record("grayscale", impl, f"{img.width}x{img.height}", ms, err))
            if err is None:
                outs[impl] = out
    if len(outs) == 2 and outs["single"] != outs["multi"]:
        res.fail("grayscale: split output differs from single-device output")
    res.summary.append(f"grayscale: {img.width}x{img.height}, single vs multi byte-identical: {res.passed}")
    return res


# -- parallelism evidence -----------------------------------------------------------

def kernel_overlap_ns(trace: ActivityTrace) -> int:
    """Largest wall-clock overlap between kernel intervals on two different devices (0 if none)."""
    kernels = trace.kernels()
    best = 0
    for i, a in enumerate(kernels):
        for b in kernels[i + 1 :]:
            if a.device_id != b.device_id:
                best = max(best, min(a.end_ns, b.end_ns) - max(a.start_ns, b.start_ns))
    return best


def suite_evidence(spec: SuiteSpec) -> SuiteResult:
    res = SuiteResult("evidence")
    w, h = spec.base_size
    img = synthesize_image(w * 8, h * 8, spec.seed)
    with _gpu(spec, kernel_delay=spec.kernel_delay) as gpu:
        gpu.runtime.clear_trace()
        _, ms, _ = timed(gpu.runtime, lambda: gpu.upsample_image(img, 4))
        trace = gpu.runtime.trace_snapshot()
    res.trace = trace
    devices = sorted({r.device_id for r in trace.kernels()})
    overlap = kernel_overlap_ns(trace)
    res.passed = len(devices) >= 2 and overlap > 0
    res.extra.update(overlap_ns=overlap, kernel_devices=devices, elapsed_ms=ms)
    if spec.trace_path is not None:
        write_trace(spec.trace_path, trace)
    res.summary.append(f"evidence: kernels ran on devices {devices}; max cross-device overlap {overlap} ns")
    res.summary.append("evidence: PASS" if res.passed else "evidence: FAIL (no overlapping kernels on two devices)")
    return res


def run_suite(spec: SuiteSpec) -> SuiteResult:
    return {
        "evidence": suite_evidence,
        "fft": suite_fft,
        "matmul": suite_matmul,
        "vector": suite_vector,
        "upsample": suite_upsample,
        "sharpen": suite_sharpen,
        "grayscale": suite_grayscale,
    }[spec.suite](spec)
