"""``giga`` command line.

Exit codes: 0 success, 1 usage error, 2 runtime error (including device OOM
and failed in-run correctness checks).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .api import DEFAULT_DEVICE_MEMORY, GigaConfig, GigaGpu
from .bench import SUITES, SuiteSpec, run_suite
from .errors import ConfigurationError, GigaError
from .io_formats import (
    derived_path,
    format_spectrum,
    read_ppm,
    read_signal,
    write_bench_csv,
    write_pgm,
    write_ppm,
    write_trace,
)
from .ops_fundamental import SIGNAL_KINDS, MiningJob, generate_signal, signal_from_samples

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError(f"must fit in 64 unsigned bits: {v}")
    return v


def _size_pair(text: str) -> tuple[int, int]:
    try:
        w, h = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("dimensions must be >= 1")
    return w, h


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--devices", type=_positive_int, default=d(2), help="number of virtual devices (default 2)")
    p.add_argument("--device-mem", type=_positive_int, default=d(None), metavar="BYTES", help="per-device memory capacity")
    p.add_argument("--seed", type=_u64, default=d(0), help="RNG seed")
    p.add_argument("--trace", type=Path, default=d(None), metavar="PATH", help="write the activity trace here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="giga", description="Multi-device operations on a virtual accelerator runtime.")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gray", parents=[common], help="RGB PPM -> grayscale PGM")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("upsample", parents=[common], help="nearest-neighbour upsampling")
    p.add_argument("input", type=Path)
    p.add_argument("--scale", type=_positive_int, required=True)
    p.add_argument("--sharpen", action="store_true", help="sharpen the upsampled image")
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("sharpen", parents=[common], help="3x3 Laplacian sharpening")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("fft", parents=[common], help="real-to-complex FFT of a generated or loaded signal")
    p.add_argument("--signal", choices=SIGNAL_KINDS, default="sine")
    p.add_argument("--input", type=Path, help="signal file, one sample per line")
    p.add_argument("--frequency", type=float, default=1.0)
    p.add_argument("--sample-rate", type=float, default=1024.0)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--chunked", action="store_true", help="per-device chunk transforms")
    p.add_argument("-o", "--output", type=Path, help="spectrum file (default stdout)")

    p = sub.add_parser("matmul", parents=[common], help="multiply two seeded random n x n matrices")
    p.add_argument("--size", type=_positive_int, required=True)

    p = sub.add_parser("vector", parents=[common], help="dot product or L2 norm of seeded random vectors")
    p.add_argument("--op", choices=("dot", "l2"), required=True)
    p.add_argument("--size", type=_positive_int, required=True)

    p = sub.add_parser("mine", parents=[common], help="simulated nonce search")
    p.add_argument("--data", required=True)
    p.add_argument("--target", type=_u64, required=True)
    p.add_argument("--start", type=_u64, default=0)
    p.add_argument("--count", type=_positive_int, default=100000)

    p = sub.add_parser("bench", parents=[common], help="run a benchmark suite")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--csv", type=Path, help="benchmark CSV output")
    p.add_argument("--out-dir", type=Path, help="directory for spectra and other artifacts")
    p.add_argument("--min-exp", type=_positive_int, default=1)
    p.add_argument("--max-exp", type=_positive_int)
    p.add_argument("--min-scale", type=_positive_int)
    p.add_argument("--max-scale", type=_positive_int)
    p.add_argument("--base-size", type=_size_pair, default=(64, 36), metavar="WxH")
    p.add_argument("--gray-size", type=_size_pair, default=(1920, 1080), metavar="WxH")
    p.add_argument("--kernel-delay", type=float, default=0.05, help="evidence suite kernel slowdown, seconds")
    return parser


def _gpu(args) -> GigaGpu:
    return GigaGpu(
        GigaConfig(
            device_count=args.devices,
            memory_capacity=args.device_mem or DEFAULT_DEVICE_MEMORY,
            rng_seed=args.seed,
        )
    )


def _cmd_gray(gpu, args) -> int:
    out = gpu.convert_to_grayscale(read_ppm(args.input))
    path = args.output or derived_path(args.input, "_grayscale", ".pgm")
    write_pgm(path, out)
    print(path)
    return EXIT_OK


def _cmd_upsample(gpu, args) -> int:
    img = read_ppm(args.input)
    out = gpu.upsample_then_sharpen(img, args.scale) if args.sharpen else gpu.upsample_image(img, args.scale)
    path = args.output or derived_path(args.input, f"_upsampled_x{args.scale}", ".ppm")
    write_ppm(path, out)
    print(path)
    return EXIT_OK


def _cmd_sharpen(gpu, args) -> int:
    out = gpu.sharpen_image(read_ppm(args.input))
    path = args.output or derived_path(args.input, "_sharpened", ".ppm")
    write_ppm(path, out)
    print(path)
    return EXIT_OK


def _cmd_fft(gpu, args) -> int:
    if args.input is not None:
        sig = signal_from_samples(read_signal(args.input), args.sample_rate)
    else:
        sig = generate_signal(args.signal, args.frequency, args.sample_rate, args.duration)
    spectrum = gpu.perform_fft_chunked(sig) if args.chunked else gpu.perform_fft(sig)
    text = format_spectrum(spectrum)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text)
    return EXIT_OK


def _cmd_matmul(gpu, args) -> int:
    rng = np.random.default_rng(args.seed)
    a = rng.uniform(0.0, 1.0, (args.size, args.size)).astype(np.float32)
    b = rng.uniform(0.0, 1.0, (args.size, args.size)).astype(np.float32)
    c = gpu.perform_matrix_multiplication(a, b).to_array()
    print(f"n={args.size} sum={float(c.sum(dtype=np.float64))!r} max_abs={float(np.abs(c).max())!r}")
    return EXIT_OK


def _cmd_vector(gpu, args) -> int:
    rng = np.random.default_rng(args.seed)
    x = rng.uniform(-10.0, 10.0, args.size).astype(np.float32)
    y = rng.uniform(-10.0, 10.0, args.size).astype(np.float32)
    value = gpu.compute_dot_product(x, y) if args.op == "dot" else gpu.compute_l2_norm(x)
    print(repr(value))
    return EXIT_OK


def _cmd_mine(gpu, args) -> int:
    nonce = gpu.mine(MiningJob(args.data.encode(), args.target, args.start, args.count))
    print("none" if nonce is None else nonce)
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        spec = _suite_spec(args)
    except ConfigurationError as exc:
        print(f"giga bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    result = run_suite(spec)
    if args.csv is not None:
        write_bench_csv(args.csv, result.records)
    for line in result.summary:
        print(line)
    return EXIT_OK if result.passed else EXIT_RUNTIME


def _suite_spec(args) -> SuiteSpec:
    return SuiteSpec(
        suite=args.suite,
        device_count=args.devices,
        device_mem=args.device_mem,
        seed=args.seed,
        min_exp=args.min_exp,
        max_exp=args.max_exp,
        min_scale=args.min_scale,
        max_scale=args.max_scale,
        base_size=args.base_size,
        gray_size=args.gray_size,
        kernel_delay=args.kernel_delay,
        out_dir=args.out_dir,
        trace_path=args.trace,
    )


_COMMANDS = {
    "gray": _cmd_gray,
    "upsample": _cmd_upsample,
    "sharpen": _cmd_sharpen,
    "fft": _cmd_fft,
    "matmul": _cmd_matmul,
    "vector": _cmd_vector,
    "mine": _cmd_mine,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "bench":
            return _cmd_bench(args)
        with _gpu(args) as gpu:
            try:
                return _COMMANDS[args.command](gpu, args)
            finally:
                if args.trace is not None:
                    write_trace(args.trace, gpu.runtime.trace_snapshot())
    except (GigaError, OSError) as exc:
        print(f"giga: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
