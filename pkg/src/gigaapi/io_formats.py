"""File codecs: binary PPM/PGM, signal and spectrum text, benchmark CSV, trace export."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import FormatError, ParseError
from .images import ImageGray8, ImageRgb8
from .runtime import ActivityTrace, TraceRecord

_WS = b" \t\r\n"


# -- netpbm -------------------------------------------------------------

def _parse_netpbm(blob: bytes, magic: bytes) -> tuple[int, int, bytes]:
    if blob[:2] != magic:
        raise FormatError(f"expected magic {magic.decode()}, got {blob[:2]!r}")
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(blob):
            raise FormatError("truncated header")
        c = blob[pos : pos + 1]
        if c in (b" ", b"\t", b"\r", b"\n"):
            pos += 1
        elif c == b"#":
            end = blob.find(b"\n", pos)
            pos = len(blob) if end < 0 else end + 1
        else:
            m = re.compile(rb"\d+").match(blob, pos)
            if not m:
                raise FormatError(f"bad header token at byte {pos}")
            fields.append(int(m.group()))
            pos = m.end()
    if pos >= len(blob) or blob[pos] not in _WS:
        raise FormatError("header must end with a single whitespace byte")
    pos += 1
    w, h, maxval = fields
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    if w < 1 or h < 1:
        raise FormatError(f"invalid dimensions {w}x{h}")
    return w, h, blob[pos:]


def decode_ppm(blob: bytes) -> ImageRgb8:
    w, h, payload = _parse_netpbm(blob, b"P6")
    if len(payload) != 3 * w * h:
        raise FormatError(f"payload is {len(payload)} bytes, expected {3 * w * h}")
    return ImageRgb8(w, h, np.frombuffer(payload, dtype=np.uint8).copy())


def decode_pgm(blob: bytes) -> ImageGray8:
    w, h, payload = _parse_netpbm(blob, b"P5")
    if len(payload) != w * h:
        raise FormatError(f"payload is {len(payload)} bytes, expected {w * h}")
    return ImageGray8(w, h, np.frombuffer(payload, dtype=np.uint8).copy())


def encode_ppm(img: ImageRgb8) -> bytes:
    return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.data.tobytes()


def encode_pgm(img: ImageGray8) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.data.tobytes()


def read_ppm(path) -> ImageRgb8:
    return decode_ppm(Path(path).read_bytes())


def write_ppm(path, img: ImageRgb8) -> None:
    Path(path).write_bytes(encode_ppm(img))


def read_pgm(path) -> ImageGray8:
    return decode_pgm(Path(path).read_bytes())


def write_pgm(path, img: ImageGray8) -> None:
    Path(path).write_bytes(encode_pgm(img))


def derived_path(path, suffix: str, ext: str) -> Path:
    """``cat.ppm`` + ``_grayscale`` + ``.pgm`` -> ``cat_grayscale.pgm`` next to the input."""
    p = Path(path)
    return p.with_name(f"{p.stem}{suffix}{ext}")


# -- signals and spectra ------------------------------------------------

def write_signal(path, samples) -> None:
    x = np.asarray(samples, dtype=np.float32).reshape(-1)
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in x))


def read_signal(path) -> np.ndarray:
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ParseError(f"not a number: {line!r}", lineno) from None
    x = np.array(values, dtype=np.float32)
    if not np.all(np.isfinite(x)):
        raise ParseError("signal contains non-finite samples")
    return x


def format_spectrum(spectrum) -> str:
    """One ``<re> <im>`` line per bin; chunked spectra get a ``# chunk <k>`` line per chunk."""
    out = io.StringIO()
    chunked = spectrum.num_chunks > 1
    for k, block in enumerate(spectrum.chunks()):
        if chunked:
            out.write(f"# chunk {k}\n")
        for z in block:
            # + 0.0 folds negative zero
            out.write(f"{float(z.real) + 0.0:.6f} {float(z.imag) + 0.0:.6f}\n")
    return out.getvalue()


def write_spectrum(path, spectrum) -> None:
    try:
        Path(path).write_text(format_spectrum(spectrum))
    except OSError as exc:
        raise FormatError(f"cannot write spectrum to {path}: {exc}") from exc


def read_spectrum(path) -> list[np.ndarray]:
    """Parse a spectrum file back into one complex array per chunk."""
    chunks: list[list[complex]] = []
    current: list[complex] | None = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.startswith("# chunk"):
            current = []
            chunks.append(current)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<re> <im>', got {line!r}", lineno)
        if current is None:
            current = []
            chunks.append(current)
        try:
            current.append(complex(float(parts[0]), float(parts[1])))
        except ValueError:
            raise ParseError(f"bad number in {line!r}", lineno) from None
    return [np.array(c, dtype=np.complex128) for c in chunks]


# -- benchmark CSV --------------------------------------------------------

BENCH_HEADER = ["op", "impl", "size", "elapsed_ms", "status"]


@dataclass(frozen=True)
class BenchRecord:
    op: str
    impl: str  # single | multi
    size: str
    elapsed_ms: float
    status: str = "ok"  # ok | oom

    def __post_init__(self) -> None:
        for name in ("op", "size"):
            if any(not ch.isprintable() for ch in getattr(self, name)):
                raise ValueError(f"{name} must be printable text, got {getattr(self, name)!r}")
        if self.impl not in ("single", "multi"):
            raise ValueError(f"impl must be 'single' or 'multi', got {self.impl!r}")
        if self.status not in ("ok", "oom"):
            raise ValueError(f"status must be 'ok' or 'oom', got {self.status!r}")
        if not (math.isfinite(self.elapsed_ms) and self.elapsed_ms >= 0):
            raise ValueError(f"elapsed_ms must be finite and >= 0, got {self.elapsed_ms}")


def format_bench_csv(records: Iterable[BenchRecord]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for r in records:
        w.writerow([r.op, r.impl, r.size, repr(float(r.elapsed_ms)), r.status])
    return out.getvalue()


def parse_bench_csv(text: str) -> list[BenchRecord]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header != BENCH_HEADER:
        raise ParseError(f"expected header {','.join(BENCH_HEADER)}, got {header}", 1)
    records = []
    for lineno, row in enumerate(rows, 2):
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, got {len(row)}", lineno)
        try:
            records.append(BenchRecord(row[0], row[1], row[2], float(row[3]), row[4]))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return records


def write_bench_csv(path, records: Iterable[BenchRecord]) -> None:
    Path(path).write_text(format_bench_csv(records))


def read_bench_csv(path) -> list[BenchRecord]:
    return parse_bench_csv(Path(path).read_text())


# -- trace export -------------------------------------------------------------

def format_trace(trace: Iterable[TraceRecord]) -> str:
    lines = []
    for r in trace:
        if "\t" in r.label or "\n" in r.label:
            raise FormatError(f"trace label may not contain tabs or newlines: {r.label!r}")
        lines.append(f"{r.device_id}\t{r.kind}\t{r.start_ns}\t{r.end_ns}\t{r.label}\n")
    return "".join(lines)


def parse_trace(text: str) -> ActivityTrace:
    trace = ActivityTrace()
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ParseError(f"expected 5 tab-separated fields, got {len(parts)}", lineno)
        try:
            dev, start, end = int(parts[0]), int(parts[2]), int(parts[3])
        except ValueError:
            raise ParseError(f"bad integer field in {line!r}", lineno) from None
        if start > end:
            raise ParseError("start_ns after end_ns", lineno)
        trace.append(TraceRecord(dev, parts[1], start, end, parts[4]))
    return trace


def write_trace(path, trace: Iterable[TraceRecord]) -> None:
    Path(path).write_text(format_trace(trace))


def read_trace(path) -> ActivityTrace:
    return parse_trace(Path(path).read_text())
