"""Test-signal generation for the FFT suite."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError

SIGNAL_KINDS = ("sine", "sawtooth", "square", "chirp")

# linear chirp sweeps from f to CHIRP_RATIO * f over the signal duration
CHIRP_RATIO = 8.0


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray = field(repr=False)
    sample_rate: float
    kind: str = "custom"
    frequency: float = 0.0
    duration: float = 0.0

    def __len__(self) -> int:
        return len(self.samples)


def generate_signal(kind: str, frequency: float, sample_rate: float, duration: float) -> Signal:
    if kind not in SIGNAL_KINDS:
        raise ConfigurationError(f"unknown signal kind {kind!r}; expected one of {SIGNAL_KINDS}")
    for name, v in (("frequency", frequency), ("sample_rate", sample_rate), ("duration", duration)):
        if not v > 0:
            raise ConfigurationError(f"{name} must be > 0, got {v}")
    n = int(round(sample_rate * duration))
    if n < 1:
        raise ConfigurationError("signal would have no samples")
    t = np.arange(n, dtype=np.float64) / sample_rate
    phase = frequency * t
    if kind == "sine":
        x = np.sin(2 * np.pi * phase)
    elif kind == "sawtooth":
        x = 2.0 * (phase - np.floor(phase + 0.5))
    elif kind == "square":
        # sign of sin(2 pi f t) read off the phase so exact zero crossings give +1
        frac = phase - np.floor(phase)
        x = np.where(frac <= 0.5, 1.0, -1.0)
    else:
        k = (CHIRP_RATIO * frequency - frequency) / duration
        x = np.sin(2 * np.pi * (frequency * t + 0.5 * k * t * t))
    return Signal(x.astype(np.float32), float(sample_rate), kind, float(frequency), float(duration))


def signal_from_samples(samples, sample_rate: float = 1.0) -> Signal:
    x = np.asarray(samples, dtype=np.float32).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("signal samples must be finite")
    return Signal(x, float(sample_rate), "custom", 0.0, len(x) / sample_rate)
