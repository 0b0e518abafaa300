"""``GigaGpu``: one handle owning a runtime and exposing every operation."""

from __future__ import annotations

from dataclasses import dataclass

from . import ops_image
from .errors import ConfigurationError
from .images import ImageGray8, ImageRgb8
from .ops_fundamental import (
    ComplexSpectrum,
    MatrixF32,
    MiningJob,
    Signal,
    dot,
    fft_chunked,
    fft_single,
    generate_signal,
    l2_norm,
    matmul,
    mine_simulated,
)
from .runtime import Runtime, uniform_specs

DEFAULT_DEVICE_MEMORY = 1 << 30


@dataclass(frozen=True)
class GigaConfig:
    device_count: int = 2
    memory_capacity: int = DEFAULT_DEVICE_MEMORY
    rng_seed: int = 0
    stream_policy: str = "per_op"
    kernel_delay: float = 0.0

    def __post_init__(self) -> None:
        if self.device_count < 1:
            raise ConfigurationError(f"device_count must be >= 1, got {self.device_count}")
        if self.memory_capacity <= 0:
            raise ConfigurationError(f"memory_capacity must be > 0, got {self.memory_capacity}")
        if not 0 <= self.rng_seed < 1 << 64:
            raise ConfigurationError("rng_seed must be an unsigned 64-bit value")


class GigaGpu:
    """Facade over a :class:`Runtime`; every call is split over ``config.device_count`` devices.

    Use as a context manager, or call :meth:`close`, to release the devices.
    """

    def __init__(self, config: GigaConfig | None = None):
        self.config = config or GigaConfig()
        self.runtime = Runtime(
            uniform_specs(self.config.device_count, self.config.memory_capacity),
            stream_policy=self.config.stream_policy,
            kernel_delay=self.config.kernel_delay,
        )

    @property
    def device_count(self) -> int:
        return self.config.device_count

    def close(self) -> None:
        self.runtime.close()

    def __enter__(self) -> "GigaGpu":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _n(self, num_devices: int | None) -> int:
        return self.config.device_count if num_devices is None else num_devices

    # image operations
    def upsample_image(self, img: ImageRgb8, scale: int, num_devices: int | None = None) -> ImageRgb8:
        return ops_image.upsample_nn(self.runtime, img, scale, self._n(num_devices))

    def sharpen_image(self, img: ImageRgb8, num_devices: int | None = None) -> ImageRgb8:
        return ops_image.sharpen(self.runtime, img, self._n(num_devices))

    def upsample_then_sharpen(self, img: ImageRgb8, scale: int, num_devices: int | None = None) -> ImageRgb8:
        return ops_image.upsample_then_sharpen(self.runtime, img, scale, self._n(num_devices))

    def convert_to_grayscale(self, img: ImageRgb8, num_devices: int | None = None) -> ImageGray8:
        return ops_image.grayscale(self.runtime, img, self._n(num_devices))

    # fundamental operations
    def generate_signal(self, kind: str, frequency: float = 1.0, sample_rate: float = 1024.0, duration: float = 1.0) -> Signal:
        return generate_signal(kind, frequency, sample_rate, duration)

    def perform_fft(self, signal, device_id: int = 0) -> ComplexSpectrum:
        return fft_single(self.runtime, device_id, signal)

    def perform_fft_chunked(self, signal, num_devices: int | None = None) -> ComplexSpectrum:
        return fft_chunked(self.runtime, signal, self._n(num_devices))

    def perform_matrix_multiplication(self, a, b, num_devices: int | None = None) -> MatrixF32:
        return matmul(self.runtime, a, b, self._n(num_devices))

    def compute_dot_product(self, x, y, num_devices: int | None = None) -> float:
        return dot(self.runtime, x, y, self._n(num_devices))

    def compute_l2_norm(self, x, num_devices: int | None = None) -> float:
        return l2_norm(self.runtime, x, self._n(num_devices))

    def mine(self, job: MiningJob, num_devices: int | None = None) -> int | None:
        return mine_simulated(self.runtime, job, self._n(num_devices))
