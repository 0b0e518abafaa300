"""In-memory 8-bit images (row-major, RGB interleaved)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SizeError


@dataclass(frozen=True, eq=False)
class ImageRgb8:
    width: int
    height: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise SizeError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        if self.data.dtype != np.uint8 or self.data.size != 3 * self.width * self.height:
            raise SizeError(f"RGB image {self.width}x{self.height} needs {3 * self.width * self.height} bytes")

    @classmethod
    def from_array(cls, arr) -> "ImageRgb8":
        a = np.ascontiguousarray(arr, dtype=np.uint8)
        if a.ndim != 3 or a.shape[2] != 3:
            raise SizeError(f"expected (height, width, 3), got {a.shape}")
        return cls(a.shape[1], a.shape[0], a.reshape(-1))

    def to_array(self) -> np.ndarray:
        return self.data.reshape(self.height, self.width, 3)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ImageRgb8)
            and (self.width, self.height) == (other.width, other.height)
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True, eq=False)
class ImageGray8:
    width: int
    height: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise SizeError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        if self.data.dtype != np.uint8 or self.data.size != self.width * self.height:
            raise SizeError(f"gray image {self.width}x{self.height} needs {self.width * self.height} bytes")

    def to_array(self) -> np.ndarray:
        return self.data.reshape(self.height, self.width)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ImageGray8)
            and (self.width, self.height) == (other.width, other.height)
            and np.array_equal(self.data, other.data)
        )


def synthesize_image(width: int, height: int, seed: int = 0) -> ImageRgb8:
    """Seeded gradient-plus-noise test image."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    base = np.stack(
        [
            255.0 * xx / max(1, width - 1),
            255.0 * yy / max(1, height - 1),
            127.5 * (1 + np.sin((xx + yy) / 7.0)),
        ],
        axis=-1,
    )
    noisy = base + rng.normal(0.0, 12.0, size=base.shape)
    return ImageRgb8.from_array(np.clip(np.rint(noisy), 0, 255).astype(np.uint8))


def random_image(width: int, height: int, rng: np.random.Generator) -> ImageRgb8:
    return ImageRgb8(width, height, rng.integers(0, 256, size=3 * width * height, dtype=np.uint8))
