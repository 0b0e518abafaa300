"""Multi-device work partitioning over a simulated accelerator runtime."""

from .api import GigaConfig, GigaGpu
from .errors import (
    BarrierDivergenceError,
    ConfigurationError,
    DeviceAffinityError,
    FormatError,
    GigaError,
    InvalidHandleError,
    KernelFault,
    OrderingError,
    OutOfDeviceMemory,
    ParseError,
    SizeError,
)
from .images import ImageGray8, ImageRgb8
from .runtime import DeviceSpec, Runtime, create_runtime

__version__ = "0.1.0"
