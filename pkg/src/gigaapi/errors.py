"""Exception hierarchy shared by the runtime, the kernels and the codecs."""


class GigaError(Exception):
    """Base class for every error raised by gigaapi."""


class ConfigurationError(GigaError, ValueError):
    pass


class SizeError(GigaError, ValueError):
    """Shape, length or divisibility precondition violated."""


class OutOfDeviceMemory(GigaError, MemoryError):
    def __init__(self, device_id: int, requested: int, allocated: int, capacity: int):
        self.device_id = device_id
        self.requested = requested
        self.allocated = allocated
        self.capacity = capacity
        super().__init__(
            f"device {device_id}: cannot allocate {requested} bytes "
            f"({allocated} of {capacity} in use)"
        )


class InvalidHandleError(GigaError):
    pass


class DeviceAffinityError(GigaError):
    pass


class OrderingError(GigaError):
    pass


class BarrierDivergenceError(GigaError):
    """Some, but not all, threads of a block reached a barrier."""


class KernelFault(GigaError):
    """A kernel raised or performed an out-of-range access while executing."""


class FormatError(GigaError, ValueError):
    pass


class ParseError(FormatError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
