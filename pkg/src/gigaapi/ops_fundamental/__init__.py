"""FFT, split matrix multiply, block-reduction vector ops and simulated mining."""

from ..io_formats import write_spectrum
from .fft import ComplexSpectrum, fft_chunked, fft_single, is_pow2
from .linalg import MatrixF32, dot, l2_norm, matmul
from .mining import MiningJob, fnv1a64, mine_simulated
from .signal import SIGNAL_KINDS, Signal, generate_signal, signal_from_samples

__all__ = [
    "ComplexSpectrum",
    "MatrixF32",
    "MiningJob",
    "SIGNAL_KINDS",
    "Signal",
    "dot",
    "fft_chunked",
    "fft_single",
    "fnv1a64",
    "generate_signal",
    "is_pow2",
    "l2_norm",
    "matmul",
    "mine_simulated",
    "signal_from_samples",
    "write_spectrum",
]
