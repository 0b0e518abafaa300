import numpy as np
import pytest

from gigaapi.errors import ConfigurationError
from gigaapi.ops_fundamental import SIGNAL_KINDS, generate_signal


def test_sine_samples():
    s = generate_signal("sine", 1, 1024, 1)
    assert len(s) == 1024 and s.samples.dtype == np.float32
    assert s.samples[0] == 0.0
    assert s.samples[256] == 1.0


def test_square_range():
    for f in (1.0, 3.0, 7.5):
        x = generate_signal("square", f, 1024, 1).samples
        assert set(np.unique(x)) <= {-1.0, 1.0}


def test_square_zero_crossings_are_positive():
    x = generate_signal("square", 1, 1024, 1).samples
    assert x[0] == 1.0 and x[512] == 1.0 and x[513] == -1.0


def test_sawtooth_quarter_points():
    x = generate_signal("sawtooth", 1, 4, 1).samples
    assert x.tolist() == [0.0, 0.5, -1.0, -0.5]


def test_chirp_sweeps_up_to_eight_times_f():
    s = generate_signal("chirp", 2, 1024, 1)
    t = np.arange(1024) / 1024
    expect = np.sin(2 * np.pi * (2 * t + 0.5 * 14 * t**2))
    assert np.allclose(s.samples, expect, atol=1e-6)


@pytest.mark.parametrize("kind", SIGNAL_KINDS)
def test_length_and_finite(kind):
    s = generate_signal(kind, 3, 1000, 0.5)
    assert len(s) == 500
    assert np.all(np.isfinite(s.samples))


@pytest.mark.parametrize("args", [(0, 1024, 1), (1, -1, 1), (1, 1024, 0)])
def test_non_positive_parameters(args):
    with pytest.raises(ConfigurationError):
        generate_signal("sine", *args)


def test_unknown_kind():
    with pytest.raises(ConfigurationError):
        generate_signal("triangle", 1, 1, 1)
