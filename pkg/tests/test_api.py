import numpy as np
import pytest

from gigaapi import GigaConfig, GigaGpu
from gigaapi.errors import ConfigurationError, GigaError, OutOfDeviceMemory, SizeError
from gigaapi.images import random_image
from gigaapi.ops_fundamental import MiningJob

from oracles import mine_bruteforce


def no_leaks(gpu):
    rt = gpu.runtime
    return all(rt.allocated_bytes(d) == 0 and not rt.live_buffers(d) for d in range(gpu.device_count))


def test_defaults():
    cfg = GigaConfig()
    assert cfg.device_count == 2
    with GigaGpu() as gpu:
        assert gpu.device_count == 2
        assert gpu.runtime.device_count() == 2


@pytest.mark.parametrize("kw", [{"device_count": 0}, {"memory_capacity": 0}, {"rng_seed": -1}])
def test_bad_config(kw):
    with pytest.raises(ConfigurationError):
        GigaConfig(**kw)


def test_every_operation_and_no_leaks(gpu, rng):
    img = random_image(17, 11, rng)
    assert gpu.upsample_image(img, 2).width == 34
    assert gpu.sharpen_image(img).height == 11
    assert gpu.upsample_then_sharpen(img, 2).height == 22
    assert gpu.convert_to_grayscale(img).data.shape == (17 * 11,)
    sig = gpu.generate_signal("sine", 4.0, 256.0, 1.0)
    assert int(np.argmax(gpu.perform_fft(sig).magnitudes)) == 4
    assert gpu.perform_fft_chunked(sig).num_chunks == 2
    a = rng.uniform(0, 1, (5, 3)).astype(np.float32)
    b = rng.uniform(0, 1, (3, 4)).astype(np.float32)
    assert np.allclose(gpu.perform_matrix_multiplication(a, b).to_array(), a @ b, rtol=1e-5)
    x = np.arange(10, dtype=np.float32)
    assert gpu.compute_dot_product(x, x) == 285.0
    assert gpu.compute_l2_norm(np.array([3, 4], np.float32)) == 5.0
    job = MiningJob(b"hello", 1 << 60, 0, 200)
    assert gpu.mine(job) == mine_bruteforce(b"hello", 1 << 60, 0, 200)
    assert no_leaks(gpu)


def test_num_devices_override(rng):
    with GigaGpu(GigaConfig(device_count=3, memory_capacity=1 << 24)) as gpu:
        img = random_image(9, 7, rng)
        assert gpu.sharpen_image(img, 1) == gpu.sharpen_image(img) == gpu.sharpen_image(img, 2)
        with pytest.raises(ConfigurationError):
            gpu.sharpen_image(img, 4)


def test_error_paths_release_memory(rng):
    with GigaGpu(GigaConfig(memory_capacity=4096)) as gpu:
        with pytest.raises(OutOfDeviceMemory):
            gpu.upsample_image(random_image(16, 16, rng), 8)
        with pytest.raises(OutOfDeviceMemory):
            gpu.perform_matrix_multiplication(np.ones((40, 40)), np.ones((40, 40)))
        with pytest.raises(SizeError):
            gpu.compute_dot_product(np.ones(3), np.ones(4))
        with pytest.raises(GigaError):
            gpu.perform_fft(np.ones(6, np.float32))
        assert no_leaks(gpu)
        # the handle is still usable after failures
        assert gpu.compute_dot_product(np.ones(4), np.ones(4)) == 4.0
