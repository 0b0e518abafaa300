import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gigaapi.errors import ConfigurationError, OutOfDeviceMemory
from gigaapi.images import ImageRgb8, random_image
from gigaapi.ops_image import (
    grayscale,
    plan_sharpen,
    plan_upsample,
    sharpen,
    upsample_device_bytes,
    upsample_nn,
    upsample_then_sharpen,
)
from gigaapi.runtime import Runtime, uniform_specs

from oracles import gray_pixel, sharpen_ref, upsample_ref


def solid(w, h, rgb):
    return ImageRgb8.from_array(np.broadcast_to(np.array(rgb, np.uint8), (h, w, 3)))


@pytest.mark.parametrize("rgb, y", [((255, 255, 255), 255), ((0, 0, 0), 0), ((255, 0, 0), 76)])
def test_grayscale_examples(rt, rgb, y):
    out = grayscale(rt, solid(3, 3, rgb))
    assert np.all(out.data == y)


def test_grayscale_all_colours_sampled(rt, rng):
    img = random_image(40, 25, rng)
    out = grayscale(rt, img).to_array()
    src = img.to_array()
    for y in range(0, 25, 3):
        for x in range(0, 40, 3):
            assert out[y, x] == gray_pixel(*map(int, src[y, x]))


def test_grayscale_rounding_ties():
    # 0.587 * 255 + 0.299 * 85 + 0.114 * 0 = 175.1... no tie; search exact .5 ties by brute force
    ties = [(r, g, b) for r in range(0, 256, 5) for g in range(0, 256, 5) for b in range(0, 256, 5)
            if (299 * r + 587 * g + 114 * b) % 1000 == 500][:20]
    assert ties
    arr = np.array(ties, dtype=np.uint8).reshape(1, -1, 3)
    with Runtime(uniform_specs(1, 1 << 20)) as rt:
        out = grayscale(rt, ImageRgb8.from_array(arr), 1).data
    assert out.tolist() == [gray_pixel(*t) for t in ties]


def test_grayscale_monotone(rt):
    base = np.full((1, 256, 3), 40, np.uint8)
    base[0, :, 1] = np.arange(256)
    out = grayscale(rt, ImageRgb8.from_array(base)).data.astype(int)
    assert np.all(np.diff(out) >= 0)


def test_upsample_identity(rt, rng):
    img = random_image(13, 9, rng)
    assert upsample_nn(rt, img, 1) == img


def test_upsample_single_pixel(rt):
    out = upsample_nn(rt, solid(1, 1, (1, 2, 3)), 3)
    assert (out.width, out.height) == (3, 3)
    assert np.all(out.to_array() == [1, 2, 3])


def test_upsample_two_pixels(rt):
    img = ImageRgb8.from_array(np.array([[[1, 1, 1], [2, 2, 2]]], np.uint8))
    out = upsample_nn(rt, img, 2).to_array()[..., 0]
    assert out.tolist() == [[1, 1, 2, 2], [1, 1, 2, 2]]


def test_upsample_matches_repeat(rt, rng):
    img = random_image(11, 7, rng)
    for s in (2, 3, 5):
        assert np.array_equal(upsample_nn(rt, img, s).to_array(), upsample_ref(img.to_array(), s))


@pytest.mark.parametrize("scale", [0, -2, 1.5, True])
def test_upsample_bad_scale(rt, scale):
    with pytest.raises(ConfigurationError):
        upsample_nn(rt, solid(2, 2, (0, 0, 0)), scale)


def test_upsample_oom_is_typed_and_clean():
    with Runtime(uniform_specs(2, 10_000)) as rt:
        with pytest.raises(OutOfDeviceMemory):
            upsample_nn(rt, solid(20, 20, (5, 5, 5)), 10)
        assert rt.allocated_bytes(0) == rt.allocated_bytes(1) == 0


def test_upsample_seam_rows_may_overlap():
    plan = plan_upsample(3, 2, 2)  # 6 output rows -> [0,3) and [3,6)
    assert plan.out_ranges == [(0, 3), (3, 6)]
    assert plan.in_ranges == [(0, 2), (1, 3)]


def test_upsample_device_bytes_closed_form():
    w, h = 64, 36
    for s in (2, 23, 32, 33):
        assert upsample_device_bytes(w, h, s, 1) == [3 * w * h * (1 + s * s)]
        assert upsample_device_bytes(w, h, s, 2) == [3 * w * h * (1 + s * s) // 2] * 2


def test_sharpen_flat_field(rt):
    out = sharpen(rt, solid(6, 5, (10, 10, 10))).to_array()[..., 0]
    assert np.all(out[1:-1, 1:-1] == 0)
    assert out[0, 0] == 50  # corner: 80 - 3 * 10
    assert out[0, 2] == 30  # edge: 80 - 5 * 10


def test_sharpen_single_white_pixel(rt):
    arr = np.zeros((5, 5, 3), np.uint8)
    arr[2, 2] = 255
    out = sharpen(rt, ImageRgb8.from_array(arr)).to_array()
    assert np.all(out[2, 2] == 255)
    assert np.all(out[1, 1] == 0)


def test_sharpen_matches_reference(rt3, rng):
    img = random_image(23, 17, rng)
    assert np.array_equal(sharpen(rt3, img, 3).to_array(), sharpen_ref(img.to_array()))


def test_sharpen_plan_ships_halo():
    plan = plan_sharpen(9, 2)
    assert plan.out_ranges == [(0, 5), (5, 9)]
    assert plan.in_ranges == [(0, 6), (4, 9)]


def test_sharpen_seam_edge(rt):
    # horizontal edge exactly at the 2-device seam
    arr = np.zeros((10, 8, 3), np.uint8)
    arr[5:] = 200
    img = ImageRgb8.from_array(arr)
    assert sharpen(rt, img, 2) == sharpen(rt, img, 1)
    assert np.array_equal(sharpen(rt, img, 2).to_array(), sharpen_ref(arr))


def test_upsample_then_sharpen_composition(rt, rng):
    img = random_image(9, 7, rng)
    assert upsample_then_sharpen(rt, img, 3) == sharpen(rt, upsample_nn(rt, img, 3))


def test_upsample_then_sharpen_flat(rt):
    out = upsample_then_sharpen(rt, solid(4, 4, (9, 9, 9)), 1).to_array()
    assert np.all(out[1:-1, 1:-1] == 0)


def test_one_pixel_tall_three_devices(rt3, rng):
    img = random_image(30, 1, rng)
    for op in (lambda n: grayscale(rt3, img, n), lambda n: sharpen(rt3, img, n), lambda n: upsample_nn(rt3, img, 2, n)):
        assert op(3) == op(1)


images = st.tuples(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))


@settings(max_examples=40, deadline=None)
@given(images, st.integers(1, 4))
def test_split_invariance(dims, scale):
    w, h, seed = dims
    img = random_image(w, h, np.random.default_rng(seed))
    with Runtime(uniform_specs(3, 1 << 24)) as rt:
        for op in (
            lambda n: grayscale(rt, img, n),
            lambda n: sharpen(rt, img, n),
            lambda n: upsample_nn(rt, img, scale, n),
        ):
            ref = op(1)
            assert op(2) == ref and op(3) == ref


@settings(max_examples=30, deadline=None)
@given(images, st.integers(1, 4))
def test_upsample_blocks_constant(dims, s):
    w, h, seed = dims
    img = random_image(w, h, np.random.default_rng(seed))
    with Runtime(uniform_specs(2, 1 << 24)) as rt:
        out = upsample_nn(rt, img, s).to_array()
    blocks = out.reshape(h, s, w, s, 3)
    assert np.all(blocks == img.to_array()[:, None, :, None, :])
    assert len(np.unique(out.reshape(-1, 3), axis=0)) <= len(np.unique(img.to_array().reshape(-1, 3), axis=0))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
def test_sharpen_constant_interior_zero(w, h, r, g, b):
    with Runtime(uniform_specs(2, 1 << 24)) as rt:
        out = sharpen(rt, solid(w, h, (r, g, b))).to_array()
    assert np.all(out[1:-1, 1:-1] == 0)
