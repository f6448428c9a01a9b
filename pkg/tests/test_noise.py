"""Impulse-noise contracts: exact counts, determinism, mask discipline."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medarray import Image, NoiseSpec, UnsupportedInputError, count_residual_impulses, inject_impulse_noise


def _flat_image(width, height, value=100):
    return Image(np.full((height, width), value, dtype=np.uint8))


def test_density_zero_is_identity():
    img = _flat_image(8, 8)
    noisy, mask = inject_impulse_noise(img, NoiseSpec(0.0, seed=1))
    assert noisy == img
    assert not mask.any()


def test_density_one_saturates():
    img = _flat_image(4, 4)
    noisy, mask = inject_impulse_noise(img, NoiseSpec(1.0, seed=9))
    assert mask.all()
    assert np.isin(noisy.pixels, [0, 255]).all()


def test_quarter_density_exact_count_and_determinism():
    img = _flat_image(10, 10)
    spec = NoiseSpec(0.25, seed=42)
    n1, m1 = inject_impulse_noise(img, spec)
    n2, m2 = inject_impulse_noise(img, spec)
    assert m1.sum() == 25
    assert np.array_equal(m1, m2)
    assert n1 == n2


def test_different_seeds_differ():
    img = _flat_image(16, 16)
    _, m1 = inject_impulse_noise(img, NoiseSpec(0.2, seed=1))
    _, m2 = inject_impulse_noise(img, NoiseSpec(0.2, seed=2))
    assert not np.array_equal(m1, m2)


def test_rgb_rejected():
    rgb = Image(np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(UnsupportedInputError):
        inject_impulse_noise(rgb, NoiseSpec(0.1, seed=0))


def test_bad_density_rejected():
    with pytest.raises(ValueError):
        NoiseSpec(1.5, seed=0)
    with pytest.raises(ValueError):
        NoiseSpec(-0.1, seed=0)


@settings(max_examples=40, deadline=None)
@given(
    density=st.floats(0.0, 1.0, allow_nan=False),
    width=st.integers(1, 30),
    height=st.integers(1, 30),
    seed=st.integers(0, 2**63),
)
def test_count_is_rounded_density_times_pixels(density, width, height, seed):
    img = Image(np.full((height, width), 77, dtype=np.uint8))
    _, mask = inject_impulse_noise(img, NoiseSpec(density, seed))
    assert mask.sum() == int(math.floor(density * width * height + 0.5))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**63), density=st.floats(0.0, 1.0))
def test_changed_iff_masked_on_midrange_images(seed, density):
    # On an image clear of the impulse extremes, a pixel changes exactly
    # when its mask bit is set, and every changed pixel is 0 or 255.
    rng = np.random.default_rng(seed % (2**32))
    img = Image(rng.integers(1, 255, (12, 9), dtype=np.uint8))
    noisy, mask = inject_impulse_noise(img, NoiseSpec(density, seed))
    changed = noisy.pixels != img.pixels
    assert np.array_equal(changed, mask)
    assert np.isin(noisy.pixels[mask], [0, 255]).all()


def test_unmasked_pixels_never_change_even_with_extremes():
    rng = np.random.default_rng(0)
    img = Image(rng.integers(0, 256, (15, 15), dtype=np.uint8))
    noisy, mask = inject_impulse_noise(img, NoiseSpec(0.3, seed=4))
    assert np.array_equal(noisy.pixels[~mask], img.pixels[~mask])
    assert np.isin(noisy.pixels[mask], [0, 255]).all()


def test_residual_count_contract():
    img = _flat_image(10, 10, value=128)
    noisy, mask = inject_impulse_noise(img, NoiseSpec(0.2, seed=8))
    # Unfiltered, every corrupted pixel is still an impulse.
    assert count_residual_impulses(noisy, mask) == mask.sum()
    assert count_residual_impulses(img, np.zeros_like(mask)) == 0
    with pytest.raises(ValueError):
        count_residual_impulses(img, np.zeros((3, 3), dtype=bool))


def test_residual_margin_restricts_to_interior():
    img = _flat_image(6, 6, value=10)
    px = img.pixels.copy()
    px[0, 0] = 255  # border impulse
    px[3, 3] = 255  # interior impulse
    mask = np.zeros((6, 6), dtype=bool)
    mask[0, 0] = mask[3, 3] = True
    noisy = Image(px)
    assert count_residual_impulses(noisy, mask) == 2
    assert count_residual_impulses(noisy, mask, margin=1) == 1
    assert count_residual_impulses(noisy, mask, margin=3) == 0
