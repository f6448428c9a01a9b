"""Color-conversion contracts: reference values, fixed-point agreement, inverses."""

import numpy as np
import pytest

from medarray import (
    CONVERSIONS,
    Image,
    UnsupportedInputError,
    convert_image,
    convert_pixel_q88,
    convert_pixel_real,
    get_matrix,
    inverse_matrix,
)

MATRIX_SPACES = ("ycc", "yiq", "yuv")


def _oracle_real(p, coeffs, offsets):
    # Scalar dot-product oracle, independent of the library's vector path.
    out = []
    for row, off in zip(coeffs, offsets):
        acc = sum(c * v for c, v in zip(row, p)) + off
        out.append(min(255, max(0, int(np.floor(acc + 0.5)))))
    return tuple(out)


YIQ_COEFFS = [[0.299, 0.587, 0.114], [0.596, -0.274, -0.322], [0.212, -0.523, 0.311]]
YIQ_OFFSETS = [0, 128, 128]


def test_yiq_black_is_offsets_only():
    assert convert_pixel_real((0, 0, 0), get_matrix("yiq")) == (0, 128, 128)


def test_yiq_white_luma_full_chroma_neutral():
    assert convert_pixel_real((255, 255, 255), get_matrix("yiq")) == (255, 128, 128)


def test_cmy_is_complement():
    cmy = get_matrix("cmy")
    assert convert_pixel_real((255, 0, 0), cmy) == (0, 255, 255)
    assert convert_pixel_q88((255, 0, 0), cmy) == (0, 255, 255)


def test_yiq_pure_red_against_scalar_oracle():
    expected = _oracle_real((255, 0, 0), YIQ_COEFFS, YIQ_OFFSETS)
    assert expected[0] == 76  # round(0.299 * 255)
    assert convert_pixel_real((255, 0, 0), get_matrix("yiq")) == expected


def test_random_triples_against_scalar_oracle():
    rng = np.random.default_rng(12)
    m = get_matrix("yiq")
    for _ in range(300):
        p = tuple(int(v) for v in rng.integers(0, 256, 3))
        assert convert_pixel_real(p, m) == _oracle_real(p, YIQ_COEFFS, YIQ_OFFSETS)


def test_q88_black_matches_real_exactly():
    for name in MATRIX_SPACES:
        m = get_matrix(name)
        assert convert_pixel_q88((0, 0, 0), m) == convert_pixel_real((0, 0, 0), m)


def test_q88_luma_row_sums_to_256():
    for name in MATRIX_SPACES:
        assert int(get_matrix(name).coeffs_q88[0].sum()) == 256


def test_q88_gray_preserves_gray():
    for name in MATRIX_SPACES:
        m = get_matrix(name)
        for v in range(0, 256, 5):
            assert convert_pixel_q88((v, v, v), m)[0] == v


def test_q88_within_one_of_real():
    rng = np.random.default_rng(13)
    triples = rng.integers(0, 256, (50_000, 3), dtype=np.uint8)
    img = Image(triples.reshape(-1, 1, 3).copy())
    for name in MATRIX_SPACES:
        m = get_matrix(name)
        real = convert_image(img, m, path="real").pixels.astype(np.int16)
        q88 = convert_image(img, m, path="q88").pixels.astype(np.int16)
        assert int(np.abs(q88 - real).max()) <= 1


def test_luminance_monotonic_on_grays():
    for name in MATRIX_SPACES:
        m = get_matrix(name)
        ys = [convert_pixel_real((v, v, v), m)[0] for v in range(256)]
        assert all(b >= a for a, b in zip(ys, ys[1:]))
        assert all(abs(y - v) <= 1 for v, y in enumerate(ys))


def test_registered_forward_coefficients_are_small():
    # All registered forward matrices fit comfortably in Q8.8's range;
    # the documented bound for them is |c| <= 2.
    for name in CONVERSIONS:
        assert float(np.abs(get_matrix(name).coeffs_real).max()) <= 2.0


def test_inverse_is_involution_on_coefficients():
    for name in MATRIX_SPACES:
        m = get_matrix(name)
        back = inverse_matrix(inverse_matrix(m))
        assert np.allclose(back.coeffs_real, m.coeffs_real, atol=1e-12)
        assert np.allclose(back.offsets_real, m.offsets_real, atol=1e-9)


def test_inverse_of_cmy_is_itself():
    cmy = get_matrix("cmy")
    assert inverse_matrix(cmy) is cmy


def test_round_trip_midgray_within_two():
    for name in MATRIX_SPACES:
        m = get_matrix(name)
        inv = inverse_matrix(m)
        fwd = convert_pixel_real((128, 128, 128), m)
        back = convert_pixel_real(fwd, inv)
        assert all(abs(b - 128) <= 2 for b in back)


def test_round_trip_random_triples_within_two_in_gamut():
    # Clamping saturated chroma is lossy by construction, so the
    # quantization bound applies where the forward image stays on-scale.
    rng = np.random.default_rng(14)
    triples = rng.integers(0, 256, (20_000, 3), dtype=np.uint8)
    img = Image(triples.reshape(-1, 1, 3).copy())
    for name in MATRIX_SPACES:
        m = get_matrix(name)
        inv = inverse_matrix(m)
        there = convert_image(img, m, path="real")
        back = convert_image(there, inv, path="real")
        diff = np.abs(back.pixels.astype(np.int16) - img.pixels.astype(np.int16))
        f = triples.astype(np.float64) @ m.coeffs_real.T + m.offsets_real
        in_gamut = ((f >= 0.0) & (f <= 255.0)).all(axis=1)
        assert in_gamut.any()
        assert int(diff.reshape(-1, 3)[in_gamut].max()) <= 2


def test_cmy_involution_exact():
    rng = np.random.default_rng(15)
    img = Image(rng.integers(0, 256, (64, 64, 3), dtype=np.uint8))
    cmy = get_matrix("cmy")
    assert convert_image(convert_image(img, cmy), cmy) == img


def test_all_black_to_cmy_is_all_white():
    img = Image(np.zeros((5, 4, 3), dtype=np.uint8))
    out = convert_image(img, get_matrix("cmy"))
    assert (out.pixels == 255).all()


def test_convert_image_contracts():
    gray = Image(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(UnsupportedInputError):
        convert_image(gray, get_matrix("yiq"))
    rgb = Image(np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        convert_image(rgb, get_matrix("yiq"), path="fast")
    with pytest.raises(ValueError, match="unknown conversion"):
        get_matrix("hsv")


def test_convert_image_threads_bit_identical():
    rng = np.random.default_rng(16)
    img = Image(rng.integers(0, 256, (37, 11, 3), dtype=np.uint8))
    for name in CONVERSIONS:
        m = get_matrix(name)
        for path in ("real", "q88"):
            assert convert_image(img, m, path, threads=4) == convert_image(img, m, path)


def test_dimensions_preserved():
    rng = np.random.default_rng(17)
    img = Image(rng.integers(0, 256, (6, 9, 3), dtype=np.uint8))
    out = convert_image(img, get_matrix("yuv"))
    assert (out.width, out.height, out.channels) == (9, 6, 3)
