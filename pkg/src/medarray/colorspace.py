"""RGB color conversions: float reference path and Q8.8 fixed point.

Registered conversions are ``ycc``, ``yiq``, ``yuv`` and ``cmy``. The
matrix spaces share one convention: signed chroma channels carry a +128
bias so every output plane fits unsigned 8 bits, and rounding is
half-up in both paths. ``cmy`` is the exact complement (255 - c) and
never touches a matrix.

The Q8.8 path mirrors a datapath whose multipliers take an 8-bit pixel
and a 16-bit coefficient: coefficients are ``round(c * 256)`` held in
int16, products accumulate in int32, and ``(acc + 128) >> 8`` recovers
the integer result. After rounding, any coefficient row that sums to
one in real arithmetic gets its largest entry nudged so the integer row
sums to exactly 256; that keeps gray inputs exactly gray in fixed
point. For all registered spaces the fixed-point output differs from
the float path by at most one per channel.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .image import Image, UnsupportedInputError

__all__ = [
    "ColorMatrix",
    "CONVERSIONS",
    "CONVERT_PATHS",
    "get_matrix",
    "inverse_matrix",
    "convert_pixel_real",
    "convert_pixel_q88",
    "convert_image",
]

Q_ONE = 256  # Q8.8 scale factor
_Q_HALF = 128  # +0.5 in Q8.8, added before the >> 8


def _q88(value: float) -> int:
    return int(np.floor(value * Q_ONE + 0.5))


def _q88_coeff(value: float) -> int:
    # Coefficients feed the 16-bit side of the 8x16 multipliers.
    q = _q88(value)
    if not -32768 <= q <= 32767:
        raise ValueError(f"coefficient {value} does not fit 16-bit Q8.8")
    return q


@dataclass(frozen=True)
class ColorMatrix:
    """3x3 conversion: real coefficients/offsets plus their Q8.8 images.

    ``complement`` marks the conversion as the channel complement; such
    a matrix is its own inverse and both arithmetic paths bypass it.
    """

    name: str
    coeffs_real: np.ndarray
    offsets_real: np.ndarray
    coeffs_q88: np.ndarray
    offsets_q88: np.ndarray
    complement: bool = False


def _build(name: str, coeffs, offsets, complement: bool = False) -> ColorMatrix:
    creal = np.array(coeffs, dtype=np.float64)
    breal = np.array(offsets, dtype=np.float64)
    if creal.shape != (3, 3) or breal.shape != (3,):
        raise ValueError("a conversion is a 3x3 matrix plus 3 offsets")
    q = np.array([[_q88_coeff(v) for v in row] for row in creal], dtype=np.int16)
    for i in range(3):
        # Gray stability: a unity-sum row must sum to exactly 256 in Q8.8.
        if abs(creal[i].sum() - 1.0) < 1e-9:
            q[i, np.argmax(np.abs(q[i]))] += Q_ONE - int(q[i].sum())
    bq = np.array([_q88(v) for v in breal], dtype=np.int32)
    for arr in (creal, breal, q, bq):
        arr.setflags(write=False)
    return ColorMatrix(name, creal, breal, q, bq, complement)


_MATRICES = {
    "ycc": _build(
        "ycc",
        [[0.299, 0.587, 0.114],
         [-0.168736, -0.331264, 0.5],
         [0.5, -0.418688, -0.081312]],
        [0, 128, 128],
    ),
    "yiq": _build(
        "yiq",
        [[0.299, 0.587, 0.114],
         [0.596, -0.274, -0.322],
         [0.212, -0.523, 0.311]],
        [0, 128, 128],
    ),
    "yuv": _build(
        "yuv",
        [[0.299, 0.587, 0.114],
         [-0.147, -0.289, 0.436],
         [0.615, -0.515, -0.100]],
        [0, 128, 128],
    ),
    "cmy": _build(
        "cmy",
        [[-1, 0, 0], [0, -1, 0], [0, 0, -1]],
        [255, 255, 255],
        complement=True,
    ),
}

CONVERSIONS = ("ycc", "yiq", "yuv", "cmy")
CONVERT_PATHS = ("real", "q88")


def get_matrix(name: str) -> ColorMatrix:
    try:
        return _MATRICES[name]
    except KeyError:
        raise ValueError(
            f"unknown conversion {name!r}; expected one of {', '.join(CONVERSIONS)}"
        ) from None


def inverse_matrix(m: ColorMatrix) -> ColorMatrix:
    """Exact-arithmetic inverse: coeffs = M^-1, offsets = -M^-1 b.

    The complement conversion is its own inverse and comes back as-is.
    Applying this twice reproduces the original coefficients to within
    float round-off.
    """
    if m.complement:
        return m
    inv = np.linalg.inv(m.coeffs_real)
    if not np.all(np.isfinite(inv)):
        raise ValueError(f"conversion {m.name} is singular")
    offsets = -inv @ m.offsets_real
    if m.name.endswith("_inverse"):
        name = m.name[: -len("_inverse")]
    else:
        name = m.name + "_inverse"
    return _build(name, inv, offsets)


# ---------------------------------------------------------------------------
# Conversion arithmetic
# ---------------------------------------------------------------------------


def _real_batch(px: np.ndarray, m: ColorMatrix) -> np.ndarray:
    out = px.astype(np.float64) @ m.coeffs_real.T + m.offsets_real
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _q88_batch(px: np.ndarray, m: ColorMatrix) -> np.ndarray:
    acc = px.astype(np.int32) @ m.coeffs_q88.astype(np.int32).T
    acc += m.offsets_q88 + _Q_HALF
    return np.clip(acc >> 8, 0, 255).astype(np.uint8)


def _triple(p) -> np.ndarray:
    arr = np.asarray(p)
    if arr.shape != (3,):
        raise ValueError(f"a pixel is three channel values, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("channel values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def convert_pixel_real(p, m: ColorMatrix) -> tuple[int, int, int]:
    """Float path: clamp(round(M p + b)) per channel, half rounds up."""
    arr = _triple(p)
    if m.complement:
        out = 255 - arr
    else:
        out = _real_batch(arr[np.newaxis, :], m)[0]
    return tuple(int(v) for v in out)


def convert_pixel_q88(p, m: ColorMatrix) -> tuple[int, int, int]:
    """Fixed-point path: clamp((sum q_ij p_j + b_q + 128) >> 8) in int32."""
    arr = _triple(p)
    if m.complement:
        out = 255 - arr
    else:
        out = _q88_batch(arr[np.newaxis, :], m)[0]
    return tuple(int(v) for v in out)


def convert_image(img: Image, m: ColorMatrix, path: str = "real",
                  threads: int = 1) -> Image:
    """Per-pixel conversion of an RGB image; dimensions are preserved.

    Single-threaded and banded execution apply identical arithmetic per
    pixel, so the output is bit-identical for any ``threads`` value.
    """
    if img.channels != 3:
        raise UnsupportedInputError("color conversion needs a 3-channel image")
    if path not in CONVERT_PATHS:
        raise ValueError(f"unknown path {path!r}; expected 'real' or 'q88'")
    px = img.pixels
    if m.complement:
        return Image((255 - px).astype(np.uint8))
    fn = _real_batch if path == "real" else _q88_batch
    h, w = px.shape[:2]
    out = np.empty_like(px)
    if threads <= 1 or h < 2 * threads:
        out.reshape(-1, 3)[:] = fn(px.reshape(-1, 3), m)
    else:
        bounds = np.linspace(0, h, threads + 1, dtype=int)
        def band(i):
            r0, r1 = bounds[i], bounds[i + 1]
            out[r0:r1].reshape(-1, 3)[:] = fn(px[r0:r1].reshape(-1, 3), m)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(band, range(threads)))
    return Image(out)
