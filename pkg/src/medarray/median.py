"""The median kernel family and its sliding-window drivers.

Four kernels over a 3x3 window (values listed row-major: NW, N, NE, W,
C, E, SW, S, SE; off-image positions are zero):

* ``naive`` -- sort the nine samples, take the fifth smallest.
* ``widereg`` -- the same median computed by a fixed 19-stage
  compare-exchange network over the nine occupied lanes of a packed
  16-lane register. The stage list never depends on the data, which is
  what makes it a faithful stand-in for a hardwired vector datapath.
* ``approx`` -- pseudo-median: exact median of the three row medians.
  Cheaper, not exact, but its value always ranks 4th..6th in the window.
* the adaptive filter -- grows the window until the window median stops
  being an extreme, then touches the pixel only if the pixel itself is
  an extreme of that window.

All kernels accept a single window or a whole ``(..., 9)`` batch.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import Image, UnsupportedInputError

__all__ = [
    "LANES",
    "MEDIAN9_PAIRS",
    "MEDIAN9_RESULT_LANE",
    "WideRegister",
    "AdaptiveParams",
    "pack_window",
    "median9_naive",
    "median9_widereg",
    "median9_approx",
    "run_median9_network",
    "extract_window",
    "median_filter",
    "adaptive_median_filter",
    "MEDIAN_KERNELS",
]

LANES = 16

# The classical minimal median-of-9 exchange network: 19 compare-exchange
# stages, each (a, b) leaving lanes[a] <= lanes[b]. After the last stage
# lane 4 holds the exact median of lanes 0..8. The list is a constant of
# the datapath; every input executes the same stages in the same order.
MEDIAN9_PAIRS: tuple[tuple[int, int], ...] = (
    (1, 2), (4, 5), (7, 8),
    (0, 1), (3, 4), (6, 7),
    (1, 2), (4, 5), (7, 8),
    (0, 3), (5, 8), (4, 7),
    (3, 6), (1, 4), (2, 5),
    (4, 7), (4, 2), (6, 4), (4, 2),
)
MEDIAN9_RESULT_LANE = 4


@dataclass
class WideRegister:
    """16 packed 8-bit lanes; lanes at and beyond ``occupancy`` are zero."""

    lanes: np.ndarray
    occupancy: int

    def __post_init__(self):
        lanes = np.asarray(self.lanes, dtype=np.uint8)
        if lanes.shape != (LANES,):
            raise ValueError(f"a wide register has {LANES} lanes, got {lanes.shape}")
        if not 0 <= self.occupancy <= LANES:
            raise ValueError(f"occupancy {self.occupancy} outside [0, {LANES}]")
        if np.any(lanes[self.occupancy :] != 0):
            raise ValueError("lanes beyond occupancy must be zero")
        self.lanes = lanes


def pack_window(values) -> WideRegister:
    """Pack nine window samples into the low lanes of a wide register."""
    vals = _as_windows(values)
    if vals.ndim != 1:
        raise ValueError("pack_window takes a single window")
    lanes = np.zeros(LANES, dtype=np.uint8)
    lanes[:9] = vals
    return WideRegister(lanes, 9)


def _as_windows(values, width: int = 9) -> np.ndarray:
    arr = np.asarray(values)
    if arr.shape[-1:] != (width,):
        raise ValueError(f"expected {width} samples per window, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("window samples must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def median9_naive(window):
    """Exact median: fifth smallest of the nine samples.

    Accepts one window (returns an int) or a ``(..., 9)`` batch (returns
    the matching array of medians).
    """
    arr = _as_windows(window)
    med = np.sort(arr, axis=-1)[..., 4]
    return int(med) if arr.ndim == 1 else med


def run_median9_network(windows, trace: list | None = None):
    """Drive the compare-exchange network over one window or a batch.

    ``trace``, when given, collects the executed (low, high) lane pairs;
    it always comes back equal to ``MEDIAN9_PAIRS`` regardless of input,
    which is the testable meaning of "data independent".
    """
    arr = _as_windows(windows).copy()
    for a, b in MEDIAN9_PAIRS:
        lo = np.minimum(arr[..., a], arr[..., b])
        hi = np.maximum(arr[..., a], arr[..., b])
        arr[..., a] = lo
        arr[..., b] = hi
        if trace is not None:
            trace.append((a, b))
    med = arr[..., MEDIAN9_RESULT_LANE]
    return int(med) if arr.ndim == 1 else med


def median9_widereg(reg: WideRegister, trace: list | None = None) -> int:
    """Median of the nine occupied lanes via the fixed exchange network."""
    if reg.occupancy != 9:
        raise ValueError(f"median instruction needs occupancy 9, got {reg.occupancy}")
    return run_median9_network(reg.lanes[:9], trace)


def _med3(a, b, c):
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return np.maximum(lo, np.minimum(hi, c))


def median9_approx(window):
    """Pseudo-median: exact median of the three consecutive-triplet medians.

    Triplets follow the row-major window layout, so they are the three
    image rows. The result is not guaranteed to be the true median but
    always ranks between 4th and 6th among the nine samples.
    """
    arr = _as_windows(window)
    m0 = _med3(arr[..., 0], arr[..., 1], arr[..., 2])
    m1 = _med3(arr[..., 3], arr[..., 4], arr[..., 5])
    m2 = _med3(arr[..., 6], arr[..., 7], arr[..., 8])
    med = _med3(m0, m1, m2)
    return int(med) if arr.ndim == 1 else med


# ---------------------------------------------------------------------------
# Sliding-window drivers (zero padding on every border, any window size)
# ---------------------------------------------------------------------------


def extract_window(img: Image, x: int, y: int, size: int) -> np.ndarray:
    """Row-major ``size*size`` samples centered at (x, y); off-image cells are 0."""
    if img.channels != 1:
        raise UnsupportedInputError("windows are extracted from grayscale images")
    if size < 1 or size % 2 == 0:
        raise ValueError(f"window size must be odd and positive, got {size}")
    if not (0 <= x < img.width and 0 <= y < img.height):
        raise ValueError(f"center ({x}, {y}) outside {img.width}x{img.height} image")
    r = size // 2
    padded = np.pad(img.pixels, r, mode="constant", constant_values=0)
    return padded[y : y + size, x : x + size].reshape(-1).copy()


def _windows_of(gray: np.ndarray, size: int) -> np.ndarray:
    """All zero-padded windows as an (h, w, size*size) view-backed array."""
    r = size // 2
    padded = np.pad(gray, r, mode="constant", constant_values=0)
    win = sliding_window_view(padded, (size, size))
    return win.reshape(gray.shape[0], gray.shape[1], size * size)


def _stats3_dense(gray: np.ndarray):
    """(Zmin, Zmed, Zmax) over every 3x3 window via shifted planes.

    The median comes from the exchange network run across nine
    whole-image planes, which beats materializing per-pixel windows.
    """
    h, w = gray.shape
    padded = np.pad(gray, 1, mode="constant", constant_values=0)
    planes = [padded[dy : dy + h, dx : dx + w] for dy in range(3) for dx in range(3)]
    zmin = np.minimum.reduce(planes)
    zmax = np.maximum.reduce(planes)
    lanes = [p.copy() for p in planes]
    for a, b in MEDIAN9_PAIRS:
        lo = np.minimum(lanes[a], lanes[b])
        np.maximum(lanes[a], lanes[b], out=lanes[b])
        lanes[a] = lo
    return zmin, lanes[MEDIAN9_RESULT_LANE], zmax


_KERNELS = {
    "naive": median9_naive,
    "widereg": run_median9_network,
    "approx": median9_approx,
}
MEDIAN_KERNELS = tuple(_KERNELS)


def median_filter(img: Image, kernel: str = "naive", threads: int = 1) -> Image:
    """Apply a 3x3 median kernel to every pixel, borders zero-padded.

    ``kernel`` is one of ``naive``, ``widereg`` or ``approx``. Output
    dimensions equal input dimensions, and the result is bit-identical
    whatever ``threads`` is: row bands are disjoint and read a shared
    immutable input.
    """
    if img.channels != 1:
        raise UnsupportedInputError("median filtering is grayscale-only")
    try:
        fn = _KERNELS[kernel]
    except KeyError:
        raise ValueError(
            f"unknown kernel {kernel!r}; expected one of {', '.join(_KERNELS)}"
        ) from None
    gray = img.pixels
    h, w = gray.shape
    windows = _windows_of(gray, 3)
    out = np.empty_like(gray)
    if threads <= 1 or h < 2 * threads:
        out[:] = fn(windows)
    else:
        bounds = np.linspace(0, h, threads + 1, dtype=int)
        def band(i):
            r0, r1 = bounds[i], bounds[i + 1]
            out[r0:r1] = fn(windows[r0:r1])
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(band, range(threads)))
    return Image(out)


@dataclass(frozen=True)
class AdaptiveParams:
    """Window growth bounds for the adaptive filter; both sizes odd."""

    initial_window: int = 3
    max_window: int = 7

    def __post_init__(self):
        if self.initial_window % 2 == 0 or self.max_window % 2 == 0:
            raise ValueError("window sizes must be odd")
        if not 3 <= self.initial_window <= self.max_window:
            raise ValueError(
                f"need 3 <= initial ({self.initial_window}) <= max ({self.max_window})"
            )


def adaptive_median_filter(img: Image, params: AdaptiveParams | None = None) -> Image:
    """Two-level adaptive median with zero-padded windows.

    Per pixel, with window size s from ``initial_window`` upward in steps
    of two: level A passes when Zmin < Zmed < Zmax for that window;
    otherwise grow s, and once s would exceed ``max_window`` output the
    last Zmed. On a level-A pass, level B keeps the pixel if
    Zmin < Zxy < Zmax and otherwise outputs Zmed. Impulses fail level B
    (they sit at an extreme) while everything else is left untouched.
    """
    if img.channels != 1:
        raise UnsupportedInputError("adaptive median filtering is grayscale-only")
    p = params if params is not None else AdaptiveParams()
    gray = img.pixels
    out = np.empty_like(gray)

    # Dense pass at the initial size decides the bulk of the image; the
    # grown sizes run sparsely over whatever level A left undecided.
    size = p.initial_window
    if size == 3:
        zmin, zmed, zmax = _stats3_dense(gray)
    else:
        win = _windows_of(gray, size)
        k = (size * size) // 2
        zmin = win.min(axis=2)
        zmax = win.max(axis=2)
        zmed = np.partition(win, k, axis=2)[..., k]
    level_a = (zmin < zmed) & (zmed < zmax)
    keep = level_a & (zmin < gray) & (gray < zmax)
    out[keep] = gray[keep]
    replace = level_a & ~keep
    out[replace] = zmed[replace]

    ys, xs = np.nonzero(~level_a)
    pending_zmed = zmed[ys, xs]
    for size in range(p.initial_window + 2, p.max_window + 1, 2):
        if ys.size == 0:
            break
        r = size // 2
        padded = np.pad(gray, r, mode="constant", constant_values=0)
        sel = sliding_window_view(padded, (size, size))[ys, xs]
        sel = sel.reshape(ys.size, size * size)
        k = (size * size) // 2
        zmin = sel.min(axis=1)
        zmax = sel.max(axis=1)
        zmed = np.partition(sel, k, axis=1)[:, k]
        center = gray[ys, xs]
        level_a = (zmin < zmed) & (zmed < zmax)
        keep = level_a & (zmin < center) & (center < zmax)
        out[ys[keep], xs[keep]] = center[keep]
        replace = level_a & ~keep
        out[ys[replace], xs[replace]] = zmed[replace]
        grow = ~level_a
        ys, xs, pending_zmed = ys[grow], xs[grow], zmed[grow]
    if ys.size:
        # Window growth ran out; the last window median stands.
        out[ys, xs] = pending_zmed
    return Image(out)
