"""8-bit raster images, bit-exact Netpbm (PGM/PPM) I/O, and impulse noise.

Images are stored as ``uint8`` numpy arrays, shape ``(h, w)`` for
grayscale and ``(h, w, 3)`` for RGB, row-major like the files they come
from. Reading and then writing a file (or the other way around)
reproduces the samples exactly; that property is what every golden-file
test in the package leans on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64

__all__ = [
    "Image",
    "NoiseSpec",
    "FormatError",
    "MalformedHeaderError",
    "UnsupportedMaxvalError",
    "TruncatedDataError",
    "UnsupportedInputError",
    "read_image",
    "write_image",
    "inject_impulse_noise",
    "count_residual_impulses",
]


class FormatError(ValueError):
    """A Netpbm file could not be parsed; ``offset`` is the offending byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class MalformedHeaderError(FormatError):
    pass


class UnsupportedMaxvalError(FormatError):
    pass


class TruncatedDataError(FormatError):
    pass


class UnsupportedInputError(ValueError):
    """An operation received an image with the wrong channel count."""


@dataclass(eq=False)
class Image:
    """8-bit raster; ``pixels`` is ``(h, w)`` uint8 or ``(h, w, 3)`` uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise ValueError(f"image samples must be uint8, got {px.dtype}")
        if px.ndim not in (2, 3) or (px.ndim == 3 and px.shape[2] != 3):
            raise ValueError(f"bad image shape {px.shape}; want (h, w) or (h, w, 3)")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image dimensions must be positive")
        self.pixels = px

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    @property
    def samples(self) -> np.ndarray:
        """Row-major flat view of all samples."""
        return self.pixels.reshape(-1)

    @classmethod
    def from_samples(cls, width: int, height: int, channels: int, samples) -> "Image":
        data = np.asarray(samples)
        if data.size != width * height * channels:
            raise ValueError(
                f"expected {width * height * channels} samples, got {data.size}"
            )
        if data.dtype != np.uint8:
            if data.size and (data.min() < 0 or data.max() > 255):
                raise ValueError("samples must lie in [0, 255]")
            data = data.astype(np.uint8)
        shape = (height, width) if channels == 1 else (height, width, channels)
        return cls(data.reshape(shape))

    @classmethod
    def full(cls, width: int, height: int, value: int, channels: int = 1) -> "Image":
        shape = (height, width) if channels == 1 else (height, width, channels)
        return cls(np.full(shape, value, dtype=np.uint8))

    def copy(self) -> "Image":
        return Image(self.pixels.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return (
            self.pixels.shape == other.pixels.shape
            and self.pixels.tobytes() == other.pixels.tobytes()
        )


# ---------------------------------------------------------------------------
# Netpbm I/O
#
# Supported: P2/P5 (grayscale) and P3/P6 (RGB), maxval exactly 255,
# '#' comments tolerated while reading headers, never written.
# ---------------------------------------------------------------------------

_MAGIC = {b"P2": (1, True), b"P3": (3, True), b"P5": (1, False), b"P6": (3, False)}


class _Cursor:
    """Byte-walking tokenizer that remembers offsets for error reports."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _skip_filler(self) -> None:
        data = self.data
        n = len(data)
        while self.pos < n:
            b = data[self.pos]
            if b in b" \t\r\n\x0b\x0c":
                self.pos += 1
            elif b == 0x23:  # '#' comment runs to end of line
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def token(self, what: str) -> tuple[bytes, int]:
        self._skip_filler()
        if self.pos >= len(self.data):
            raise MalformedHeaderError(f"missing {what}", len(self.data))
        start = self.pos
        n = len(self.data)
        while self.pos < n and self.data[self.pos] not in b" \t\r\n\x0b\x0c#":
            self.pos += 1
        return self.data[start : self.pos], start

    def int_token(self, what: str) -> tuple[int, int]:
        tok, off = self.token(what)
        try:
            return int(tok), off
        except ValueError:
            raise MalformedHeaderError(f"{what} is not a number: {tok!r}", off) from None


def read_image(path) -> Image:
    """Read a PGM (P2/P5) or PPM (P3/P6) file with maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    cur = _Cursor(data)
    magic, off = cur.token("magic number")
    if magic not in _MAGIC:
        raise MalformedHeaderError(f"unsupported magic {magic!r}", off)
    channels, is_ascii = _MAGIC[magic]
    width, off = cur.int_token("width")
    height, _ = cur.int_token("height")
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"bad dimensions {width}x{height}", off)
    maxval, off = cur.int_token("maxval")
    if maxval != 255:
        raise UnsupportedMaxvalError(f"maxval {maxval} unsupported, need 255", off)

    need = width * height * channels
    if is_ascii:
        flat = np.empty(need, dtype=np.uint8)
        for i in range(need):
            try:
                value, off = cur.int_token("sample")
            except MalformedHeaderError as exc:
                raise TruncatedDataError(
                    f"ran out of samples after {i} of {need}", exc.offset
                ) from None
            if not 0 <= value <= 255:
                raise FormatError(f"sample {value} out of range", off)
            flat[i] = value
    else:
        # Exactly one whitespace byte separates the maxval from the raster.
        if cur.pos >= len(data) or data[cur.pos] not in b" \t\r\n\x0b\x0c":
            raise MalformedHeaderError("missing whitespace before raster", cur.pos)
        cur.pos += 1
        if len(data) - cur.pos < need:
            raise TruncatedDataError(
                f"raster holds {len(data) - cur.pos} of {need} bytes", len(data)
            )
        flat = np.frombuffer(data, dtype=np.uint8, count=need, offset=cur.pos).copy()
    return Image.from_samples(width, height, channels, flat)


def write_image(img: Image, path, ascii: bool = False) -> None:
    """Write ``img`` as PGM/PPM; ``read_image`` round-trips it bit-exactly."""
    if ascii:
        magic = "P2" if img.channels == 1 else "P3"
    else:
        magic = "P5" if img.channels == 1 else "P6"
    header = f"{magic}\n{img.width} {img.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        if ascii:
            flat = img.samples
            for start in range(0, flat.size, 17):
                line = " ".join(str(v) for v in flat[start : start + 17])
                fh.write(line.encode("ascii") + b"\n")
        else:
            fh.write(img.pixels.tobytes())


# ---------------------------------------------------------------------------
# Impulse (salt-and-pepper) noise
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Impulse-noise parameters; identical specs give identical masks anywhere."""

    density: float
    seed: int
    salt_value: int = 255
    pepper_value: int = 0

    def __post_init__(self):
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density {self.density} outside [0, 1]")


def inject_impulse_noise(img: Image, spec: NoiseSpec) -> tuple[Image, np.ndarray]:
    """Corrupt exactly round(density * pixels) distinct positions.

    Positions come from a partial Fisher-Yates shuffle of the flat index
    space, salt vs pepper from one generator bit per position, both off a
    single splitmix64 stream, so the mask depends only on the spec.
    Returns the noisy image and a boolean mask that is true exactly at
    the corrupted positions.
    """
    if img.channels != 1:
        raise UnsupportedInputError("impulse noise is defined for grayscale images")
    h, w = img.pixels.shape
    n = w * h
    count = int(math.floor(spec.density * n + 0.5))
    flat = img.pixels.reshape(-1).copy()
    mask = np.zeros(n, dtype=bool)
    if count:
        # Two draws per corrupted pixel: position, then the salt/pepper bit.
        draws = SplitMix64(spec.seed).stream(2 * count).tolist()
        positions = list(range(n))
        for i in range(count):
            j = i + draws[2 * i] % (n - i)
            positions[i], positions[j] = positions[j], positions[i]
        chosen = np.array(positions[:count], dtype=np.intp)
        salt = np.array([draws[2 * i + 1] >> 63 for i in range(count)], dtype=bool)
        flat[chosen] = np.where(salt, spec.salt_value, spec.pepper_value)
        mask[chosen] = True
    return Image(flat.reshape(h, w)), mask.reshape(h, w)


def count_residual_impulses(img: Image, mask: np.ndarray, margin: int = 0) -> int:
    """Count masked positions whose value is still exactly 0 or 255.

    ``margin`` shrinks the counted region away from every border; pass the
    filter's window radius to ignore pixels whose windows reached the
    zero padding (padding legitimately drags border medians to 0).
    """
    if img.channels != 1:
        raise UnsupportedInputError("impulse accounting is grayscale-only")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.pixels.shape:
        raise ValueError(f"mask shape {mask.shape} != image shape {img.pixels.shape}")
    if margin < 0:
        raise ValueError("margin must be non-negative")
    h, w = img.pixels.shape
    if 2 * margin >= h or 2 * margin >= w:
        return 0
    sl = (slice(margin, h - margin), slice(margin, w - margin))
    vals = img.pixels[sl][mask[sl]]
    return int(((vals == 0) | (vals == 255)).sum())
