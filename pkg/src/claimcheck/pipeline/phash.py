"""Difference-hash image fingerprints (dhash-9x8, 64 bits).

The pipeline is pinned so independent implementations agree bit for bit:

1. 8-bit grayscale via luma weights 0.299 R + 0.587 G + 0.114 B
   (grayscale inputs pass through);
2. bilinear resample to 9 columns x 8 rows, half-pixel centers with edge
   clamping (``x_src = (x + 0.5) * W / 9 - 0.5``);
3. bit (r, c) = 1 iff pixel[r, c] > pixel[r, c+1], strictly;
4. row-major packing, bit (r, c) at position 63 - (r * 8 + c) so the
   first comparison lands in the most significant bit.

A uniform image hashes to 0; near-duplicate images land within a small
Hamming distance (the matcher's default threshold is 8 of 64 bits).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ClaimCheckError, ConfigurationError

ALGORITHM = "dhash-9x8"
DEFAULT_THRESHOLD = 8


class ImageDecodeError(ClaimCheckError):
    pass


@dataclass(frozen=True)
class PerceptualHash:
    bits: int
    algorithm: str = ALGORITHM

    def hamming(self, other: "PerceptualHash") -> int:
        if self.algorithm != other.algorithm:
            raise ConfigurationError(
                f"hash algorithm mismatch: {self.algorithm} vs {other.algorithm}"
            )
        return int(bin(self.bits ^ other.bits).count("1"))

    def hex(self) -> str:
        return f"{self.bits:016x}"

    @classmethod
    def from_hex(cls, s: str, algorithm: str = ALGORITHM) -> "PerceptualHash":
        return cls(int(s, 16), algorithm)


def _to_grayscale(pixels: np.ndarray) -> np.ndarray:
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] >= 3:
        arr = 0.299 * arr[:, :, 0] + 0.587 * arr[:, :, 1] + 0.114 * arr[:, :, 2]
    elif arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    elif arr.ndim != 2:
        raise ImageDecodeError(f"cannot interpret pixel array of shape {arr.shape}")
    return arr


def _bilinear_resize(gray: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    in_h, in_w = gray.shape
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    x1 = np.clip(x0 + 1, 0, in_w - 1)
    y1 = np.clip(y0 + 1, 0, in_h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)
    top = gray[np.ix_(y0, x0)] * (1 - fx) + gray[np.ix_(y0, x1)] * fx
    bot = gray[np.ix_(y1, x0)] * (1 - fx) + gray[np.ix_(y1, x1)] * fx
    return top * (1 - fy[:, None]) + bot * fy[:, None]


def perceptual_hash(image) -> PerceptualHash:
    """Hash a numpy pixel array (HxW or HxWxC), a PIL image, or a file path."""
    pixels = _decode(image)
    if pixels.size == 0 or pixels.shape[0] < 1 or pixels.shape[1] < 1:
        raise ImageDecodeError("empty image")
    gray = _to_grayscale(pixels)
    small = _bilinear_resize(gray, out_w=9, out_h=8)
    bits = 0
    for r in range(8):
        for c in range(8):
            bits <<= 1
            if small[r, c] > small[r, c + 1]:
                bits |= 1
    return PerceptualHash(bits)


def _decode(image) -> np.ndarray:
    if isinstance(image, np.ndarray):
        return image
    if isinstance(image, (str, Path)):
        try:
            from PIL import Image

            with Image.open(image) as im:
                return np.asarray(im.convert("RGB"), dtype=np.float64)
        except Exception as exc:
            raise ImageDecodeError(f"cannot decode image file {image}: {exc}") from exc
    # PIL image or anything array-like with a convert() method
    conv = getattr(image, "convert", None)
    if conv is not None:
        return np.asarray(conv("RGB"), dtype=np.float64)
    try:
        return np.asarray(image, dtype=np.float64)
    except Exception as exc:
        raise ImageDecodeError(f"cannot decode image input: {exc}") from exc


def hash_match(a: PerceptualHash, b: PerceptualHash, threshold: int = DEFAULT_THRESHOLD) -> bool:
    return a.hamming(b) <= threshold
