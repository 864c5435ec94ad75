"""Grayscale images: PGM/PPM files, gradients, rasterization, synthetic circles."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

G_MAX = 255.0
INSIDE, OUTSIDE = 64, 192


class ImageFormatError(ValueError):
    pass


class GeometryError(ValueError):
    pass


@dataclass
class Image:
    """Intensities in ``pixels[y, x]``, uint8."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.pixels.ndim != 2:
            raise ImageFormatError("image must be a 2-d grid")
        self.pixels = np.ascontiguousarray(self.pixels, dtype=np.uint8)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def constant(cls, width: int, height: int, value: int = 128) -> "Image":
        return cls(np.full((height, width), value, dtype=np.uint8))


# -- netpbm ----------------------------------------------------------------

def _header(data: bytes, magic: bytes) -> tuple[list[int], int]:
    if not data.startswith(magic):
        raise ImageFormatError(f"expected {magic.decode()} header")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated or malformed header")
        fields.append(int(data[start:pos]))
    # exactly one whitespace byte separates the header from the raster
    return fields, pos + 1


def decode_pgm(data: bytes) -> Image:
    (w, h, maxval), off = _header(data, b"P5")
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 is supported, got {maxval}")
    if w <= 0 or h <= 0:
        raise ImageFormatError(f"bad dimensions {w}x{h}")
    raster = data[off:off + w * h]
    if len(raster) != w * h:
        raise ImageFormatError(f"raster has {len(raster)} bytes, header says {w * h}")
    return Image(np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy())


def encode_pgm(img: Image) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.pixels.tobytes()


def read_pgm(path: str | os.PathLike) -> Image:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def write_pgm(path: str | os.PathLike, img: Image) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))


def encode_ppm(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(rgb, np.uint8).tobytes()


def overlay(img: Image, pixels, color=(255, 0, 0)) -> np.ndarray:
    """RGB copy of ``img`` with the given (x, y) pixels painted."""
    rgb = np.repeat(img.pixels[:, :, None], 3, axis=2)
    for x, y in pixels:
        if 0 <= x < img.width and 0 <= y < img.height:
            rgb[y, x] = color
    return rgb


def write_ppm(path: str | os.PathLike, rgb: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_ppm(rgb))


# -- gradients and rasterization --------------------------------------------

def gradient(img: Image) -> tuple[np.ndarray, np.ndarray]:
    """Central differences ``I(x+1) - I(x-1)`` (not halved), edge-replicated."""
    p = np.pad(img.pixels.astype(np.float64), 1, mode="edge")
    gx = p[1:-1, 2:] - p[1:-1, :-2]
    gy = p[2:, 1:-1] - p[:-2, 1:-1]
    return gx, gy


def gradient_magnitude(img: Image) -> np.ndarray:
    gx, gy = gradient(img)
    return np.hypot(gx, gy)


def bresenham(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[int, int]]:
    """Pixels of segment ab; endpoints are put in lexicographic order first
    so both directions give the same pixels."""
    if b < a:
        a, b = b, a
    x0, y0 = a
    x1, y1 = b
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    out = []
    while True:
        out.append((x0, y0))
        if x0 == x1 and y0 == y1:
            return out
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


# -- deterministic noise ------------------------------------------------------

_MASK = (1 << 64) - 1


class SplitMix64:
    """The splitmix64 generator; reproducible across platforms."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in (0, 1): 53 random bits, never exactly 0."""
        return ((self.next_u64() >> 11) + 0.5) / (1 << 53)

    def gauss_pair(self) -> tuple[float, float]:
        u1, u2 = self.uniform(), self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        t = 2.0 * math.pi * u2
        return r * math.cos(t), r * math.sin(t)

    def gaussians(self, n: int) -> np.ndarray:
        out = np.empty(n)
        for i in range(0, n, 2):
            z0, z1 = self.gauss_pair()
            out[i] = z0
            if i + 1 < n:
                out[i + 1] = z1
        return out


@dataclass(frozen=True)
class CircleSpec:
    R: int
    sigma: float
    seed: int = 0


def circle_geometry(spec: CircleSpec) -> tuple[float, float, float]:
    """Circle center and radius drawn from the seed: radius in [R/3, 2R/3],
    center within two pixels of the image center."""
    rng = SplitMix64(spec.seed)
    R = spec.R
    radius = R / 3 + rng.uniform() * R / 3
    cx = R + (rng.uniform() - 0.5) * 4
    cy = R + (rng.uniform() - 0.5) * 4
    return cx, cy, radius


def gen_circle_image(spec: CircleSpec) -> Image:
    """``(2R+1)``-square image: a dark disk on a light background plus
    seeded Gaussian noise, clamped and rounded to 0..255."""
    if spec.sigma < 0:
        raise ValueError("sigma must be non-negative")
    side = 2 * spec.R + 1
    cx, cy, radius = circle_geometry(spec)
    ys, xs = np.mgrid[0:side, 0:side]
    inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius
    base = np.where(inside, float(INSIDE), float(OUTSIDE))
    if spec.sigma > 0:
        # noise stream starts after the geometry draws
        rng = SplitMix64(spec.seed ^ 0x5DEECE66D)
        base = base + spec.sigma * rng.gaussians(side * side).reshape(side, side)
    return Image(np.clip(np.rint(base), 0, 255).astype(np.uint8))


# -- polar sampling for convex objects ---------------------------------------

def polar_point(cx: int, cy: int, theta: float, r: int) -> tuple[int, int]:
    return (cx + int(round(r * math.cos(theta))), cy + int(round(r * math.sin(theta))))


@lru_cache(maxsize=16)
def polar_segments(N: int, R: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pixel offsets of every segment ``(theta_i, r) -> (theta_{i+1}, r')``.

    Returns ``(dx, dy, seg)`` where ``seg`` is the flat index
    ``(i * R + r) * R + r'`` of the segment each offset belongs to.
    """
    thetas = [2 * math.pi * i / N for i in range(N)]
    dxs, dys, segs = [], [], []
    for i in range(N):
        t0, t1 = thetas[i], thetas[(i + 1) % N]
        for r in range(R):
            a = polar_point(0, 0, t0, r)
            for r2 in range(R):
                pix = bresenham(a, polar_point(0, 0, t1, r2))
                s = (i * R + r) * R + r2
                for x, y in pix:
                    dxs.append(x)
                    dys.append(y)
                    segs.append(s)
    out = (np.array(dxs, np.int64), np.array(dys, np.int64), np.array(segs, np.int64))
    for a in out:
        a.setflags(write=False)
    return out
