"""Axis-aligned rectangle arithmetic used throughout area matching.

All areas are rectangles with continuous coordinates (origin top-left).
Rounding to integer pixels only happens when crops are serialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

# Returned by level_of for sizes outside the threshold list.
BELOW_RANGE = -1
ABOVE_RANGE = -2

DEFAULT_LEVEL_THRESHOLDS = (80**2, 130**2, 256**2, 390**2, 560**2)


class GeometryError(ValueError):
    pass


class ExpansionImpossible(GeometryError):
    """The requested level size does not fit in the image."""


@dataclass(frozen=True, order=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise GeometryError(f"degenerate rect {self.as_list()}")

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "Rect":
        return cls(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)

    def width(self) -> float:
        return self.x1 - self.x0

    def height(self) -> float:
        return self.y1 - self.y0

    def size(self) -> float:
        return self.width() * self.height()

    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    def aspect(self) -> float:
        """Elongation ratio, always >= 1."""
        w, h = self.width(), self.height()
        return max(w / h, h / w)

    def contains(self, other: "Rect") -> bool:
        return (self.x0 <= other.x0 and self.y0 <= other.y0
                and self.x1 >= other.x1 and self.y1 >= other.y1)

    def scaled(self, sx: float, sy: float) -> "Rect":
        return Rect(self.x0 * sx, self.y0 * sy, self.x1 * sx, self.y1 * sy)

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass(frozen=True)
class ImageDims:
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise GeometryError(f"invalid image dims {self.width}x{self.height}")

    def area(self) -> float:
        return self.width * self.height

    def rect(self) -> Rect:
        return Rect(0, 0, self.width, self.height)


@dataclass(frozen=True)
class LevelThresholds:
    """Size thresholds TL_0 < ... < TL_L delimiting L size levels."""

    tl: tuple[float, ...] = DEFAULT_LEVEL_THRESHOLDS

    def __post_init__(self):
        object.__setattr__(self, "tl", tuple(self.tl))
        if len(self.tl) < 2:
            raise GeometryError("need at least two thresholds (L >= 1)")
        if any(b <= a for a, b in zip(self.tl, self.tl[1:])):
            raise GeometryError("thresholds must be strictly increasing")

    @property
    def num_levels(self) -> int:
        return len(self.tl) - 1

    def lower_bound(self, level: int) -> float:
        return self.tl[level]


def overlap_rect(a: Rect, b: Rect) -> Rect | None:
    x0, y0 = max(a.x0, b.x0), max(a.y0, b.y0)
    x1, y1 = min(a.x1, b.x1), min(a.y1, b.y1)
    if x0 < x1 and y0 < y1:
        return Rect(x0, y0, x1, y1)
    return None


def overlap_size(a: Rect, b: Rect) -> float:
    w = min(a.x1, b.x1) - max(a.x0, b.x0)
    h = min(a.y1, b.y1) - max(a.y0, b.y0)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: Rect, b: Rect) -> float:
    inter = overlap_size(a, b)
    if inter == 0:
        return 0.0
    return inter / (a.size() + b.size() - inter)


def link_score(a: Rect, b: Rect) -> float:
    """Overlap divided by the smaller of the two sizes."""
    inter = overlap_size(a, b)
    if inter == 0:
        return 0.0
    return min(1.0, inter / min(a.size(), b.size()))


def fuse(a: Rect, b: Rect) -> Rect:
    """Smallest rectangle containing both inputs."""
    return Rect(min(a.x0, b.x0), min(a.y0, b.y0), max(a.x1, b.x1), max(a.y1, b.y1))


def fuse_all(rects: Sequence[Rect]) -> Rect:
    out = rects[0]
    for r in rects[1:]:
        out = fuse(out, r)
    return out


def level_of(a: Rect, t: LevelThresholds) -> int:
    """Index i with TL_i <= size < TL_{i+1}, else BELOW_RANGE / ABOVE_RANGE."""
    s = a.size()
    if s < t.tl[0]:
        return BELOW_RANGE
    if s >= t.tl[-1]:
        return ABOVE_RANGE
    for i in range(t.num_levels):
        if s < t.tl[i + 1]:
            return i
    raise AssertionError("unreachable")


def _shift_inside(lo: float, length: float, extent: float) -> float:
    """Move an interval [lo, lo+length] inside [0, extent]; length <= extent."""
    if lo < 0:
        return 0.0
    if lo + length > extent:
        return extent - length
    return lo


def place_inside(cx: float, cy: float, w: float, h: float, img: ImageDims) -> Rect:
    """Rect of the given size centered at (cx, cy), center-shifted into img."""
    x0 = _shift_inside(cx - w / 2, w, img.width)
    y0 = _shift_inside(cy - h / 2, h, img.height)
    return Rect(x0, y0, x0 + w, y0 + h)


def expand_to_level(a: Rect, target_size: float, img: ImageDims) -> Rect:
    """Grow `a` to `target_size` pixels², keeping its center where possible.

    If both sides are below s = sqrt(target_size) the result is an s x s square;
    otherwise the long side is kept and the short one stretched. A side that
    would leave the image is capped at the image extent and the other side
    stretched to preserve the size.
    """
    if target_size > img.area():
        raise ExpansionImpossible(
            f"target size {target_size} exceeds image area {img.area()}")
    if a.size() >= target_size:
        raise GeometryError("area already reaches the target size")
    s = math.sqrt(target_size)
    w, h = a.width(), a.height()
    if w < s and h < s:
        w = h = s
    elif w >= s:
        h = target_size / w
    else:
        w = target_size / h
    if w > img.width:
        w = img.width
        h = target_size / w
    if h > img.height:
        h = img.height
        w = target_size / h
    cx, cy = a.center()
    out = place_inside(cx, cy, w, h, img)
    # float round-off must not leave the result just under the level floor
    for _ in range(64):
        if out.size() >= target_size:
            break
        if h * (1 + 1e-12) <= img.height:
            h *= 1 + 1e-12
        else:
            w *= 1 + 1e-12
        out = place_inside(cx, cy, w, h, img)
    return out


@dataclass(frozen=True)
class Crop:
    rect: Rect
    clamped: bool  # aspect deviates because the image was too small


def crop_with_aspect(a: Rect, target_aspect: tuple[float, float], spread: float,
                     img: ImageDims) -> Crop:
    """Crop rect with the point matcher's aspect ratio, enlarged by `spread`."""
    if spread < 1:
        raise GeometryError("spread ratio must be >= 1")
    wi, hi = target_aspect
    w, h = a.width(), a.height()
    if w / h > wi / hi:
        h = w * hi / wi
    else:
        w = h * wi / hi
    w *= spread
    h *= spread
    clamped = False
    if w > img.width:
        w, clamped = img.width, True
    if h > img.height:
        h, clamped = img.height, True
    cx, cy = a.center()
    return Crop(place_inside(cx, cy, w, h, img), clamped)


def round_half_up(v: float) -> int:
    return math.floor(v + 0.5)


def rect_to_pixels(r: Rect) -> list[int]:
    return [round_half_up(v) for v in r.as_list()]


def center_distance(a: Rect, b: Rect) -> float:
    (ax, ay), (bx, by) = a.center(), b.center()
    return math.hypot(ax - bx, ay - by)


def clip(a: Rect, bounds: Rect) -> Rect | None:
    return overlap_rect(a, bounds)
