"""Area similarity: activity-map combination, providers and the pruned matrix."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .geometry import Rect, overlap_size

GRID = 8
NCC_SIDE = 64  # common square resolution for NCC; 8 px per patch
GT_ACTIVITY_FRACTION = 0.6


class ProviderError(RuntimeError):
    """A similarity provider failed to compute a value."""


class ProviderUnavailable(ProviderError):
    """The data a provider needs is missing."""


@dataclass(frozen=True)
class AreaRef:
    """An area handed to a provider: its graph node id and native-frame rect."""

    node_id: int
    rect: Rect


class SimilarityProvider(Protocol):
    def compute(self, a0: AreaRef, a1: AreaRef) -> float: ...


def combine_activity(m0: np.ndarray, m1: np.ndarray) -> float:
    """Similarity as the product of the two activity maps' means."""
    m0, m1 = np.asarray(m0, dtype=float), np.asarray(m1, dtype=float)
    if m0.shape != m1.shape:
        raise ValueError(f"activity map shapes differ: {m0.shape} vs {m1.shape}")
    return float(m0.mean() * m1.mean())


# ---------------------------------------------------------------------------
# ground truth

@dataclass(frozen=True)
class ScaleTranslation:
    """x' = s * x + t, mapping one image plane into another."""

    scale: float
    tx: float
    ty: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def apply(self, r: Rect) -> Rect:
        s = self.scale
        return Rect(s * r.x0 + self.tx, s * r.y0 + self.ty, s * r.x1 + self.tx, s * r.y1 + self.ty)

    def inverse(self) -> "ScaleTranslation":
        return ScaleTranslation(1 / self.scale, -self.tx / self.scale, -self.ty / self.scale)


def gt_activity_map(area: Rect, transform: ScaleTranslation, other: Rect,
                    grid: int = GRID) -> np.ndarray:
    """Binary activity per patch: 1 if more than 60% of its pixels land inside `other`."""
    out = np.zeros((grid, grid))
    pw, ph = area.width() / grid, area.height() / grid
    for r in range(grid):
        for c in range(grid):
            patch = Rect(area.x0 + c * pw, area.y0 + r * ph,
                         area.x0 + (c + 1) * pw, area.y0 + (r + 1) * ph)
            mapped = transform.apply(patch)
            frac = overlap_size(mapped, other) / mapped.size()
            out[r, c] = 1.0 if frac > GT_ACTIVITY_FRACTION else 0.0
    return out


class GroundTruthProvider:
    """Geometric similarity from a known scale+translation between the images."""

    def __init__(self, transform: ScaleTranslation):
        self.transform = transform
        self._inv = transform.inverse()

    def compute(self, a0: AreaRef, a1: AreaRef) -> float:
        m0 = gt_activity_map(a0.rect, self.transform, a1.rect)
        m1 = gt_activity_map(a1.rect, self._inv, a0.rect)
        return combine_activity(m0, m1)


# ---------------------------------------------------------------------------
# normalized cross-correlation

def load_gray(path: str | Path) -> np.ndarray:
    from PIL import Image

    p = Path(path)
    if not p.exists():
        raise ProviderUnavailable(f"image file not found: {p}")
    with Image.open(p) as im:
        return np.asarray(im.convert("L"), dtype=float)


def _resample(img: np.ndarray, r: Rect, side: int = NCC_SIDE) -> np.ndarray:
    """Bilinear resample of rect `r` onto a side x side grid (pixel centers)."""
    h, w = img.shape
    xs = r.x0 + (np.arange(side) + 0.5) * r.width() / side - 0.5
    ys = r.y0 + (np.arange(side) + 0.5) * r.height() / side - 0.5
    xs = np.clip(xs, 0, w - 1)
    ys = np.clip(ys, 0, h - 1)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[None, :]
    fy = (ys - y0)[:, None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def ncc_activity(p0: np.ndarray, p1: np.ndarray, grid: int = GRID) -> np.ndarray:
    """Per-patch NCC clipped to [0, 1]; zero-variance patches get activity 0."""
    side = p0.shape[0]
    step = side // grid
    out = np.zeros((grid, grid))
    for r in range(grid):
        for c in range(grid):
            a = p0[r * step:(r + 1) * step, c * step:(c + 1) * step].ravel()
            b = p1[r * step:(r + 1) * step, c * step:(c + 1) * step].ravel()
            a = a - a.mean()
            b = b - b.mean()
            den = np.sqrt((a @ a) * (b @ b))
            if den <= 1e-12:
                continue
            out[r, c] = min(1.0, max(0.0, float(a @ b) / den))
    return out


class NCCProvider:
    """Heuristic appearance similarity from grayscale images.

    Both areas are bilinearly resampled to 64x64 and compared patch by patch;
    the resulting map serves as the activity map of both areas.
    """

    def __init__(self, image0: np.ndarray | None, image1: np.ndarray | None):
        if image0 is None or image1 is None:
            raise ProviderUnavailable("ncc provider needs both grayscale images")
        self.image0 = np.asarray(image0, dtype=float)
        self.image1 = np.asarray(image1, dtype=float)

    @classmethod
    def from_files(cls, path0, path1) -> "NCCProvider":
        return cls(load_gray(path0), load_gray(path1))

    def compute(self, a0: AreaRef, a1: AreaRef) -> float:
        m = ncc_activity(_resample(self.image0, a0.rect), _resample(self.image1, a1.rect))
        return combine_activity(m, m)


class ConstantProvider:
    """Test stub: similarities looked up by (node id in image 0, node id in image 1)."""

    def __init__(self, table: dict[tuple[int, int], float], default: float = 0.0):
        self.table = dict(table)
        self.default = default

    @classmethod
    def from_json(cls, path) -> "ConstantProvider":
        p = Path(path)
        if not p.exists():
            raise ProviderUnavailable(f"similarity table not found: {p}")
        data = json.loads(p.read_text())
        table = {(int(i), int(j)): float(v) for i, j, v in data.get("pairs", [])}
        return cls(table, float(data.get("default", 0.0)))

    def compute(self, a0: AreaRef, a1: AreaRef) -> float:
        return self.table.get((a0.node_id, a1.node_id), self.default)


# ---------------------------------------------------------------------------
# similarity matrix

_PRUNED = 0.0


class SimilarityMatrix:
    """Lazily filled |V0| x |V1| similarity table with one-level ABN pruning.

    Cells are published once: a value computed concurrently for an already
    filled cell is discarded. When a computed value falls below ``t_as``,
    every pair of next-level children of the two nodes is set to 0 without
    consulting the provider.
    """

    def __init__(self, g0, g1, provider: SimilarityProvider, t_as: float = 0.05,
                 prune: bool = True, ref0: Callable[[int], AreaRef] | None = None,
                 ref1: Callable[[int], AreaRef] | None = None):
        self.g0, self.g1 = g0, g1
        self.provider = provider
        self.t_as = t_as
        self.prune = prune
        self.ref0 = ref0 or (lambda i: AreaRef(i, g0.nodes[i].rect))
        self.ref1 = ref1 or (lambda j: AreaRef(j, g1.nodes[j].rect))
        self._cells: dict[tuple[int, int], float] = {}
        self._pruned: set[tuple[int, int]] = set()
        self._lock = threading.Lock()
        self.provider_calls = 0

    def __contains__(self, key: tuple[int, int]) -> bool:
        return key in self._cells

    def is_pruned(self, i: int, j: int) -> bool:
        return (i, j) in self._pruned

    @property
    def pruned_count(self) -> int:
        return len(self._pruned)

    @property
    def pruned_cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(self._pruned)

    @property
    def computed(self) -> dict[tuple[int, int], float]:
        return {k: v for k, v in self._cells.items() if k not in self._pruned}

    def get(self, i: int, j: int) -> float:
        key = (i, j)
        v = self._cells.get(key)
        if v is not None:
            return v
        value = float(self.provider.compute(self.ref0(i), self.ref1(j)))
        if not 0.0 <= value <= 1.0:
            raise ProviderError(f"similarity {value} outside [0, 1] for {key}")
        with self._lock:
            self.provider_calls += 1
            if key in self._cells:
                return self._cells[key]
            self._cells[key] = value
            if self.prune and value < self.t_as:
                for h in self.g0.next_level_children(i):
                    for k in self.g1.next_level_children(j):
                        if (h, k) not in self._cells:
                            self._cells[(h, k)] = _PRUNED
                            self._pruned.add((h, k))
        return value


class OrientedView:
    """Reads a shared matrix with (source graph node, target graph node) indices."""

    def __init__(self, matrix: SimilarityMatrix, forward: bool):
        self.matrix = matrix
        self.forward = forward

    def sim(self, src: int, tgt: int) -> float:
        if self.forward:
            return self.matrix.get(src, tgt)
        return self.matrix.get(tgt, src)
