"""Rectangle-sweep repair of RGB occupancy grids.

Turns a noisy grid into discrete axis-aligned furniture placements:
pixels are labeled by nearest palette color, connected components are
extracted per category, and each component gets the rectangle that
minimizes the color-space cost of snapping the region to a clean
"one rectangle on clean floor" interpretation.

Costs are Euclidean RGB distances quantized to integer multiples of
2**-20, which makes every rectangle score an exact int64 sum: scores
compare exactly, tie-breaks are deterministic, and summation order
cannot change results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy import ndimage

from .palette import BACKGROUND, CategoryPalette

#: Cost quantization: one unit of Euclidean RGB distance = 2**20 ticks.
COST_QUANT = 1 << 20

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int64)


class Rect(NamedTuple):
    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True)
class FurniturePlacement:
    category_id: int
    rect: Rect
    orientation: int  # 0 or 90 degrees
    fit_cost: float


@dataclass
class Arrangement:
    placements: list[FurniturePlacement]
    repair_cost: float
    overlap_pairs: list[tuple[int, int]]


@dataclass
class Component:
    """Pixels of one 4-connected region, in raster order, plus its bounding box."""

    ys: np.ndarray
    xs: np.ndarray
    bbox: tuple[int, int, int, int]  # (y0, x0, y1, x1), inclusive

    def __len__(self) -> int:
        return len(self.ys)


def as_grid(pixels) -> np.ndarray:
    """Validate and return an (H, W, 3) uint8 occupancy grid."""
    grid = np.asarray(pixels)
    if grid.ndim != 3 or grid.shape[2] != 3 or grid.shape[0] < 1 or grid.shape[1] < 1:
        raise ValueError(f"expected an (H, W, 3) grid, got shape {grid.shape}")
    return grid.astype(np.uint8, copy=False)


def quantized_distance_field(grid: np.ndarray, color) -> np.ndarray:
    """Per-pixel distance to ``color`` in exact 2**-20 RGB-distance ticks."""
    diff = grid.astype(np.int64) - np.asarray(color, dtype=np.int64)
    dist = np.sqrt((diff * diff).sum(axis=2))
    return np.rint(dist * COST_QUANT).astype(np.int64)


def label_pixels(grid: np.ndarray, palette: CategoryPalette) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-palette-color labeling.

    Returns an (H, W) int label map (category id, or BACKGROUND == -1)
    and the (H, W) float map of distances to the winning color.  Ties
    resolve toward the background, then the lowest category id, via
    exact integer squared distances.
    """
    grid = as_grid(grid)
    height, width = grid.shape[:2]
    colors = palette.colors_with_background.astype(np.int32)  # row 0 = background
    flat = grid.reshape(-1, 3).astype(np.int32)
    # |p - c|^2 = |p|^2 + |c|^2 - 2 p.c, exact in int32 for 8-bit channels
    d2 = (
        (flat * flat).sum(axis=1)[:, None]
        + (colors * colors).sum(axis=1)[None, :]
        - 2 * (flat @ colors.T)
    )
    nearest = d2.argmin(axis=1)  # first minimum: background, then ascending ids
    labels = (nearest.astype(np.int32) - 1).reshape(height, width)
    dists = np.sqrt(d2[np.arange(d2.shape[0]), nearest].astype(np.float64)).reshape(height, width)
    return labels, dists


def connected_components(labels: np.ndarray, category_id: int) -> list[Component]:
    """4-connected components of ``category_id`` pixels.

    Ordered by the raster position of each component's first (top-most,
    then left-most) pixel; pixels within a component are raster-ordered.
    """
    mask = labels == category_id
    if not mask.any():
        return []
    lab, count = ndimage.label(mask, structure=_FOUR_CONNECTED)
    flat = lab.ravel()
    idx = np.flatnonzero(flat)  # ascending == raster order
    vals = flat[idx]
    uniq, first_pos = np.unique(vals, return_index=True)
    order = np.argsort(first_pos, kind="stable")  # component ids by first occurrence
    by_val = np.argsort(vals, kind="stable")
    starts = np.searchsorted(vals[by_val], uniq)
    ends = np.append(starts[1:], len(vals))
    width = labels.shape[1]
    components = []
    for k in order:
        pix = idx[by_val[starts[k]:ends[k]]]
        ys, xs = pix // width, pix % width
        components.append(
            Component(ys, xs, (int(ys.min()), int(xs.min()), int(ys.max()), int(xs.max())))
        )
    return components


@njit(cache=True)
def _best_rectangle(strip: np.ndarray, prefix: np.ndarray) -> tuple[int, int, int, int, int]:
    """Minimum-sum rectangle over a 2-D int64 field.

    ``prefix`` is the (H+1, W+1) inclusion-exclusion table of the field;
    every candidate rectangle is scored in O(1) from it.  Ties prefer
    smaller area, then smaller y0, x0, then smaller height.
    Returns (sum, y0, x0, h, w).
    """
    height = prefix.shape[0] - 1
    width = prefix.shape[1] - 1
    best_s = np.int64(2**62)
    best_area = np.int64(2**62)
    by0 = bx0 = bh = bw = 0
    for y0 in range(height):
        for y1 in range(y0, height):
            h = y1 - y0 + 1
            for x in range(width + 1):
                strip[x] = prefix[y1 + 1, x] - prefix[y0, x]
            for x0 in range(width):
                base = strip[x0]
                for x1 in range(x0, width):
                    s = strip[x1 + 1] - base
                    if s > best_s:
                        continue
                    w = x1 - x0 + 1
                    area = h * w
                    if s < best_s or (
                        area < best_area
                        or (
                            area == best_area
                            and (
                                y0 < by0
                                or (
                                    y0 == by0
                                    and (x0 < bx0 or (x0 == bx0 and (h < bh or (h == bh and w < bw))))
                                )
                            )
                        )
                    ):
                        best_s, best_area = s, area
                        by0, bx0, bh, bw = y0, x0, h, w
    return best_s, by0, bx0, bh, bw


def _sweep_fields(
    cat_cost: np.ndarray,
    bg_cost: np.ndarray,
    component: Component,
    min_area: int,
) -> tuple[Rect, int] | None:
    """Sweep on precomputed cost fields; returns (rect, integer cost) or None."""
    y0, x0, y1, x1 = component.bbox
    if (y1 - y0 + 1) * (x1 - x0 + 1) < min_area:
        return None  # no candidate rectangle can pass the noise filter
    local_cat = cat_cost[y0 : y1 + 1, x0 : x1 + 1]
    member_bg = np.zeros(local_cat.shape, dtype=np.int64)
    member_bg[component.ys - y0, component.xs - x0] = bg_cost[component.ys, component.xs]
    total_bg = int(member_bg.sum())
    field = local_cat - member_bg
    prefix = np.zeros((field.shape[0] + 1, field.shape[1] + 1), dtype=np.int64)
    np.cumsum(np.cumsum(field, axis=0), axis=1, out=prefix[1:, 1:])
    strip = np.empty(field.shape[1] + 1, dtype=np.int64)
    inner_sum, ry, rx, rh, rw = _best_rectangle(strip, prefix)
    if rh * rw < min_area:
        return None
    return Rect(x0 + int(rx), y0 + int(ry), int(rw), int(rh)), total_bg + int(inner_sum)


def sweep_rectangle(
    grid: np.ndarray,
    component: Component,
    category_id: int,
    palette: CategoryPalette,
    min_area: int = 4,
) -> tuple[Rect, float] | None:
    """Best axis-aligned rectangle for one component.

    Scores every rectangle inside the component's bounding box:
    pixels inside pay their distance to the category color, component
    pixels left outside pay their distance to the background.  Returns
    None when the winning rectangle is smaller than ``min_area`` (noise).
    """
    if len(component) == 0:
        raise ValueError("component must be nonempty")
    grid = as_grid(grid)
    cat_cost = quantized_distance_field(grid, palette.categories[category_id].color)
    bg_cost = quantized_distance_field(grid, palette.background_color)
    result = _sweep_fields(cat_cost, bg_cost, component, min_area)
    if result is None:
        return None
    rect, cost = result
    return rect, cost / COST_QUANT


def infer_orientation(rect: Rect, default_aspect: float) -> int:
    """0 if the rect's w/h is at least as close to the aspect as h/w, else 90."""
    upright = abs(rect.w / rect.h - default_aspect)
    rotated = abs(rect.h / rect.w - default_aspect)
    return 0 if upright <= rotated else 90


def rectangles_intersect(a: Rect, b: Rect) -> bool:
    return a.x < b.x + b.w and b.x < a.x + a.w and a.y < b.y + b.h and b.y < a.y + a.h


def repair_grid(grid: np.ndarray, palette: CategoryPalette, min_area: int = 4) -> Arrangement:
    """Full repair: label, sweep every component, account for leftovers.

    The repair cost is the sum of accepted rectangle fit costs plus, for
    every labeled pixel not explained by any accepted component or
    covered by an accepted rectangle, its distance to the background
    (the cost of erasing it).  Placements are sorted by
    (category_id, y, x); overlapping placements are reported, not fixed.
    """
    grid = as_grid(grid)
    labels, _ = label_pixels(grid, palette)
    bg_cost = quantized_distance_field(grid, palette.background_color)
    height, width = labels.shape

    explained = np.zeros((height, width), dtype=bool)
    covered = np.zeros((height, width), dtype=bool)
    raw: list[tuple[int, Rect, int]] = []
    present = np.unique(labels)
    for category_id in (int(c) for c in present if c != BACKGROUND):
        components = connected_components(labels, category_id)
        if all(
            (c.bbox[2] - c.bbox[0] + 1) * (c.bbox[3] - c.bbox[1] + 1) < min_area
            for c in components
        ):
            continue  # nothing but noise specks; skip the cost field entirely
        cat_cost = quantized_distance_field(grid, palette.categories[category_id].color)
        for component in components:
            result = _sweep_fields(cat_cost, bg_cost, component, min_area)
            if result is None:
                continue
            rect, cost = result
            raw.append((category_id, rect, cost))
            explained[component.ys, component.xs] = True
            covered[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w] = True

    total = sum(cost for _, _, cost in raw)
    residual = (labels != BACKGROUND) & ~explained & ~covered
    total += int(bg_cost[residual].sum())

    raw.sort(key=lambda item: (item[0], item[1].y, item[1].x))
    placements = [
        FurniturePlacement(
            category_id=cid,
            rect=rect,
            orientation=infer_orientation(rect, palette.categories[cid].default_aspect),
            fit_cost=cost / COST_QUANT,
        )
        for cid, rect, cost in raw
    ]
    overlaps = [
        (i, j)
        for i in range(len(placements))
        for j in range(i + 1, len(placements))
        if rectangles_intersect(placements[i].rect, placements[j].rect)
    ]
    return Arrangement(placements, total / COST_QUANT, overlaps)
