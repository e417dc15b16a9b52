"""Grid image I/O and rendering: PNGs, annotations, archive heatmaps."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .palette import CategoryPalette
from .qd import Archive
from .repair import FurniturePlacement, as_grid

#: Color of unoccupied archive cells in heatmaps.
EMPTY_CELL_COLOR = (40, 40, 40)
#: Objective color ramp endpoints (worst -> best).
RAMP_LOW = (68, 1, 84)
RAMP_HIGH = (253, 231, 37)


def read_grid_png(path) -> np.ndarray:
    """Load an 8-bit RGB PNG; anything else (alpha, palettized) is rejected."""
    with Image.open(Path(path)) as img:
        if img.mode != "RGB":
            raise ValueError(f"{path}: RGB8 required, got mode {img.mode!r}")
        return np.asarray(img, dtype=np.uint8)


def write_grid_png(grid: np.ndarray, path) -> None:
    Image.fromarray(as_grid(grid), mode="RGB").save(Path(path), format="PNG")


def render_arrangement(
    placements: list[FurniturePlacement],
    palette: CategoryPalette,
    width: int,
    height: int,
) -> np.ndarray:
    """Paint placements with exact palette colors on the exact background."""
    grid = np.empty((height, width, 3), dtype=np.uint8)
    grid[:, :] = palette.background_color
    for placement in placements:
        x, y, w, h = placement.rect
        grid[y : y + h, x : x + w] = palette.categories[placement.category_id].color
    return grid


def annotate_placements(
    grid: np.ndarray, placements: list[FurniturePlacement], palette: CategoryPalette
) -> np.ndarray:
    """Copy of the grid with placement rectangles outlined."""
    outline = (0, 0, 0) if sum(palette.background_color) > 382 else (255, 255, 255)
    out = as_grid(grid).copy()
    for placement in placements:
        x, y, w, h = placement.rect
        out[y, x : x + w] = outline
        out[y + h - 1, x : x + w] = outline
        out[y : y + h, x] = outline
        out[y : y + h, x + w - 1] = outline
    return out


def render_heatmap(archive: Archive, cell_px: int = 16) -> np.ndarray:
    """Archive objective heatmap: price index on x, count index on y.

    Cell color is linear in objective from the worst stored elite up to
    0; empty cells get a reserved sentinel color.  Count grows upward,
    so row 0 of the image is the highest count bin.
    """
    bins_x, bins_y = archive.config.shape
    low = np.array(RAMP_LOW, dtype=np.float64)
    high = np.array(RAMP_HIGH, dtype=np.float64)
    worst = min((e.objective for e in archive.cells.values()), default=0.0)
    cells = np.empty((bins_y, bins_x, 3), dtype=np.uint8)
    cells[:, :] = EMPTY_CELL_COLOR
    for (price_idx, count_idx), elite in archive.cells.items():
        t = 1.0 if worst >= 0 else 1.0 - elite.objective / worst
        color = np.rint(low + (high - low) * t).astype(np.uint8)
        cells[bins_y - 1 - count_idx, price_idx] = color
    return np.repeat(np.repeat(cells, cell_px, axis=0), cell_px, axis=1)
