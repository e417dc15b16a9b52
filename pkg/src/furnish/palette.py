"""Category color palettes derived from name embeddings.

Pipeline: ingest precomputed high-dimensional name embeddings from CSV,
reduce them to 3-D with exact t-SNE, min-max scale each axis to an RGB
channel, and attach per-category prices and footprint aspect ratios.
The resulting palette guarantees a minimum pairwise color separation so
that noisy grids can be relabeled robustly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tsne

#: Label used for pixels closest to the reserved floor color.
BACKGROUND = -1

#: Minimum Euclidean RGB distance between any two palette colors.
DEFAULT_MIN_SEPARATION = 20.0


class PaletteError(ValueError):
    """Raised for malformed palette inputs or unsatisfiable color constraints."""


@dataclass
class EmbeddingTable:
    """Ordered (name, vector) rows with a common dimension and unique names."""

    names: list[str]
    vectors: np.ndarray  # (N, dim) float64

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise PaletteError("embedding vectors must form a 2-D array")
        if len(self.names) != self.vectors.shape[0]:
            raise PaletteError("names and vectors disagree in length")
        seen = set()
        for name in self.names:
            if name in seen:
                raise PaletteError(f"duplicate name: {name!r}")
            seen.add(name)

    def __len__(self) -> int:
        return len(self.names)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class CategoryEntry:
    id: int
    name: str
    color: tuple[int, int, int]
    unit_price: float
    default_aspect: float


@dataclass
class CategoryPalette:
    """Furniture categories with RGB codes plus a reserved background color."""

    categories: list[CategoryEntry]
    background_color: tuple[int, int, int] = (0, 0, 0)
    min_separation: float = DEFAULT_MIN_SEPARATION
    _colors: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        for i, entry in enumerate(self.categories):
            if entry.id != i:
                raise PaletteError(f"category ids must be 0..K-1 in order, got {entry.id} at {i}")
            if entry.unit_price < 0:
                raise PaletteError(f"negative price for {entry.name!r}")
            if entry.default_aspect <= 0:
                raise PaletteError(f"non-positive aspect for {entry.name!r}")
        self._colors = np.array(
            [self.background_color] + [e.color for e in self.categories], dtype=np.int64
        )

    def __len__(self) -> int:
        return len(self.categories)

    @property
    def colors_with_background(self) -> np.ndarray:
        """(K+1, 3) int array; row 0 is the background color."""
        return self._colors

    def validate_separation(self) -> None:
        """Check all pairwise color distances, background included."""
        colors = self._colors
        for i in range(len(colors)):
            for j in range(i + 1, len(colors)):
                d = math.dist(colors[i], colors[j])
                if d < self.min_separation:
                    a = "background" if i == 0 else self.categories[i - 1].name
                    b = self.categories[j - 1].name
                    raise PaletteError(
                        f"colors of {a} and {b} are {d:.2f} apart, below {self.min_separation}"
                    )


def color_distance(a, b) -> float:
    """Euclidean distance between two RGB triples."""
    return math.dist(tuple(a), tuple(b))


def load_embeddings(path) -> EmbeddingTable:
    """Read a ``name,e0,...,e{D-1}`` CSV into an :class:`EmbeddingTable`.

    Errors carry 1-based row numbers (header is row 1).  At least four
    entries are required; fewer cannot support any valid perplexity.
    """
    path = Path(path)
    if not path.is_file():
        raise PaletteError(f"missing embeddings file: {path}")
    names: list[str] = []
    rows: list[list[float]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PaletteError(f"{path}: no entries") from None
        if len(header) < 2 or header[0] != "name":
            raise PaletteError(f"{path}: row 1: expected header 'name,e0,...'")
        dim = len(header) - 1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 1:
                raise PaletteError(
                    f"{path}: row {lineno}: expected {dim + 1} fields, got {len(row)}"
                )
            name = row[0]
            if name in names:
                raise PaletteError(f"{path}: row {lineno}: duplicate name {name!r}")
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise PaletteError(f"{path}: row {lineno}: {exc}") from None
            names.append(name)
    if not names:
        raise PaletteError(f"{path}: no entries")
    if len(names) < 4:
        raise PaletteError(f"{path}: need at least 4 entries, got {len(names)}")
    return EmbeddingTable(names, np.array(rows, dtype=np.float64))


def load_prices(path) -> tuple[dict[str, float], dict[str, float]]:
    """Read a ``name,unit_price,default_aspect`` CSV into two name-keyed maps."""
    path = Path(path)
    if not path.is_file():
        raise PaletteError(f"missing price/aspect file: {path}")
    prices: dict[str, float] = {}
    aspects: dict[str, float] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["name", "unit_price", "default_aspect"]:
            raise PaletteError(f"{path}: expected header 'name,unit_price,default_aspect'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise PaletteError(f"{path}: row {lineno}: expected 3 fields, got {len(row)}")
            name = row[0]
            if name in prices:
                raise PaletteError(f"{path}: row {lineno}: duplicate name {name!r}")
            try:
                prices[name] = float(row[1])
                aspects[name] = float(row[2])
            except ValueError as exc:
                raise PaletteError(f"{path}: row {lineno}: {exc}") from None
    return prices, aspects


def scale_to_rgb(points: np.ndarray) -> np.ndarray:
    """Min-max scale each of the 3 axes to [0, 255], rounding half up.

    A zero-range axis maps to 0.  Applying the function to its own
    integer output returns the same points.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise PaletteError("expected an (N, 3) point array")
    if pts.shape[0] < 1:
        raise PaletteError("need at least one point")
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    out = np.zeros_like(pts)
    nonzero = span > 0
    out[:, nonzero] = (pts[:, nonzero] - lo[nonzero]) / span[nonzero] * 255.0
    return np.floor(out + 0.5).astype(np.int64)


def build_palette(
    table: EmbeddingTable,
    prices: dict[str, float],
    aspects: dict[str, float],
    perplexity: float = 5.0,
    iterations: int = 1000,
    seed: int = 0,
    min_separation: float = DEFAULT_MIN_SEPARATION,
    max_retries: int = 10,
) -> CategoryPalette:
    """Run t-SNE + RGB scaling and assemble a validated palette.

    The background color is (0, 0, 0), shifted to (255, 255, 255) if a
    category lands within ``min_separation`` of black.  Layouts violating
    the separation constraint retry t-SNE with ``seed + 1`` up to
    ``max_retries`` times before failing.
    """
    missing_p = [n for n in table.names if n not in prices]
    missing_a = [n for n in table.names if n not in aspects]
    if missing_p or missing_a:
        parts = []
        if missing_p:
            parts.append("missing price for " + ", ".join(repr(n) for n in missing_p))
        if missing_a:
            parts.append("missing aspect for " + ", ".join(repr(n) for n in missing_a))
        raise PaletteError("; ".join(parts))

    last_error: PaletteError | None = None
    for attempt in range(max_retries + 1):
        points = tsne.tsne_reduce(
            table.vectors, perplexity=perplexity, iterations=iterations, seed=seed + attempt
        )
        colors = scale_to_rgb(points)
        background = (0, 0, 0)
        dist_to_black = np.sqrt((colors.astype(np.float64) ** 2).sum(axis=1))
        if dist_to_black.min() < min_separation:
            background = (255, 255, 255)
        entries = [
            CategoryEntry(
                id=i,
                name=name,
                color=tuple(int(c) for c in colors[i]),
                unit_price=float(prices[name]),
                default_aspect=float(aspects[name]),
            )
            for i, name in enumerate(table.names)
        ]
        palette = CategoryPalette(entries, background, min_separation)
        try:
            palette.validate_separation()
            return palette
        except PaletteError as exc:
            last_error = exc
    raise PaletteError(
        f"no palette with separation >= {min_separation} after {max_retries + 1} attempts: {last_error}"
    )


def nearest_category(pixel, palette: CategoryPalette) -> tuple[int, float]:
    """Label of the closest palette color: a category id or :data:`BACKGROUND`.

    Ties break toward the background, then the lowest category id.
    Distances are compared as exact squared integers, so ties are exact.
    """
    px = np.asarray(pixel, dtype=np.int64)
    d2 = ((palette.colors_with_background - px) ** 2).sum(axis=1)
    idx = int(np.argmin(d2))  # argmin takes the first minimum: background, then low ids
    return idx - 1 if idx > 0 else BACKGROUND, math.sqrt(float(d2[idx]))


def write_palette(palette: CategoryPalette, path) -> None:
    """Write the palette CSV; the final row holds the background color."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "name", "r", "g", "b", "unit_price", "default_aspect"])
        for e in palette.categories:
            writer.writerow([e.id, e.name, *e.color, repr(e.unit_price), repr(e.default_aspect)])
        writer.writerow(["BACKGROUND", "", *palette.background_color, "", ""])


def read_palette(path, min_separation: float = DEFAULT_MIN_SEPARATION) -> CategoryPalette:
    """Parse a palette CSV produced by :func:`write_palette`."""
    path = Path(path)
    entries: list[CategoryEntry] = []
    background: tuple[int, int, int] | None = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:5] != ["id", "name", "r", "g", "b"]:
            raise PaletteError(f"{path}: not a palette file")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if row[0] == "BACKGROUND":
                background = (int(row[2]), int(row[3]), int(row[4]))
                continue
            try:
                entries.append(
                    CategoryEntry(
                        id=int(row[0]),
                        name=row[1],
                        color=(int(row[2]), int(row[3]), int(row[4])),
                        unit_price=float(row[5]),
                        default_aspect=float(row[6]),
                    )
                )
            except (IndexError, ValueError) as exc:
                raise PaletteError(f"{path}: row {lineno}: {exc}") from None
    if background is None:
        raise PaletteError(f"{path}: missing BACKGROUND row")
    return CategoryPalette(entries, background, min_separation)
