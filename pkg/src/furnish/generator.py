"""Latent-vector to occupancy-grid generators.

Two implementations sit behind one ``generate(z)`` interface: a
deterministic procedural decoder for desk-scale experiments, and a
client for external generator processes speaking the line-delimited
JSON wire protocol (see :mod:`furnish.wire`).

The procedural decode is piecewise constant in ``z``: every continuous
coordinate is squashed through a sigmoid and quantized before use, and
the corruption RNG is seeded from a hash of the quantized decode, so
nudging ``z`` within a quantization cell reproduces the identical grid.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .palette import CategoryPalette
from .repair import Rect


@dataclass(frozen=True)
class SynthParams:
    latent_dim: int = 16
    width: int = 64
    height: int = 64
    k_max: int = 10
    noise_max: int = 25
    flip_max: int = 32

    def __post_init__(self):
        if self.latent_dim < 4:
            raise ValueError("latent_dim must be >= 4 (count, body, noise, flips)")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.noise_max < 0 or self.flip_max < 0:
            raise ValueError("noise_max and flip_max must be >= 0")
        cols, rows = self.slot_grid
        if self.width // cols < 4 or self.height // rows < 4:
            raise ValueError(
                f"{self.width}x{self.height} grid too small for k_max={self.k_max} slots"
            )

    @property
    def slot_grid(self) -> tuple[int, int]:
        cols = math.ceil(math.sqrt(self.k_max))
        rows = math.ceil(self.k_max / cols)
        return cols, rows


@dataclass(frozen=True)
class Piece:
    category_id: int
    rect: Rect


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _quantize(t: float, levels: int) -> int:
    """Map a real through a sigmoid onto {0, ..., levels-1}."""
    return min(int(_sigmoid(t) * levels), levels - 1)


def decode_layout(
    z: np.ndarray, n_categories: int, params: SynthParams
) -> tuple[list[Piece], int, int]:
    """Quantized decode of a latent: pieces, noise std, and flip count.

    z[0] selects the piece count; each piece reads five body values
    (wrapping over z[1:-2]) for category, in-slot position, and size;
    z[-2] and z[-1] set the corruption levels.  Pieces live in disjoint
    slots with a one-cell margin, so an uncorrupted layout is always a
    set of separated exact-color rectangles.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (params.latent_dim,):
        raise ValueError(f"latent has shape {z.shape}, generator wants ({params.latent_dim},)")
    if not np.all(np.isfinite(z)):
        raise ValueError("latent entries must be finite")

    count = _quantize(float(z[0]), params.k_max + 1)
    body = z[1 : params.latent_dim - 2]
    cols, rows = params.slot_grid
    slot_w, slot_h = params.width // cols, params.height // rows

    pieces = []
    for j in range(count):
        v = [float(body[(5 * j + i) % len(body)]) for i in range(5)]
        category = _quantize(v[0], n_categories)
        w = 2 + _quantize(v[3], slot_w - 3)  # w in [2, slot_w - 2]
        h = 2 + _quantize(v[4], slot_h - 3)
        x_in = 1 + _quantize(v[1], slot_w - w - 1)  # keep a 1-cell slot margin
        y_in = 1 + _quantize(v[2], slot_h - h - 1)
        x = (j % cols) * slot_w + x_in
        y = (j // cols) * slot_h + y_in
        pieces.append(Piece(category, Rect(x, y, w, h)))

    noise_std = _quantize(float(z[params.latent_dim - 2]), params.noise_max + 1)
    flip_count = _quantize(float(z[params.latent_dim - 1]), params.flip_max + 1)
    return pieces, noise_std, flip_count


def paint_layout(pieces: list[Piece], palette: CategoryPalette, params: SynthParams) -> np.ndarray:
    """Solid rectangles of exact category colors over the exact background."""
    grid = np.empty((params.height, params.width, 3), dtype=np.uint8)
    grid[:, :] = palette.background_color
    for piece in pieces:
        x, y, w, h = piece.rect
        grid[y : y + h, x : x + w] = palette.categories[piece.category_id].color
    return grid


def _corruption_seed(pieces: list[Piece], noise_std: int, flip_count: int) -> int:
    ints = [len(pieces)]
    for piece in pieces:
        ints.extend([piece.category_id, *piece.rect])
    ints.extend([noise_std, flip_count])
    digest = hashlib.sha256(struct.pack(f"<{len(ints)}q", *ints)).digest()
    return int.from_bytes(digest[:8], "little")


def synth_generate(z: np.ndarray, palette: CategoryPalette, params: SynthParams) -> np.ndarray:
    """Decode, paint, then corrupt: Gaussian color noise plus pixel flips.

    Pure function of (z, palette, params): the corruption RNG is seeded
    by hashing the quantized decode of ``z``.
    """
    pieces, noise_std, flip_count = decode_layout(z, len(palette), params)
    grid = paint_layout(pieces, palette, params)

    rng = np.random.default_rng(_corruption_seed(pieces, noise_std, flip_count))
    noise = rng.normal(0.0, float(noise_std), size=grid.shape)
    noisy = np.clip(np.rint(grid.astype(np.float64) + noise), 0, 255).astype(np.uint8)
    if flip_count:
        flat = noisy.reshape(-1, 3)
        positions = rng.choice(flat.shape[0], size=flip_count, replace=False)
        flat[positions] = rng.integers(0, 256, size=(flip_count, 3), dtype=np.uint8)
    return noisy


class BuiltinGenerator:
    """Procedural generator bound to a palette; the desk-scale GAN stand-in."""

    kind = "builtin"

    def __init__(self, palette: CategoryPalette, params: SynthParams | None = None):
        self.palette = palette
        self.params = params or SynthParams()

    @property
    def latent_dim(self) -> int:
        return self.params.latent_dim

    @property
    def width(self) -> int:
        return self.params.width

    @property
    def height(self) -> int:
        return self.params.height

    def generate(self, z: np.ndarray) -> np.ndarray:
        return synth_generate(z, self.palette, self.params)

    def close(self) -> None:
        pass
