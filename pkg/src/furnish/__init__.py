"""Diverse indoor furniture arrangements.

Semantic color palettes for occupancy grids, rectangle-sweep repair of
noisy grids into discrete placements, and CMA-ME search over a
generator's latent space for arrangements diverse in total price and
furniture count.
"""

from .generator import BuiltinGenerator, SynthParams, synth_generate
from .measures import ArchiveConfig, MeasureValue, bin_measures, compute_measures
from .palette import (
    BACKGROUND,
    CategoryPalette,
    EmbeddingTable,
    build_palette,
    load_embeddings,
    load_prices,
    nearest_category,
    read_palette,
    scale_to_rgb,
    write_palette,
)
from .qd import Archive, CmaEs, Elite, Emitter, InsertStatus, rank_by_improvement, run_lsi
from .repair import (
    Arrangement,
    FurniturePlacement,
    Rect,
    connected_components,
    infer_orientation,
    label_pixels,
    repair_grid,
    sweep_rectangle,
)
from .tsne import tsne_reduce
from .wire import ExternalGenerator, WireProtocolError

__version__ = "0.1.0"

__all__ = [
    "ArchiveConfig",
    "Archive",
    "Arrangement",
    "BACKGROUND",
    "BuiltinGenerator",
    "CategoryPalette",
    "CmaEs",
    "Elite",
    "EmbeddingTable",
    "Emitter",
    "ExternalGenerator",
    "FurniturePlacement",
    "InsertStatus",
    "MeasureValue",
    "Rect",
    "SynthParams",
    "WireProtocolError",
    "bin_measures",
    "build_palette",
    "compute_measures",
    "connected_components",
    "infer_orientation",
    "label_pixels",
    "load_embeddings",
    "load_prices",
    "nearest_category",
    "rank_by_improvement",
    "read_palette",
    "repair_grid",
    "run_lsi",
    "scale_to_rgb",
    "sweep_rectangle",
    "synth_generate",
    "tsne_reduce",
    "write_palette",
]
