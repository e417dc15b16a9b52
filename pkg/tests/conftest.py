import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles helper module

from furnish.palette import (
    CategoryEntry,
    CategoryPalette,
    build_palette,
    load_embeddings,
    load_prices,
)

DATA_DIR = Path(__file__).parent.parent / "src" / "furnish" / "data"
FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def embedding_table():
    return load_embeddings(DATA_DIR / "embeddings.csv")


@pytest.fixture(scope="session")
def bundled_palette(embedding_table):
    prices, aspects = load_prices(DATA_DIR / "categories.csv")
    return build_palette(embedding_table, prices, aspects, seed=0)


@pytest.fixture(scope="session")
def toy_palette():
    """Four well-separated colors on a black background."""
    return CategoryPalette(
        [
            CategoryEntry(0, "crate", (255, 0, 0), 100.0, 1.0),
            CategoryEntry(1, "shelf", (0, 255, 0), 250.0, 2.0),
            CategoryEntry(2, "stand", (0, 0, 255), 400.0, 0.5),
            CategoryEntry(3, "bench", (255, 255, 0), 50.0, 1.5),
        ],
        background_color=(0, 0, 0),
    )
