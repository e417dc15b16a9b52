"""Regenerate the bundled category embedding fixture.

The pipeline ingests 512-d name embeddings from CSV; producing them
with a sentence encoder is outside this library.  This script builds a
deterministic stand-in with the same shape and the property that
matters: conceptually related categories (sleeping, seating, kitchen,
bath, ...) sit closer together than unrelated ones.  Each vector is a
noisy copy of its group center, normalized to unit length like typical
sentence-encoder output.

Run from the repository root:

    python demos/make_embeddings.py
"""

import csv
from pathlib import Path

import numpy as np

GROUPS = {
    "sleeping": ["bed", "nightstand", "wardrobe", "dresser"],
    "seating": ["sofa", "armchair", "chair"],
    "surfaces": ["table", "desk", "coffee_table"],
    "storage": ["bookshelf", "cabinet", "tv_stand"],
    "decor": ["lamp", "rug", "plant", "mirror"],
    "kitchen": ["stove", "refrigerator", "sink", "dishwasher"],
    "bath": ["toilet", "bathtub", "shower", "washing_machine"],
}

DIM = 512
SEED = 20240801


def main() -> None:
    rng = np.random.default_rng(SEED)
    rows = []
    for group in GROUPS.values():
        center = rng.normal(0.0, 1.0, DIM)
        for name in group:
            vector = center + rng.normal(0.0, 0.45, DIM)
            vector /= np.linalg.norm(vector)
            rows.append((name, vector))

    out = Path(__file__).resolve().parent.parent / "src" / "furnish" / "data" / "embeddings.csv"
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["name"] + [f"e{i}" for i in range(DIM)])
        for name, vector in rows:
            writer.writerow([name] + [f"{v:.6f}" for v in vector])
    print(f"wrote {len(rows)} x {DIM} embeddings to {out}")


if __name__ == "__main__":
    main()
