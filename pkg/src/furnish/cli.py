"""Command-line pipeline: embed, repair, search, eval, render.

Exit codes: 0 on success, 1 for validation problems (bad flags, files,
or configuration), 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import grids, palette as palette_mod, qd
from .config import ConfigError, RunConfig, load_config
from .measures import bin_measures, compute_measures
from .palette import PaletteError
from .repair import Arrangement, repair_grid
from .tsne import BandwidthSearchError


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage problems are validation
        self.exit(1, f"{self.prog}: error: {message}\n")


def _arrangement_doc(arrangement: Arrangement, palette, width: int, height: int) -> dict:
    return {
        "width": width,
        "height": height,
        "repair_cost": arrangement.repair_cost,
        "overlap_pairs": [list(pair) for pair in arrangement.overlap_pairs],
        "placements": [
            {
                "category_id": p.category_id,
                "name": palette.categories[p.category_id].name,
                "x": p.rect.x,
                "y": p.rect.y,
                "w": p.rect.w,
                "h": p.rect.h,
                "orientation": p.orientation,
                "fit_cost": p.fit_cost,
            }
            for p in arrangement.placements
        ],
    }


def _write_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _parse_latent(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.replace(",", " ").split()], dtype=np.float64)
    except ValueError:
        raise ValueError(f"latent must be a list of numbers, got {text!r}") from None


def cmd_embed(args) -> int:
    table = palette_mod.load_embeddings(args.embeddings)
    prices, aspects = palette_mod.load_prices(args.prices)
    built = palette_mod.build_palette(
        table,
        prices,
        aspects,
        perplexity=args.perplexity,
        iterations=args.iterations,
        seed=args.seed,
        min_separation=args.min_separation,
    )
    palette_mod.write_palette(built, args.out)
    print(f"wrote palette with {len(built)} categories to {args.out}")
    return 0


def cmd_repair(args) -> int:
    palette = palette_mod.read_palette(args.palette)
    grid = grids.read_grid_png(args.grid)
    arrangement = repair_grid(grid, palette, args.min_area)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = _arrangement_doc(arrangement, palette, grid.shape[1], grid.shape[0])
    _write_json(doc, out_dir / "arrangement.json")
    grids.write_grid_png(
        grids.annotate_placements(grid, arrangement.placements, palette),
        out_dir / "annotated.png",
    )
    print(
        f"{len(arrangement.placements)} placements, repair_cost={arrangement.repair_cost:.6f}, "
        f"{len(arrangement.overlap_pairs)} overlaps -> {out_dir}"
    )
    return 0


def _load_run(args) -> tuple[RunConfig, object, object]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out_dir is not None:
        cfg.output_dir = args.out_dir
    palette = cfg.load_palette()
    generator = cfg.make_generator(palette)
    return cfg, palette, generator


def cmd_search(args) -> int:
    cfg, palette, generator = _load_run(args)
    try:
        archive, metrics = qd.run_lsi(
            palette,
            generator,
            cfg.archive,
            seed=cfg.seed,
            emitters=cfg.emitters,
            lam=cfg.lam,
            sigma0=cfg.sigma0,
            total_evaluations=cfg.total_evaluations,
            min_area=cfg.min_area,
        )
    finally:
        generator.close()
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    qd.save_archive_csv(archive, out_dir / "archive.csv", generator.latent_dim)
    qd.save_metrics_csv(metrics, out_dir / "metrics.csv")
    grids.write_grid_png(grids.render_heatmap(archive, cfg.heatmap_cell_px), out_dir / "heatmap.png")
    print(
        f"archive: {archive.coverage} cells, qd_score={archive.qd_score:.3f}, "
        f"best_objective={archive.best_objective:.6f} -> {out_dir}"
    )
    return 0


def cmd_eval(args) -> int:
    cfg, palette, generator = _load_run(args)
    try:
        z = _parse_latent(args.latent)
        grid = generator.generate(z)
        arrangement = repair_grid(grid, palette, cfg.min_area)
        measures = compute_measures(arrangement, palette)
        record = {
            "objective": -arrangement.repair_cost,
            "total_price": measures.total_price,
            "furniture_count": measures.furniture_count,
            "cell": list(bin_measures(measures, cfg.archive)),
            "arrangement": _arrangement_doc(arrangement, palette, grid.shape[1], grid.shape[0]),
        }
    finally:
        generator.close()
    print(json.dumps(record, indent=2))
    return 0


def cmd_render(args) -> int:
    cfg, palette, generator = _load_run(args)
    try:
        archive = qd.load_archive_csv(args.archive, cfg.archive)
        try:
            price_idx, count_idx = (int(v) for v in args.cell.split(","))
        except ValueError:
            raise ValueError(f"--cell must be 'price_index,count_index', got {args.cell!r}") from None
        elite = archive.cells.get((price_idx, count_idx))
        if elite is None:
            raise ValueError(f"archive cell ({price_idx}, {count_idx}) is empty")
        grid = generator.generate(elite.latent)
        arrangement = repair_grid(grid, palette, cfg.min_area)
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = f"cell_{price_idx}_{count_idx}"
        grids.write_grid_png(grid, out_dir / f"{stem}_raw.png")
        repaired = grids.render_arrangement(
            arrangement.placements, palette, grid.shape[1], grid.shape[0]
        )
        grids.write_grid_png(repaired, out_dir / f"{stem}_repaired.png")
    finally:
        generator.close()
    print(f"wrote {stem}_raw.png and {stem}_repaired.png to {out_dir}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="furnish", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("--config", required=True, help="run configuration JSON")
    run_flags.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_flags.add_argument("--out-dir", default=None, help="override the config output_dir")

    p = sub.add_parser("embed", help="build a category color palette from embeddings")
    p.add_argument("--embeddings", required=True, help="name,e0,...,eD CSV")
    p.add_argument("--prices", required=True, help="name,unit_price,default_aspect CSV")
    p.add_argument("--out", required=True, help="palette CSV to write")
    p.add_argument("--perplexity", type=float, default=5.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-separation", type=float, default=palette_mod.DEFAULT_MIN_SEPARATION)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("repair", help="fit rectangles to an occupancy grid PNG")
    p.add_argument("--grid", required=True, help="RGB8 PNG occupancy grid")
    p.add_argument("--palette", required=True, help="palette CSV")
    p.add_argument("--min-area", type=int, default=4)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("search", parents=[run_flags], help="run the latent-space search")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", parents=[run_flags], help="evaluate one latent vector")
    p.add_argument(
        "--latent",
        required=True,
        help="comma- or space-separated numbers; use --latent=... if the first is negative",
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", parents=[run_flags], help="re-render one archive elite")
    p.add_argument("--archive", required=True, help="archive CSV from a search run")
    p.add_argument("--cell", required=True, help="price_index,count_index")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PaletteError, BandwidthSearchError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures: protocol errors, I/O, ...
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
