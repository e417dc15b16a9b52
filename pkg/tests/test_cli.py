import csv
import json

import numpy as np
import pytest
from PIL import Image

from furnish import cli
from furnish.config import ConfigError, load_config
from furnish.generator import BuiltinGenerator, SynthParams
from furnish.grids import read_grid_png, write_grid_png
from furnish.palette import write_palette
from furnish.repair import repair_grid

from conftest import DATA_DIR, FIXTURES


@pytest.fixture()
def palette_csv(bundled_palette, tmp_path):
    path = tmp_path / "palette.csv"
    write_palette(bundled_palette, path)
    return path


@pytest.fixture()
def small_config(palette_csv, tmp_path):
    """A quick 32x32 run: ~100 evaluations, 8-dim latents."""
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps(
            {
                "seed": 7,
                "palette_path": palette_csv.name,
                "generator": {
                    "kind": "builtin",
                    "latent_dim": 8,
                    "width": 32,
                    "height": 32,
                    "k_max": 5,
                    "noise_max": 20,
                    "flip_max": 12,
                },
                "archive": {"price_max": 8000.0, "price_bins": 10, "count_max": 8},
                "emitters": 2,
                "total_evaluations": 100,
                "output_dir": str(tmp_path / "out"),
            }
        ),
        encoding="utf-8",
    )
    return path


class TestEmbed:
    def test_builds_palette_csv(self, tmp_path, capsys):
        out = tmp_path / "palette.csv"
        code = cli.main(
            [
                "embed",
                "--embeddings", str(DATA_DIR / "embeddings.csv"),
                "--prices", str(DATA_DIR / "categories.csv"),
                "--out", str(out),
                "--iterations", "200",
            ]
        )
        assert code == 0
        rows = out.read_text().splitlines()
        assert len(rows) == 1 + 25 + 1  # header, categories, background

    def test_deterministic(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert cli.main(
                [
                    "embed",
                    "--embeddings", str(DATA_DIR / "embeddings.csv"),
                    "--prices", str(DATA_DIR / "categories.csv"),
                    "--out", str(out),
                    "--iterations", "150",
                    "--seed", "3",
                ]
            ) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_missing_price_file(self, tmp_path, capsys):
        code = cli.main(
            [
                "embed",
                "--embeddings", str(DATA_DIR / "embeddings.csv"),
                "--prices", str(tmp_path / "nope.csv"),
                "--out", str(tmp_path / "p.csv"),
            ]
        )
        assert code == 1
        assert "missing price" in capsys.readouterr().err


class TestRepair:
    def test_all_background_grid(self, bundled_palette, palette_csv, tmp_path, capsys):
        grid = np.zeros((16, 16, 3), dtype=np.uint8)
        grid[:, :] = bundled_palette.background_color
        png = tmp_path / "empty.png"
        write_grid_png(grid, png)
        out_dir = tmp_path / "rep"
        code = cli.main(
            ["repair", "--grid", str(png), "--palette", str(palette_csv), "--out-dir", str(out_dir)]
        )
        assert code == 0
        doc = json.loads((out_dir / "arrangement.json").read_text())
        assert doc["placements"] == []
        assert doc["repair_cost"] == 0.0
        assert (out_dir / "annotated.png").exists()

    def test_golden_arrangement(self, palette_csv, tmp_path):
        out_dir = tmp_path / "rep"
        code = cli.main(
            [
                "repair",
                "--grid", str(FIXTURES / "golden_grid.png"),
                "--palette", str(palette_csv),
                "--out-dir", str(out_dir),
            ]
        )
        assert code == 0
        produced = json.loads((out_dir / "arrangement.json").read_text())
        golden = json.loads((FIXTURES / "golden_arrangement.json").read_text())
        assert produced == golden

    def test_alpha_png_rejected(self, palette_csv, tmp_path, capsys):
        png = tmp_path / "rgba.png"
        Image.new("RGBA", (8, 8)).save(png)
        code = cli.main(
            ["repair", "--grid", str(png), "--palette", str(palette_csv), "--out-dir", str(tmp_path)]
        )
        assert code == 1
        assert "RGB8 required" in capsys.readouterr().err


class TestSearch:
    def test_outputs_exist_and_parse(self, small_config, tmp_path, capsys):
        assert cli.main(["search", "--config", str(small_config)]) == 0
        out = tmp_path / "out"
        with (out / "archive.csv").open() as fh:
            archive_rows = list(csv.DictReader(fh))
        assert archive_rows, "archive should not be empty"
        with (out / "metrics.csv").open() as fh:
            metric_rows = list(csv.DictReader(fh))
        assert int(metric_rows[-1]["evaluations"]) >= 100
        heatmap = read_grid_png(out / "heatmap.png")
        assert heatmap.shape == (9 * 16, 10 * 16, 3)  # (count_max+1, price_bins) cells

    def test_no_expensive_empty_rooms(self, small_config, tmp_path):
        assert cli.main(["search", "--config", str(small_config)]) == 0
        with (tmp_path / "out" / "archive.csv").open() as fh:
            for row in csv.DictReader(fh):
                if int(row["count_index"]) == 0:
                    assert int(row["price_index"]) == 0
                    assert float(row["total_price"]) == 0.0

    def test_rerun_byte_identical(self, small_config, tmp_path):
        dumps = []
        for run_dir in ("run1", "run2"):
            assert cli.main(
                ["search", "--config", str(small_config), "--out-dir", str(tmp_path / run_dir)]
            ) == 0
            dumps.append((tmp_path / run_dir / "archive.csv").read_bytes())
        assert dumps[0] == dumps[1]


class TestEval:
    def test_archive_elite_reproduces_dump(self, small_config, tmp_path, capsys):
        assert cli.main(["search", "--config", str(small_config)]) == 0
        with (tmp_path / "out" / "archive.csv").open() as fh:
            row = next(csv.DictReader(fh))
        latent = ",".join(row[f"z{i}"] for i in range(8))
        capsys.readouterr()
        assert cli.main(["eval", "--config", str(small_config), f"--latent={latent}"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["objective"] == float(row["objective"])
        assert record["total_price"] == float(row["total_price"])
        assert record["furniture_count"] == int(row["furniture_count"])

    def test_zero_latent_matches_library(self, small_config, bundled_palette, capsys):
        cfg = load_config(small_config)
        generator = BuiltinGenerator(bundled_palette, cfg.synth)
        arrangement = repair_grid(generator.generate(np.zeros(8)), bundled_palette, 4)
        assert cli.main(
            ["eval", "--config", str(small_config), "--latent", ",".join(["0"] * 8)]
        ) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["objective"] == -arrangement.repair_cost
        assert len(record["arrangement"]["placements"]) == len(arrangement.placements)

    def test_wrong_dimension(self, small_config, capsys):
        code = cli.main(["eval", "--config", str(small_config), "--latent", "1,2,3"])
        assert code == 1
        assert "shape" in capsys.readouterr().err


class TestRender:
    def test_occupied_cell_writes_two_pngs(self, small_config, tmp_path, capsys):
        assert cli.main(["search", "--config", str(small_config)]) == 0
        archive_csv = tmp_path / "out" / "archive.csv"
        with archive_csv.open() as fh:
            row = next(csv.DictReader(fh))
        cell = f"{row['price_index']},{row['count_index']}"
        code = cli.main(
            ["render", "--config", str(small_config), "--archive", str(archive_csv), "--cell", cell]
        )
        assert code == 0
        stem = f"cell_{row['price_index']}_{row['count_index']}"
        assert (tmp_path / "out" / f"{stem}_raw.png").exists()
        assert (tmp_path / "out" / f"{stem}_repaired.png").exists()

    def test_repaired_view_re_repairs_to_zero(
        self, small_config, bundled_palette, tmp_path, capsys
    ):
        assert cli.main(["search", "--config", str(small_config)]) == 0
        archive_csv = tmp_path / "out" / "archive.csv"
        cfg = load_config(small_config)
        generator = BuiltinGenerator(bundled_palette, cfg.synth)
        with archive_csv.open() as fh:
            rows = list(csv.DictReader(fh))
        for row in rows:
            z = np.array([float(row[f"z{i}"]) for i in range(8)])
            arrangement = repair_grid(generator.generate(z), bundled_palette, 4)
            if arrangement.overlap_pairs:
                continue
            cell = f"{row['price_index']},{row['count_index']}"
            assert cli.main(
                [
                    "render",
                    "--config", str(small_config),
                    "--archive", str(archive_csv),
                    "--cell", cell,
                ]
            ) == 0
            stem = f"cell_{row['price_index']}_{row['count_index']}"
            repaired = read_grid_png(tmp_path / "out" / f"{stem}_repaired.png")
            again = repair_grid(repaired, bundled_palette, 4)
            assert again.repair_cost == 0.0
            break
        else:
            pytest.skip("every elite in this tiny run had overlaps")

    def test_empty_cell_named_in_error(self, small_config, tmp_path, capsys):
        assert cli.main(["search", "--config", str(small_config)]) == 0
        archive_csv = tmp_path / "out" / "archive.csv"
        with archive_csv.open() as fh:
            occupied = {(int(r["price_index"]), int(r["count_index"])) for r in csv.DictReader(fh)}
        empty = next(
            (p, c) for p in range(10) for c in range(9) if (p, c) not in occupied
        )
        code = cli.main(
            [
                "render",
                "--config", str(small_config),
                "--archive", str(archive_csv),
                "--cell", f"{empty[0]},{empty[1]}",
            ]
        )
        assert code == 1
        assert f"({empty[0]}, {empty[1]}) is empty" in capsys.readouterr().err


class TestConfigValidation:
    def test_all_problems_listed(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(
            json.dumps(
                {
                    "palette_path": "missing.csv",
                    "generator": {"kind": "warp"},
                    "emitters": 0,
                    "sigma0": -1,
                    "bogus_key": 1,
                }
            ),
            encoding="utf-8",
        )
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        message = str(excinfo.value)
        for fragment in ("palette_path", "generator.kind", "emitters", "sigma0", "bogus_key"):
            assert fragment in message

    def test_cli_reports_validation_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{", encoding="utf-8")
        assert cli.main(["search", "--config", str(path)]) == 1
        assert "not valid JSON" in capsys.readouterr().err

    def test_usage_error_exits_one(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["search"])  # missing required --config
        assert excinfo.value.code == 1
