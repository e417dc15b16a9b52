"""Run configuration: one JSON document describes a whole search run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .generator import BuiltinGenerator, SynthParams
from .measures import ArchiveConfig
from .palette import CategoryPalette, read_palette
from .wire import ExternalGenerator


class ConfigError(ValueError):
    """Carries every validation problem found, not just the first."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in problems))


@dataclass
class RunConfig:
    seed: int = 0
    palette_path: str = ""
    generator_kind: str = "builtin"
    synth: SynthParams = field(default_factory=SynthParams)
    external_command: list[str] = field(default_factory=list)
    external_timeout: float = 30.0
    archive: ArchiveConfig = field(default_factory=ArchiveConfig)
    emitters: int = 5
    lam: int | None = None
    sigma0: float = 0.5
    total_evaluations: int = 10000
    min_area: int = 4
    output_dir: str = "out"
    heatmap_cell_px: int = 16
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path_str: str) -> Path:
        """Paths in the config file are relative to the file itself."""
        path = Path(path_str)
        return path if path.is_absolute() else self.base_dir / path

    def load_palette(self) -> CategoryPalette:
        return read_palette(self.resolve(self.palette_path))

    def make_generator(self, palette: CategoryPalette):
        if self.generator_kind == "builtin":
            return BuiltinGenerator(palette, self.synth)
        return ExternalGenerator(self.external_command, self.external_timeout)


def _expect(problems, raw, key, kind, default):
    value = raw.get(key, default)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        problems.append(f"{key}: expected {kind.__name__}, got {value!r}")
        return default
    return value


def load_config(path) -> RunConfig:
    """Parse and validate a run config, reporting all problems at once."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a JSON object"])

    problems: list[str] = []
    known = {
        "seed", "palette_path", "generator", "archive", "emitters", "lambda",
        "sigma0", "total_evaluations", "min_area", "output_dir", "heatmap_cell_px",
    }
    for key in raw:
        if key not in known:
            problems.append(f"unknown key: {key}")

    cfg = RunConfig(base_dir=path.parent)
    cfg.seed = _expect(problems, raw, "seed", int, 0)
    cfg.palette_path = _expect(problems, raw, "palette_path", str, "")
    if not cfg.palette_path:
        problems.append("palette_path: required")
    elif not cfg.resolve(cfg.palette_path).is_file():
        problems.append(f"palette_path: no such file: {cfg.resolve(cfg.palette_path)}")

    gen = raw.get("generator", {})
    if not isinstance(gen, dict):
        problems.append(f"generator: expected object, got {gen!r}")
        gen = {}
    cfg.generator_kind = gen.get("kind", "builtin")
    if cfg.generator_kind == "builtin":
        synth_kwargs = {}
        for key, default in (
            ("latent_dim", 16), ("width", 64), ("height", 64),
            ("k_max", 10), ("noise_max", 25), ("flip_max", 32),
        ):
            synth_kwargs[key] = _expect(problems, gen, key, int, default)
        extra = set(gen) - {"kind", *synth_kwargs}
        problems.extend(f"generator.{k}: unknown key" for k in sorted(extra))
        try:
            cfg.synth = SynthParams(**synth_kwargs)
        except ValueError as exc:
            problems.append(f"generator: {exc}")
    elif cfg.generator_kind == "external":
        command = gen.get("command")
        if not isinstance(command, list) or not command or not all(isinstance(c, str) for c in command):
            problems.append("generator.command: expected a nonempty list of strings")
        else:
            cfg.external_command = command
        cfg.external_timeout = _expect(problems, gen, "timeout", float, 30.0)
        if cfg.external_timeout <= 0:
            problems.append("generator.timeout: must be positive")
    else:
        problems.append(f"generator.kind: expected 'builtin' or 'external', got {cfg.generator_kind!r}")

    arch = raw.get("archive", {})
    if not isinstance(arch, dict):
        problems.append(f"archive: expected object, got {arch!r}")
        arch = {}
    price_max = _expect(problems, arch, "price_max", float, 20000.0)
    price_bins = _expect(problems, arch, "price_bins", int, 20)
    count_max = _expect(problems, arch, "count_max", int, 20)
    try:
        cfg.archive = ArchiveConfig(price_max, price_bins, count_max)
    except ValueError as exc:
        problems.append(f"archive: {exc}")

    cfg.emitters = _expect(problems, raw, "emitters", int, 5)
    if cfg.emitters < 1:
        problems.append("emitters: must be >= 1")
    lam = raw.get("lambda")
    if lam is not None:
        if not isinstance(lam, int) or isinstance(lam, bool) or lam < 2:
            problems.append(f"lambda: expected integer >= 2, got {lam!r}")
        else:
            cfg.lam = lam
    cfg.sigma0 = _expect(problems, raw, "sigma0", float, 0.5)
    if cfg.sigma0 <= 0:
        problems.append("sigma0: must be positive")
    cfg.total_evaluations = _expect(problems, raw, "total_evaluations", int, 10000)
    if cfg.total_evaluations < 1:
        problems.append("total_evaluations: must be >= 1")
    cfg.min_area = _expect(problems, raw, "min_area", int, 4)
    if cfg.min_area < 1:
        problems.append("min_area: must be >= 1")
    cfg.output_dir = _expect(problems, raw, "output_dir", str, "out")
    cfg.heatmap_cell_px = _expect(problems, raw, "heatmap_cell_px", int, 16)
    if cfg.heatmap_cell_px < 1:
        problems.append("heatmap_cell_px: must be >= 1")

    if problems:
        raise ConfigError(problems)
    return cfg
