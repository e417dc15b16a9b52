"""CMA-ME latent-space illumination.

A 2-D MAP-Elites archive binned by (total price, furniture count) is
filled by improvement emitters: each runs CMA-ES, but candidates are
ranked by what they did to the archive (new cell > improved cell >
rejected) instead of raw objective, and an emitter restarts from a
random elite when a whole batch changes nothing.  The objective is the
negated repair cost, so 0 is the best possible value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .measures import ArchiveConfig, MeasureValue, bin_measures, compute_measures
from .palette import CategoryPalette
from .repair import repair_grid

#: Offset making per-cell QD-score contributions positive for sane objectives.
QD_SCORE_FLOOR = -1.0e6


class InsertStatus(Enum):
    NEW_CELL = "new_cell"
    IMPROVED = "improved"
    REJECTED = "rejected"


@dataclass(frozen=True)
class Elite:
    latent: np.ndarray
    objective: float
    measures: MeasureValue
    cell: tuple[int, int]


@dataclass
class ArchiveStats:
    evaluations: int = 0
    insertions: int = 0
    improvements: int = 0


class Archive:
    """Sparse MAP-Elites grid; each cell keeps the best elite offered to it."""

    def __init__(self, config: ArchiveConfig, qd_floor: float = QD_SCORE_FLOOR):
        self.config = config
        self.qd_floor = qd_floor
        self.cells: dict[tuple[int, int], Elite] = {}
        self.stats = ArchiveStats()

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def coverage(self) -> int:
        return len(self.cells)

    @property
    def qd_score(self) -> float:
        return sum(e.objective - self.qd_floor for e in self.cells.values())

    @property
    def best_objective(self) -> float:
        return max((e.objective for e in self.cells.values()), default=float("nan"))

    def elites(self) -> list[Elite]:
        """Elites in cell order (price index, then count index)."""
        return [self.cells[key] for key in sorted(self.cells)]

    def insert(self, candidate: Elite) -> tuple[InsertStatus, float]:
        """Offer a candidate; strict improvement replaces, ties reject.

        Returns the status and, for improvements, the objective delta.
        """
        self.stats.evaluations += 1
        incumbent = self.cells.get(candidate.cell)
        if incumbent is None:
            self.cells[candidate.cell] = candidate
            self.stats.insertions += 1
            return InsertStatus.NEW_CELL, 0.0
        if candidate.objective > incumbent.objective:
            self.cells[candidate.cell] = candidate
            self.stats.improvements += 1
            return InsertStatus.IMPROVED, candidate.objective - incumbent.objective
        return InsertStatus.REJECTED, 0.0


class CmaEsRestart(Exception):
    """Signals that the strategy state degenerated and must be reinitialized."""


def default_population(dim: int) -> int:
    return 4 + int(3 * np.log(dim))


@dataclass
class CmaEsParams:
    """Standard strategy constants as functions of dimension and population."""

    dim: int
    lam: int
    mu: int = field(init=False)
    weights: np.ndarray = field(init=False)
    mueff: float = field(init=False)
    c_sigma: float = field(init=False)
    d_sigma: float = field(init=False)
    c_c: float = field(init=False)
    c_1: float = field(init=False)
    c_mu: float = field(init=False)
    chi_n: float = field(init=False)

    def __post_init__(self):
        d, lam = self.dim, self.lam
        self.mu = lam // 2
        w = np.log(lam / 2 + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = float(1.0 / np.sum(self.weights**2))
        self.c_sigma = (self.mueff + 2) / (d + self.mueff + 5)
        self.d_sigma = 1 + 2 * max(0.0, np.sqrt((self.mueff - 1) / (d + 1)) - 1) + self.c_sigma
        self.c_c = (4 + self.mueff / d) / (d + 4 + 2 * self.mueff / d)
        self.c_1 = 2 / ((d + 1.3) ** 2 + self.mueff)
        self.c_mu = min(1 - self.c_1, 2 * (self.mueff - 2 + 1 / self.mueff) / ((d + 2) ** 2 + self.mueff))
        self.chi_n = np.sqrt(d) * (1 - 1 / (4 * d) + 1 / (21 * d**2))


_SIGMA_MIN, _SIGMA_MAX = 1e-12, 1e6
_EIGVAL_MIN = 1e-12


class CmaEs:
    """Plain CMA-ES state: rank-1 + rank-mu covariance and CSA step size."""

    def __init__(self, mean: np.ndarray, sigma: float, lam: int | None = None):
        self.mean = np.array(mean, dtype=np.float64)
        dim = self.mean.shape[0]
        self.params = CmaEsParams(dim, lam if lam is not None else default_population(dim))
        self.sigma = float(sigma)
        self.cov = np.eye(dim)
        self.path_sigma = np.zeros(dim)
        self.path_c = np.zeros(dim)
        self.generation = 0
        self._decompose()

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def lam(self) -> int:
        return self.params.lam

    def _decompose(self) -> None:
        try:
            eigvals, eigvecs = np.linalg.eigh(self.cov)
        except np.linalg.LinAlgError as exc:
            raise CmaEsRestart(f"covariance factorization failed: {exc}") from None
        if not np.all(np.isfinite(eigvals)) or eigvals.min() <= _EIGVAL_MIN:
            raise CmaEsRestart(f"covariance eigenvalues degenerate (min {eigvals.min():.3e})")
        self._eigvals = eigvals
        self._eigvecs = eigvecs

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw lam candidates: mean + sigma * B sqrt(D) n, n ~ N(0, I)."""
        normals = rng.standard_normal((self.params.lam, self.dim))
        transform = self._eigvecs * np.sqrt(self._eigvals)
        return self.mean + self.sigma * normals @ transform.T

    def update(self, ranked: np.ndarray) -> None:
        """Consume the full batch, best first, and adapt mean, paths, C, sigma."""
        p = self.params
        if ranked.shape != (p.lam, self.dim):
            raise ValueError(f"expected a ranked ({p.lam}, {self.dim}) batch")
        old_mean = self.mean
        parents = ranked[: p.mu]
        self.mean = p.weights @ parents

        y = (self.mean - old_mean) / self.sigma
        inv_sqrt = self._eigvecs @ ((1.0 / np.sqrt(self._eigvals))[:, None] * self._eigvecs.T)
        self.path_sigma = (1 - p.c_sigma) * self.path_sigma + np.sqrt(
            p.c_sigma * (2 - p.c_sigma) * p.mueff
        ) * (inv_sqrt @ y)
        self.generation += 1
        ps_norm = float(np.linalg.norm(self.path_sigma))
        expected = np.sqrt(1 - (1 - p.c_sigma) ** (2 * self.generation))
        h_sigma = ps_norm / expected / p.chi_n < 1.4 + 2 / (self.dim + 1)
        self.path_c = (1 - p.c_c) * self.path_c + h_sigma * np.sqrt(
            p.c_c * (2 - p.c_c) * p.mueff
        ) * y

        deviations = (parents - old_mean) / self.sigma
        rank_mu = (deviations.T * p.weights) @ deviations
        self.cov = (
            (1 - p.c_1 - p.c_mu) * self.cov
            + p.c_1
            * (np.outer(self.path_c, self.path_c) + (not h_sigma) * p.c_c * (2 - p.c_c) * self.cov)
            + p.c_mu * rank_mu
        )
        self.cov = (self.cov + self.cov.T) / 2.0
        self.sigma *= np.exp((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1))

        if not np.isfinite(self.sigma) or not (_SIGMA_MIN < self.sigma < _SIGMA_MAX):
            raise CmaEsRestart(f"step size out of range: {self.sigma:.3e}")
        if not np.all(np.isfinite(self.cov)):
            raise CmaEsRestart("covariance contains non-finite entries")
        self._decompose()


def rank_by_improvement(
    statuses: list[InsertStatus], objectives: list[float], deltas: list[float]
) -> list[int]:
    """Batch indices ordered for the CMA-ES update.

    All NEW_CELL come first (objective descending), then IMPROVED
    (delta descending), then REJECTED (objective descending); remaining
    ties keep batch order.
    """
    group = {InsertStatus.NEW_CELL: 0, InsertStatus.IMPROVED: 1, InsertStatus.REJECTED: 2}

    def key(i: int):
        primary = deltas[i] if statuses[i] is InsertStatus.IMPROVED else objectives[i]
        return group[statuses[i]], -primary, i

    return sorted(range(len(statuses)), key=key)


@dataclass(frozen=True)
class EvaluationRecord:
    latent: np.ndarray
    objective: float
    measures: MeasureValue
    cell: tuple[int, int]
    status: InsertStatus
    delta: float


class Emitter:
    """One CMA-ES instance feeding the shared archive."""

    def __init__(self, dim: int, sigma0: float, lam: int | None, rng: np.random.Generator):
        self.dim = dim
        self.sigma0 = sigma0
        self.lam = lam if lam is not None else default_population(dim)
        self.rng = rng
        self.restarts = 0
        self.cma = CmaEs(np.zeros(dim), sigma0, self.lam)

    def _restart(self, archive: Archive) -> None:
        """Reset around a uniformly random elite (origin if archive is empty)."""
        self.restarts += 1
        if archive.cells:
            keys = sorted(archive.cells)
            elite = archive.cells[keys[int(self.rng.integers(len(keys)))]]
            mean = elite.latent
        else:
            mean = np.zeros(self.dim)
        self.cma = CmaEs(mean, self.sigma0, self.lam)

    def step(self, archive: Archive, evaluate) -> list[EvaluationRecord]:
        """Sample, evaluate, insert in index order, rank, update, maybe restart."""
        try:
            batch = self.cma.sample(self.rng)
        except CmaEsRestart:
            self._restart(archive)
            batch = self.cma.sample(self.rng)

        records = []
        for z in batch:
            objective, measures = evaluate(z)
            cell = bin_measures(measures, archive.config)
            status, delta = archive.insert(Elite(z.copy(), objective, measures, cell))
            records.append(EvaluationRecord(z.copy(), objective, measures, cell, status, delta))

        order = rank_by_improvement(
            [r.status for r in records],
            [r.objective for r in records],
            [r.delta for r in records],
        )
        try:
            self.cma.update(batch[order])
        except CmaEsRestart:
            self._restart(archive)
            return records
        if not any(r.status in (InsertStatus.NEW_CELL, InsertStatus.IMPROVED) for r in records):
            self._restart(archive)
        return records


@dataclass(frozen=True)
class MetricsRow:
    evaluations: int
    coverage: int
    qd_score: float
    best_objective: float


def make_evaluator(generator, palette: CategoryPalette, min_area: int = 4):
    """generate -> repair -> (objective = -repair_cost, measures)."""

    def evaluate(z: np.ndarray) -> tuple[float, MeasureValue]:
        arrangement = repair_grid(generator.generate(z), palette, min_area)
        return -arrangement.repair_cost, compute_measures(arrangement, palette)

    return evaluate


def run_lsi(
    palette: CategoryPalette,
    generator,
    archive_config: ArchiveConfig,
    seed: int,
    emitters: int = 5,
    lam: int | None = None,
    sigma0: float = 0.5,
    total_evaluations: int = 10000,
    min_area: int = 4,
    archive: Archive | None = None,
) -> tuple[Archive, list[MetricsRow]]:
    """Round-robin improvement emitters until the evaluation budget is spent.

    Deterministic given ``seed``; the final batch may overshoot the
    budget by at most one batch size.  Returns the archive and one
    metrics row per completed batch.
    """
    if archive is None:
        archive = Archive(archive_config)
    evaluate = make_evaluator(generator, palette, min_area)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(emitters)]
    pool = [Emitter(generator.latent_dim, sigma0, lam, rng) for rng in streams]

    metrics: list[MetricsRow] = []
    done = 0
    while done < total_evaluations:
        for emitter in pool:
            if done >= total_evaluations:
                break
            records = emitter.step(archive, evaluate)
            done += len(records)
            metrics.append(
                MetricsRow(done, archive.coverage, archive.qd_score, archive.best_objective)
            )
    return archive, metrics


def save_archive_csv(archive: Archive, path, latent_dim: int) -> None:
    """Dump elites sorted by cell; floats use repr so parsing round-trips."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["price_index", "count_index", "objective", "total_price", "furniture_count"]
            + [f"z{i}" for i in range(latent_dim)]
        )
        for elite in archive.elites():
            writer.writerow(
                [
                    elite.cell[0],
                    elite.cell[1],
                    repr(elite.objective),
                    repr(elite.measures.total_price),
                    elite.measures.furniture_count,
                ]
                + [repr(float(v)) for v in elite.latent]
            )


def load_archive_csv(path, config: ArchiveConfig) -> Archive:
    path = Path(path)
    archive = Archive(config)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:5] != [
            "price_index",
            "count_index",
            "objective",
            "total_price",
            "furniture_count",
        ]:
            raise ValueError(f"{path}: not an archive dump")
        for row in reader:
            if not row:
                continue
            cell = (int(row[0]), int(row[1]))
            measures = MeasureValue(float(row[3]), int(row[4]))
            latent = np.array([float(v) for v in row[5:]], dtype=np.float64)
            archive.cells[cell] = Elite(latent, float(row[2]), measures, cell)
    return archive


def save_metrics_csv(metrics: list[MetricsRow], path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["evaluations", "coverage", "qd_score", "best_objective"])
        for row in metrics:
            writer.writerow(
                [row.evaluations, row.coverage, repr(row.qd_score), repr(row.best_objective)]
            )
