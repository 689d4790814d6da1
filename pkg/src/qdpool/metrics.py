"""Run metrics and statistics: QD-score, per-generation records, CSV
serialization, replication aggregation, and the Wilcoxon rank-sum /
Holm machinery used to compare variants.

All CSV output is deterministic: floats are written with ``repr`` (the
shortest round-trippable form), rows follow canonical orders, and no
wall-clock values ever enter a file.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from qdpool.archive import Archive

EMITTER_COUNT_COLUMNS = ("opt_count", "dir_count", "imp_count", "rand_count")
METRICS_HEADER = (
    "generation",
    "evaluations",
    "archive_size",
    "best_fitness",
    "qd_score",
) + EMITTER_COUNT_COLUMNS


class InsufficientDataError(ValueError):
    """Raised when a statistical comparison has too few replications."""


@dataclass(frozen=True)
class GenerationRecord:
    """One metrics snapshot.

    ``kind_counts`` holds the number of active emitters per kind in
    canonical order (optimising, random-direction, improvement, random);
    it is all zeros for the post-initialization snapshot at generation 0.
    """

    generation: int
    evaluations: int
    archive_size: int
    best_fitness_norm: float
    qd_score: float
    kind_counts: tuple[int, int, int, int]

    def __post_init__(self):
        if self.qd_score > self.archive_size + 1e-9:
            raise ValueError("qd_score cannot exceed archive size (fitness_norm <= 1)")
        if len(self.kind_counts) != 4 or any(c < 0 for c in self.kind_counts):
            raise ValueError("kind_counts must be four non-negative integers")


def qd_score(archive: Archive) -> float:
    """Sum of normalized fitness over all elites (0 for an empty archive),
    accumulated in ascending cell order for determinism."""
    return float(sum(elite.fitness_norm for elite in archive.elites()))


def snapshot(archive: Archive, generation: int, evaluations: int, kind_counts) -> GenerationRecord:
    """Builds the :class:`GenerationRecord` for the current archive state."""
    best = archive.best_fitness if len(archive) else 0.0
    return GenerationRecord(
        generation=int(generation),
        evaluations=int(evaluations),
        archive_size=len(archive),
        best_fitness_norm=float(best),
        qd_score=qd_score(archive),
        kind_counts=tuple(int(c) for c in kind_counts),
    )


def write_metrics_csv(records, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.generation,
                    r.evaluations,
                    r.archive_size,
                    repr(float(r.best_fitness_norm)),
                    repr(float(r.qd_score)),
                    *r.kind_counts,
                ]
            )


def read_metrics_csv(path) -> list[GenerationRecord]:
    records = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header {header}")
        for row in reader:
            records.append(
                GenerationRecord(
                    generation=int(row[0]),
                    evaluations=int(row[1]),
                    archive_size=int(row[2]),
                    best_fitness_norm=float(row[3]),
                    qd_score=float(row[4]),
                    kind_counts=tuple(int(v) for v in row[5:9]),
                )
            )
    return records


def write_emitter_mix_csv(kind_series, path) -> None:
    """Per-generation active-emitter counts, one row per generation
    starting at 1 (generation 0 has no active emitters)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("generation",) + EMITTER_COUNT_COLUMNS)
        for gen, counts in enumerate(kind_series, start=1):
            writer.writerow([gen, *counts])


def write_aggregate_csv(series_by_rep, path) -> None:
    """Per-generation quartiles across replications.

    Args:
        series_by_rep: One list of :class:`GenerationRecord` per
            replication; all must share the same snapshot cadence.
    """
    if not series_by_rep:
        raise ValueError("need at least one replication series")
    generations = [r.generation for r in series_by_rep[0]]
    for series in series_by_rep[1:]:
        if [r.generation for r in series] != generations:
            raise ValueError("replication series have mismatched snapshot cadences")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(
            (
                "generation",
                "evaluations",
                "size_q1",
                "size_median",
                "size_q3",
                "best_q1",
                "best_median",
                "best_q3",
                "qd_q1",
                "qd_median",
                "qd_q3",
            )
        )
        for i, gen in enumerate(generations):
            rows = [series[i] for series in series_by_rep]
            out = [gen, rows[0].evaluations]
            for values in (
                [r.archive_size for r in rows],
                [r.best_fitness_norm for r in rows],
                [r.qd_score for r in rows],
            ):
                q1, q2, q3 = np.percentile(values, [25, 50, 75])
                out.extend([repr(float(q1)), repr(float(q2)), repr(float(q3))])
            writer.writerow(out)


def triangular_smooth(values, width: int = 50) -> np.ndarray:
    """Triangular sliding-window average for display of noisy series
    (emitter-mix curves); the window is truncated near the edges."""
    values = np.asarray(values, dtype=float)
    if width < 1:
        raise ValueError("width must be at least 1")
    half = width // 2
    kernel = np.concatenate([np.arange(1, half + 2), np.arange(half, 0, -1)]).astype(float)
    padded_num = np.convolve(values, kernel, mode="same")
    padded_den = np.convolve(np.ones_like(values), kernel, mode="same")
    return padded_num / padded_den


def _average_ranks(pooled: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled))
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def rank_sum_compare(a, b) -> tuple[float, float]:
    """Two-sided Wilcoxon rank-sum test between two replication sets.

    The statistic is the rank sum of the first sample over the pooled,
    tie-averaged ranking.  For small groups (both sizes <= 8) the p-value
    is computed by exact enumeration of all rank assignments; otherwise a
    normal approximation with tie correction is used.

    Returns:
        ``(statistic, p_value)``.

    Raises:
        InsufficientDataError: If either group has fewer than 3 values.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = len(a), len(b)
    if n < 3 or m < 3:
        raise InsufficientDataError("rank-sum comparison needs at least 3 values per group")
    pooled = np.concatenate([a, b])
    ranks = _average_ranks(pooled)
    w = float(ranks[:n].sum())

    if n <= 8 and m <= 8:
        total = 0
        count_le = 0
        count_ge = 0
        eps = 1e-12
        for combo in itertools.combinations(range(n + m), n):
            ws = ranks[list(combo)].sum()
            total += 1
            count_le += ws <= w + eps
            count_ge += ws >= w - eps
        p = min(1.0, 2.0 * min(count_le, count_ge) / total)
        return w, p

    mean = n * (n + m + 1) / 2.0
    big_n = n + m
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (big_n * (big_n - 1))
    var = n * m / 12.0 * ((big_n + 1) - tie_term)
    if var <= 0:
        return w, 1.0
    z = (w - mean) / math.sqrt(var)
    return w, math.erfc(abs(z) / math.sqrt(2.0))


def holm_adjust(p_values) -> list[float]:
    """Holm step-down adjusted p-values (same order as the input).

    A hypothesis is rejected at level alpha iff its adjusted p-value is
    below alpha, reproducing the sequential alpha/(m-i) comparisons.
    """
    p = list(map(float, p_values))
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, (m - rank) * p[idx])
        adjusted[idx] = min(1.0, running)
    return adjusted
