"""Grid archive: a uniform discretization of descriptor space where each
cell keeps the single best solution seen for that behaviour.

The archive is the central data structure of the library.  Solutions are
inserted through :meth:`Archive.add_attempt`, which applies the elitist
competition rule (empty cell -> insert, occupied cell -> replace only on
strict fitness improvement).  Competition compares raw task fitness;
normalized fitness, which clamps to [0, 1] outside the task's reference
range, is stored alongside it for rewards and metrics.  On the reference
range the two orderings coincide (normalization is affine there), but raw
competition keeps selection pressure alive where the clamp saturates.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np


class EmptyArchiveError(RuntimeError):
    """Raised when an operation needs at least one elite in the archive."""


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned uniform grid over a bounded descriptor space.

    Args:
        lower: Per-axis lower bounds of the descriptor space.
        upper: Per-axis upper bounds (strictly greater than ``lower``).
        resolution: Number of cells along each axis.
    """

    lower: np.ndarray
    upper: np.ndarray
    resolution: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        resolution = np.asarray(self.resolution, dtype=np.int64)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "resolution", resolution)
        if lower.ndim != 1 or lower.shape != upper.shape or lower.shape != resolution.shape:
            raise ValueError("lower, upper and resolution must be 1-D with equal length")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("grid bounds must be finite")
        if not (lower < upper).all():
            raise ValueError("lower bounds must be strictly below upper bounds")
        if not (resolution >= 1).all():
            raise ValueError("resolution must be at least 1 per axis")

    @property
    def dims(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        """Cell width along each axis."""
        return (self.upper - self.lower) / self.resolution

    @property
    def total_cells(self) -> int:
        return int(np.prod(self.resolution))


def cell_index(descriptor: np.ndarray, spec: GridSpec) -> int:
    """Maps a descriptor to its flat cell index.

    The axis-k index is ``floor((d[k] - lower[k]) / width[k])``, clamped
    into ``[0, resolution[k] - 1]`` so that descriptors at or beyond the
    bounds land in the boundary cells.  Axes are flattened in C order
    (last axis varies fastest).

    Raises:
        ValueError: If any descriptor component is not finite.
    """
    d = np.asarray(descriptor, dtype=float)
    if d.shape != (spec.dims,):
        raise ValueError(f"descriptor has shape {d.shape}, expected ({spec.dims},)")
    if not np.isfinite(d).all():
        raise ValueError(f"descriptor contains non-finite values: {d}")
    flat = 0
    lower = spec.lower
    widths = spec.widths
    res = spec.resolution
    for k in range(spec.dims):
        i = math.floor((float(d[k]) - float(lower[k])) / float(widths[k]))
        r = int(res[k])
        if i < 0:
            i = 0
        elif i >= r:
            i = r - 1
        flat = flat * r + i
    return flat


def cell_indices(descriptors: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Vectorized :func:`cell_index` for a ``(m, dims)`` descriptor batch."""
    d = np.asarray(descriptors, dtype=float)
    if d.ndim != 2 or d.shape[1] != spec.dims:
        raise ValueError(f"descriptor batch has shape {d.shape}, expected (m, {spec.dims})")
    if not np.isfinite(d).all():
        raise ValueError("descriptor batch contains non-finite values")
    axis = np.floor((d - spec.lower) / spec.widths).astype(np.int64)
    np.clip(axis, 0, spec.resolution - 1, out=axis)
    flat = axis[:, 0].copy()
    for k in range(1, spec.dims):
        flat *= spec.resolution[k]
        flat += axis[:, k]
    return flat


@dataclass(slots=True)
class Elite:
    """A stored solution: genotype, its descriptor and both fitness scales."""

    genotype: np.ndarray
    descriptor: np.ndarray
    fitness_raw: float
    fitness_norm: float


class AddStatus(Enum):
    NEW = "new"
    IMPROVED = "improved"
    REJECTED = "rejected"


@dataclass(frozen=True, slots=True)
class AddResult:
    """Outcome of one insertion attempt.

    ``improvement`` is the candidate's normalized fitness for a new cell,
    the normalized fitness delta for a replacement, and 0.0 for a
    rejection.  Because normalized fitness saturates at 0 outside the
    reference range, a replacement there can legitimately report
    ``improvement == 0.0`` even though the raw fitness strictly improved.
    """

    status: AddStatus
    improvement: float

    @property
    def added(self) -> bool:
        return self.status is not AddStatus.REJECTED

    @property
    def is_new_cell(self) -> bool:
        return self.status is AddStatus.NEW


_REJECTED = AddResult(AddStatus.REJECTED, 0.0)


class Archive:
    """Sparse elitist grid over descriptor space.

    Storage is a map from flat cell index to :class:`Elite`, so memory is
    proportional to occupancy rather than grid size.  Occupied cells are
    also kept in a sorted list, which makes iteration order and uniform
    elite sampling canonical (ascending cell index) regardless of
    insertion history.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self._cells: dict[int, Elite] = {}
        self._sorted_keys: list[int] = []
        self._geno_cache: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._cells)

    @property
    def size(self) -> int:
        """Number of occupied cells."""
        return len(self._cells)

    def add_attempt(self, elite: Elite) -> AddResult:
        """Offers an elite to the archive and applies the competition rule.

        A new cell is always filled.  An occupied cell is replaced only if
        the candidate's raw fitness is strictly higher; ties keep the
        incumbent.

        Returns:
            The :class:`AddResult` describing what happened.
        """
        fn = elite.fitness_norm
        if not (0.0 <= fn <= 1.0):
            raise ValueError(f"fitness_norm must be in [0, 1], got {fn}")
        cell = cell_index(elite.descriptor, self.spec)
        return self.offer(cell, elite)

    def offer(self, cell: int, elite: Elite) -> AddResult:
        """Competition rule for a pre-binned candidate.

        Trusted fast path for the insertion loop: the caller guarantees
        ``cell`` is the candidate's cell index (batch-computed) and
        ``fitness_norm`` is already in [0, 1].
        """
        incumbent = self._cells.get(cell)
        if incumbent is None:
            self._cells[cell] = elite
            bisect.insort(self._sorted_keys, cell)
            self._geno_cache = None
            return AddResult(AddStatus.NEW, elite.fitness_norm)
        if elite.fitness_raw > incumbent.fitness_raw:
            # norm is a monotone function of raw, so this delta is >= 0
            improvement = elite.fitness_norm - incumbent.fitness_norm
            self._cells[cell] = elite
            self._geno_cache = None
            return AddResult(AddStatus.IMPROVED, improvement)
        return _REJECTED

    def offer_candidate(
        self, cell: int, genotype, descriptor, fitness_raw: float, fitness_norm: float
    ) -> AddResult:
        """Competition rule for raw candidate rows (engine hot path).

        Losing candidates are rejected without constructing anything;
        winning ones are copied into a fresh :class:`Elite`, so callers
        may pass views into batch matrices.
        """
        incumbent = self._cells.get(cell)
        if incumbent is not None and fitness_raw <= incumbent.fitness_raw:
            return _REJECTED
        elite = Elite(
            np.array(genotype, dtype=float),
            np.array(descriptor, dtype=float),
            float(fitness_raw),
            float(fitness_norm),
        )
        return self.offer(cell, elite)

    def elite_at_rank(self, rank: int) -> Elite:
        """Elite in the ``rank``-th occupied cell, in ascending cell order."""
        return self._cells[self._sorted_keys[rank]]

    def random_elite(self, rng: np.random.Generator) -> Elite:
        """Draws one elite uniformly over the occupied cells."""
        if not self._cells:
            raise EmptyArchiveError("cannot sample an elite from an empty archive")
        return self.elite_at_rank(int(rng.integers(len(self._sorted_keys))))

    @property
    def best_fitness(self) -> float:
        """Highest normalized fitness currently stored."""
        if not self._cells:
            raise EmptyArchiveError("archive is empty, best fitness undefined")
        return max(e.fitness_norm for e in self._cells.values())

    def __iter__(self) -> Iterator[tuple[int, Elite]]:
        """Yields ``(cell index, elite)`` pairs in ascending cell order."""
        for cell in self._sorted_keys:
            yield cell, self._cells[cell]

    def elites(self) -> list[Elite]:
        """All elites in ascending cell order."""
        return [self._cells[c] for c in self._sorted_keys]

    def genotype_matrix(self) -> np.ndarray:
        """Genotypes stacked row-wise in ascending cell order.

        The matrix is cached until the next successful insertion, so
        repeated reads within one frozen-archive phase cost nothing.
        Callers must treat it as read-only.
        """
        if self._geno_cache is None:
            self._geno_cache = np.array([self._cells[c].genotype for c in self._sorted_keys])
        return self._geno_cache

    def write_csv(self, path) -> None:
        """Dumps the archive, one row per occupied cell in ascending order.

        The header is ``cell_index,bd_0,...,fitness_raw,fitness_norm,
        g_0,...,g_{n-1}`` and every float is written with full
        round-trippable precision.
        """
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            first = next(iter(self._cells.values()), None)
            bd_dim = self.spec.dims
            geno_dim = 0 if first is None else len(first.genotype)
            header = (
                ["cell_index"]
                + [f"bd_{k}" for k in range(bd_dim)]
                + ["fitness_raw", "fitness_norm"]
                + [f"g_{k}" for k in range(geno_dim)]
            )
            writer.writerow(header)
            for cell, elite in self:
                row = [cell]
                row.extend(repr(float(v)) for v in elite.descriptor)
                row.append(repr(float(elite.fitness_raw)))
                row.append(repr(float(elite.fitness_norm)))
                row.extend(repr(float(v)) for v in elite.genotype)
                writer.writerow(row)

    @classmethod
    def read_csv(cls, path, spec: GridSpec) -> "Archive":
        """Reconstructs an archive from :meth:`write_csv` output.

        Raises:
            ValueError: If a row's descriptor does not bin to its recorded
                cell index under ``spec``.
        """
        archive = cls(spec)
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader)
            bd_dim = spec.dims
            n_geno = len(header) - 3 - bd_dim
            for row in reader:
                cell = int(row[0])
                descriptor = np.array([float(v) for v in row[1 : 1 + bd_dim]])
                fitness_raw = float(row[1 + bd_dim])
                fitness_norm = float(row[2 + bd_dim])
                genotype = np.array([float(v) for v in row[3 + bd_dim : 3 + bd_dim + n_geno]])
                if cell_index(descriptor, spec) != cell:
                    raise ValueError(
                        f"row for cell {cell} does not bin to its own cell under this grid"
                    )
                archive._cells[cell] = Elite(genotype, descriptor, fitness_raw, fitness_norm)
                bisect.insort(archive._sorted_keys, cell)
        return archive
