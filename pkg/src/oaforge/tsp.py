"""Closed-tour TSP objective used as a permutation benchmark."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DesignFileError, DimensionError, DomainError
from .permutations import check_permutation

__all__ = ["TspInstance", "tsp_objective", "tsp_objective_batch"]


@dataclass(frozen=True)
class TspInstance:
    """Travel costs ``cost[p, q]`` from city ``p`` to city ``q``."""

    cost: np.ndarray

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=float)
        if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
            raise DimensionError(f"cost matrix must be square, got shape {cost.shape}")
        if cost.shape[0] < 2:
            raise DomainError("a tour needs at least 2 cities")
        if not np.all(np.isfinite(cost)):
            raise DomainError("cost matrix has non-finite entries")
        if np.any(cost < 0):
            raise DomainError("cost matrix has negative entries")
        if np.any(np.diag(cost) != 0):
            raise DomainError("cost matrix must have a zero diagonal")
        object.__setattr__(self, "cost", cost)

    @property
    def m(self):
        return self.cost.shape[0]

    @classmethod
    def random_euclidean(cls, m, rng):
        """``m`` cities uniform on the unit square with Euclidean costs."""
        pts = rng.random((m, 2))
        diff = pts[:, None, :] - pts[None, :, :]
        return cls(np.sqrt((diff**2).sum(axis=-1)))

    def to_csv(self, path):
        """Write ``m`` on the first line, then the matrix row by row."""
        lines = [str(self.m)]
        lines += [",".join(repr(float(v)) for v in row) for row in self.cost]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path):
        lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
        lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln and not ln.startswith("#")]
        if not lines:
            raise DesignFileError("empty cost file")
        lineno, header = lines[0]
        try:
            m = int(header)
        except ValueError:
            raise DesignFileError(f"expected the city count, got {header!r}", lineno) from None
        if len(lines) - 1 != m:
            raise DesignFileError(f"expected {m} matrix rows, got {len(lines) - 1}")
        rows = []
        for lineno, ln in lines[1:]:
            try:
                row = [float(v) for v in ln.split(",")]
            except ValueError:
                raise DesignFileError(f"non-numeric cost in {ln!r}", lineno) from None
            if len(row) != m:
                raise DesignFileError(f"expected {m} costs, got {len(row)}", lineno)
            rows.append(row)
        return cls(np.array(rows))


def tsp_objective(x, inst):
    """Length of the closed tour visiting cities in the order ``x``."""
    x = check_permutation(x)
    if x.size != inst.m:
        raise DimensionError(f"tour over {x.size} cities for an instance with {inst.m}")
    return float(inst.cost[x, np.roll(x, -1)].sum())


def tsp_objective_batch(design, inst):
    """Tour lengths for every row of ``design``; no validation."""
    design = np.asarray(design)
    return inst.cost[design, np.roll(design, -1, axis=1)].sum(axis=1)
