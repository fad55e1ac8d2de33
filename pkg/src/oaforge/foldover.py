"""Foldover designs ``D = H u reverse(H)`` built from a representative half ``H``."""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .criteria import DistanceHistogram
from .exceptions import InvalidDesignError
from .permutations import canonical_key, check_design, distance_matrix, foldover, n_pairs

__all__ = [
    "HalfDistanceMatrix",
    "check_half_design",
    "expand",
    "half_of",
    "is_foldover_design",
    "foldover_half",
    "full_histogram_from_half",
    "foldover_metrics",
]


def check_half_design(reps):
    """Validate a representative half-design and return it as an array.

    A valid half has ``h >= 2`` runs, no duplicates and no run paired with
    its own reverse, so that the expansion has no repeated run.
    """
    reps = check_design(reps, min_runs=2)
    forward, reverse = {}, {}
    for i, row in enumerate(reps):
        key = canonical_key(row)
        if key in forward:
            raise InvalidDesignError(f"half-design row {i} duplicates row {forward[key]}")
        if key in reverse:
            raise InvalidDesignError(f"half-design row {i} is the foldover of row {reverse[key]}")
        forward[key] = i
        reverse[canonical_key(row[::-1])] = i
    return reps


@dataclass(frozen=True)
class HalfDistanceMatrix:
    """Within-half Kendall distances; cross distances are derived, never stored."""

    entries: np.ndarray
    q: int

    @classmethod
    def from_half(cls, reps):
        reps = check_half_design(reps)
        return cls(distance_matrix(reps), n_pairs(reps.shape[1]))

    @property
    def h(self):
        return self.entries.shape[0]

    def upper(self):
        """Distances ``u_ij`` for ``i < j``."""
        return self.entries[np.triu_indices(self.h, k=1)]


def expand(reps):
    """Foldover design: the half followed by the reversed half (row ``h+i`` reverses row ``i``)."""
    reps = check_half_design(reps)
    return np.vstack([reps, foldover(reps)])


def half_of(design):
    """First half of a foldover design."""
    design = np.asarray(design)
    return design[: design.shape[0] // 2].copy()


def is_foldover_design(design):
    """True when the runs of ``design`` are distinct and closed under reversal.

    Row order does not matter; at least 4 runs are required.
    """
    design = np.asarray(design)
    if design.ndim != 2 or design.shape[0] % 2 or design.shape[0] < 4:
        return False
    keys = {canonical_key(row) for row in design}
    if len(keys) != design.shape[0]:
        return False
    return all(canonical_key(row[::-1]) in keys for row in design)


def foldover_half(design):
    """A representative half of a foldover design in any row order.

    Keeps, in row order, each run that appears before its reverse.
    """
    if not is_foldover_design(design):
        raise InvalidDesignError("design is not a foldover design")
    design = np.asarray(design)
    seen, rows = set(), []
    for row in design:
        if canonical_key(row[::-1]) not in seen:
            rows.append(row)
        seen.add(canonical_key(row))
    return np.array(rows)


def full_histogram_from_half(hdm):
    """Distance histogram of the expanded design, computed from the half alone.

    Each within-half pair ``i < j`` at distance ``u`` yields the four pairs
    ``{u, u, q-u, q-u}`` of the full design; each run and its reverse add one
    pair at distance ``q``.
    """
    q = hdm.q
    u = hdm.upper()
    counts = 2 * np.bincount(u, minlength=q + 1) + 2 * np.bincount(q - u, minlength=q + 1)
    counts[q] += hdm.h
    return DistanceHistogram(tuple(int(c) for c in counts))


def foldover_metrics(hdm):
    """``(k_min, k_ave, k_m2)`` of the expanded design from the half-distance matrix."""
    q, h = hdm.q, hdm.h
    u = hdm.upper().astype(object)
    kmin = int(min(min(int(v), q - int(v)) for v in u))
    n = 2 * h
    kave = Fraction(n * q, 2 * (n - 1))
    km2 = Fraction(h * q * q + 2 * int(sum(v * v + (q - v) ** 2 for v in u)), h * (2 * h - 1))
    return kmin, kave, km2
