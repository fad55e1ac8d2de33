"""Kendall-distance summaries and PWO-model criteria of OofA designs.

All moment-type quantities are exact :class:`fractions.Fraction` values; the
composite objective ``phi`` is the only floating-point output.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import DomainError
from .permutations import check_design, distance_matrix, n_pairs, pwo_matrix

__all__ = [
    "DistanceHistogram",
    "Bounds",
    "CriteriaSummary",
    "distance_histogram",
    "histogram_from_distances",
    "k_min",
    "k_ave",
    "k_m2",
    "ms_criterion_direct",
    "ms_criterion_identity",
    "full_design_ms_benchmark",
    "c1_c2",
    "c1_c2_direct",
    "moment_lower_bound",
    "bounds",
    "phi_lambda",
    "evaluate",
]

C1C2_DIRECT_MAX_M = 7


@dataclass(frozen=True)
class DistanceHistogram:
    """Counts of unordered run pairs at each Kendall distance ``0..q``."""

    counts: tuple

    @property
    def q(self):
        return len(self.counts) - 1

    @property
    def total_pairs(self):
        return sum(self.counts)

    def as_dict(self):
        """Nonzero entries as ``{distance: count}``."""
        return {r: c for r, c in enumerate(self.counts) if c}


class Bounds(NamedTuple):
    b1: int
    l2: Fraction
    u2: Fraction
    kave_bench: Fraction


@dataclass(frozen=True)
class CriteriaSummary:
    n: int
    m: int
    k_min: int
    k_ave: Fraction
    k_m2: Fraction
    c1: Fraction
    c2: Fraction
    tr_m2: Fraction
    phi: Optional[float]
    lam: float


def histogram_from_distances(distances, q):
    """Histogram of a flat sequence of pair distances."""
    counts = np.bincount(np.asarray(distances, dtype=np.int64).ravel(), minlength=q + 1)
    if counts.size > q + 1:
        raise DomainError(f"distance {counts.size - 1} exceeds q={q}")
    return DistanceHistogram(tuple(int(c) for c in counts))


def distance_histogram(design):
    """Histogram of the inter-run Kendall distances of ``design``."""
    design = check_design(design)
    n, m = design.shape
    iu = np.triu_indices(n, k=1)
    return histogram_from_distances(distance_matrix(design)[iu], n_pairs(m))


def _check_nonempty(hist):
    if hist.total_pairs < 1:
        raise DomainError("histogram holds no run pairs")


def k_min(hist):
    """Smallest pairwise distance."""
    _check_nonempty(hist)
    return next(r for r, c in enumerate(hist.counts) if c)


def k_ave(hist):
    """Mean pairwise distance."""
    _check_nonempty(hist)
    return Fraction(sum(r * c for r, c in enumerate(hist.counts)), hist.total_pairs)


def k_m2(hist):
    """Second moment of the pairwise distances."""
    _check_nonempty(hist)
    return Fraction(sum(r * r * c for r, c in enumerate(hist.counts)), hist.total_pairs)


def ms_criterion_direct(design):
    """``tr(M^2)`` with ``M = X'X`` for the PWO model matrix ``X`` (intercept + PWO columns).

    Evaluated on the ``(q+1) x (q+1)`` information matrix in integer arithmetic.
    """
    design = check_design(design)
    z = pwo_matrix(design)
    x = np.hstack([np.ones((z.shape[0], 1), dtype=np.int64), z])
    info = x.T @ x
    return Fraction(int(np.einsum("ij,ji->", info, info)))


def ms_criterion_identity(hist, n, m):
    """``tr(M^2)`` from the first two distance moments."""
    pairs = n * (n - 1)
    return (
        4 * pairs * k_m2(hist)
        - (2 * m * (m - 1) + 4) * pairs * k_ave(hist)
        + Fraction(n * n * (m * m - m + 2) ** 2, 4)
    )


def full_design_ms_benchmark(m):
    """Per-run-squared MS value of the full design, ``tr(M_full^2)/(m!)^2``."""
    return Fraction(2 * m**3 + 3 * m**2 - 5 * m + 18, 18)


def c1_c2(hist, n, m):
    """First two centralized generalized wordlength quantities from the distance moments."""
    q = n_pairs(m)
    ratio = Fraction(2 * (n - 1), n)
    kave = k_ave(hist)
    c1 = q - ratio * kave
    c2 = Fraction(q * (q - 1), 2) - q * ratio * kave + ratio * k_m2(hist) - Fraction(m * (m - 1) * (m - 2), 18)
    return c1, c2


@lru_cache(maxsize=None)
def _full_j_characteristics(m):
    """Order-1 and order-2 J-characteristics of the full design ``S_m``."""
    full = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    z = pwo_matrix(full)
    return z.sum(axis=0), z.T @ z, len(full)


def _j_deviation(j_design, n, j_full, n_full):
    return sum(
        (Fraction(int(a), n) - Fraction(int(b), n_full)) ** 2 for a, b in zip(j_design, j_full)
    )


def c1_c2_direct(design):
    """``C1`` and ``C2`` from J-characteristics against an enumerated full design.

    Only available for ``m <= 7``.
    """
    design = check_design(design)
    n, m = design.shape
    if m > C1C2_DIRECT_MAX_M:
        raise DomainError(f"direct J-characteristics need m <= {C1C2_DIRECT_MAX_M}, got {m}")
    z = pwo_matrix(design)
    j1_full, j2_full, n_full = _full_j_characteristics(m)
    iu = np.triu_indices(z.shape[1], k=1)
    c1 = _j_deviation(z.sum(axis=0), n, j1_full, n_full)
    c2 = _j_deviation((z.T @ z)[iu], n, j2_full[iu], n_full)
    return c1, c2


def moment_lower_bound(n, m, kave):
    """Smallest ``k_m2`` compatible with ``k_ave`` for an ``n``-run design."""
    return Fraction(m * m - m + 2, 2) * kave - Fraction(
        n * m * (9 * m**3 - 22 * m**2 + 39 * m - 26), 144 * (n - 1)
    )


def _bounds(n, m):
    b1 = m * (m - 1) // 4
    l2 = Fraction(n * m * (m - 1) * (9 * m * m - 5 * m + 10), 144 * (n - 1))
    u2 = Fraction(n * m * m * (m - 1) ** 2 - 4 * (n - 2) * (m * (m - 1) - 2), 8 * (n - 1))
    kave_bench = Fraction(n * m * (m - 1), 4 * (n - 1))
    return Bounds(b1, l2, u2, kave_bench)


def bounds(n, m):
    """Foldover-class benchmarks ``(B1, L2, U2, kave_bench)``.

    Defined for even ``n >= 4`` and ``m >= 3``.
    """
    if n % 2:
        raise DomainError(f"foldover bounds need an even run size, got n={n}")
    if n < 4:
        raise DomainError(f"foldover bounds need n >= 4, got n={n}")
    if m < 3:
        raise DomainError(f"foldover bounds need m >= 3, got m={m}")
    return _bounds(n, m)


def phi_lambda(kmin, km2, n, m, lam=0.5, clamp=False):
    """Weighted, normalized composite of ``k_min`` (larger better) and ``k_m2`` (smaller better).

    For ``m == 3`` both normalizers collapse (``B1 == 1`` and ``L2 == U2``):
    a collapsed term is dropped, and with both gone every design scores 1.
    With ``clamp=True`` each normalized term is clipped to ``[0, 1]``, which is
    only meant for reporting on designs outside the foldover class.
    """
    if not 0 <= lam <= 1:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    b1, l2, u2, _ = bounds(n, m)
    lam = Fraction(lam)
    terms = []
    if b1 > 1:
        terms.append((lam, Fraction(kmin - 1, b1 - 1)))
    if u2 > l2:
        terms.append((1 - lam, (u2 - Fraction(km2)) / (u2 - l2)))
    if not terms:
        return 1.0
    if clamp:
        terms = [(w, min(max(t, Fraction(0)), Fraction(1))) for w, t in terms]
    if len(terms) == 1:
        return float(terms[0][1])
    return float(sum(w * t for w, t in terms))


def evaluate(design, lam=0.5):
    """Full :class:`CriteriaSummary` of a design.

    ``phi`` is reported (clamped) only when the foldover bounds exist, i.e. for
    even ``n >= 4`` and ``m >= 3``; otherwise it is ``None``.
    """
    design = check_design(design, min_runs=2)
    n, m = design.shape
    hist = distance_histogram(design)
    kmin, kave, km2 = k_min(hist), k_ave(hist), k_m2(hist)
    c1, c2 = c1_c2(hist, n, m)
    phi = None
    if n % 2 == 0 and n >= 4 and m >= 3:
        phi = phi_lambda(kmin, km2, n, m, lam, clamp=True)
    return CriteriaSummary(
        n=n,
        m=m,
        k_min=kmin,
        k_ave=kave,
        k_m2=km2,
        c1=c1,
        c2=c2,
        tr_m2=ms_criterion_identity(hist, n, m),
        phi=phi,
        lam=lam,
    )
