"""Permutation primitives for order-of-addition designs.

A run is stored as a 1-D integer array ``x`` of length ``m`` where ``x[r]`` is
the component added at (0-based) position ``r``.  Component pairs ``(a, b)``
with ``a < b`` are indexed lexicographically; every module shares this order.
"""

from functools import lru_cache
from math import comb

import numpy as np

from .exceptions import DimensionError, DomainError, InvalidDesignError

__all__ = [
    "check_permutation",
    "check_design",
    "pair_index",
    "positions",
    "kendall_distance",
    "foldover",
    "pwo_vector",
    "pwo_matrix",
    "distance_matrix",
    "cross_distances",
    "canonical_key",
    "random_permutation",
    "n_pairs",
]


def n_pairs(m):
    """Number of component pairs, ``m(m-1)/2``."""
    return comb(m, 2)


@lru_cache(maxsize=None)
def pair_index(m):
    """Lexicographic pair tables ``(A, B)`` with ``A[k] < B[k]``.

    The returned arrays are read-only and shared between callers.
    """
    a, b = np.triu_indices(m, k=1)
    a = a.astype(np.intp)
    b = b.astype(np.intp)
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def check_permutation(x, m=None):
    """Validate ``x`` as a permutation of ``{0, ..., m-1}`` and return it as an array."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise InvalidDesignError(f"permutation must be 1-D, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.mod(arr, 1) == 0):
            raise InvalidDesignError("permutation entries must be integers")
    arr = arr.astype(np.int64)
    if m is not None and arr.size != m:
        raise DimensionError(f"expected {m} components, got {arr.size}")
    if arr.size < 2:
        raise DomainError("a permutation needs at least 2 components")
    if not np.array_equal(np.sort(arr), np.arange(arr.size)):
        raise InvalidDesignError(f"{arr.tolist()} is not a permutation of 0..{arr.size - 1}")
    return arr


def check_design(design, m=None, min_runs=1, require_distinct=False):
    """Validate an ``n x m`` design array.

    Parameters
    ----------
    design : array-like of shape (n, m)
        One run per row.
    m : int, optional
        Expected number of components.
    min_runs : int
        Smallest admissible ``n``.
    require_distinct : bool
        Reject designs containing repeated runs.

    Returns
    -------
    numpy.ndarray of int64
    """
    arr = np.asarray(design)
    if arr.ndim != 2:
        raise InvalidDesignError(f"design must be 2-D, got shape {arr.shape}")
    n, width = arr.shape
    if m is not None and width != m:
        raise DimensionError(f"expected {m} components, got {width}")
    if n < min_runs:
        raise DomainError(f"design needs at least {min_runs} runs, got {n}")
    if width < 2:
        raise DomainError("a permutation needs at least 2 components")
    arr = arr.astype(np.int64)
    if not np.array_equal(np.sort(arr, axis=1), np.broadcast_to(np.arange(width), arr.shape)):
        bad = next(i for i in range(n) if not np.array_equal(np.sort(arr[i]), np.arange(width)))
        raise InvalidDesignError(f"row {bad} ({arr[bad].tolist()}) is not a permutation")
    if require_distinct and len(np.unique(arr, axis=0)) != n:
        raise InvalidDesignError("design contains repeated runs")
    return arr


def positions(x):
    """Position map: ``positions(x)[c]`` is the 0-based position of component ``c``."""
    return np.argsort(np.asarray(x), axis=-1)


def kendall_distance(x, y):
    """Number of component pairs whose relative order differs between ``x`` and ``y``.

    Examples
    --------
    >>> kendall_distance([0, 1, 2, 3], [1, 2, 3, 0])
    3
    """
    x = check_permutation(x)
    y = check_permutation(y)
    if x.size != y.size:
        raise DimensionError(f"permutations over {x.size} and {y.size} components")
    a, b = pair_index(x.size)
    px, py = positions(x), positions(y)
    return int(np.count_nonzero((px[a] - px[b]) * (py[a] - py[b]) < 0))


def foldover(x):
    """Reverse addition order of ``x``."""
    return np.asarray(x)[..., ::-1].copy()


def pwo_vector(x):
    """Pairwise-ordering signs: ``+1`` at ``(a, b)`` iff ``a`` precedes ``b``."""
    x = check_permutation(x)
    a, b = pair_index(x.size)
    pos = positions(x)
    return np.where(pos[a] < pos[b], 1, -1).astype(np.int64)


def pwo_matrix(design):
    """Stack of PWO vectors, shape ``(n, q)``; no validation."""
    design = np.asarray(design)
    a, b = pair_index(design.shape[-1])
    pos = positions(design)
    return np.where(pos[..., a] < pos[..., b], 1, -1).astype(np.int64)


def distance_matrix(design):
    """All pairwise Kendall distances of a design, via ``k = (q - z.z')/2``."""
    z = pwo_matrix(design)
    q = z.shape[1]
    return (q - z @ z.T) // 2


def cross_distances(left, right):
    """Kendall distances between every row of ``left`` and every row of ``right``."""
    zl = pwo_matrix(np.atleast_2d(left))
    zr = pwo_matrix(np.atleast_2d(right))
    if zl.shape[1] != zr.shape[1]:
        raise DimensionError("designs over different numbers of components")
    return (zl.shape[1] - zl @ zr.T) // 2


def canonical_key(x):
    """Totally ordered key identifying a permutation (its entry tuple)."""
    return tuple(int(v) for v in np.asarray(x).ravel())


def random_permutation(m, rng):
    """Uniform random permutation of ``range(m)`` drawn from ``rng``.

    ``rng`` is a :class:`numpy.random.Generator`, whose ``permutation`` is a
    Fisher-Yates shuffle.
    """
    if m < 2:
        raise DomainError(f"m must be at least 2, got {m}")
    return rng.permutation(m).astype(np.int64)
