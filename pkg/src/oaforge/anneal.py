"""Simulated-annealing searches for Kendall-distance OofA designs.

:func:`run_fsa_kd` anneals over the representative half of a foldover design
and updates the objective incrementally.  :func:`ordinary_sa` anneals over
unrestricted designs with full recomputation and :func:`srs_design` draws a
random design; both serve as baselines.  :func:`odd_run_design` extends the
foldover search to odd run sizes by deleting one run.
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from . import criteria
from .criteria import _bounds
from .exceptions import ConstructionError, DomainError
from .foldover import expand
from .permutations import distance_matrix, pair_index

log = logging.getLogger(__name__)

__all__ = [
    "AnnealConfig",
    "AnnealState",
    "AnnealResult",
    "Move",
    "MoveEvaluation",
    "Trace",
    "GLOBAL_REPLACE",
    "LOCAL_SWAP",
    "propose_move",
    "swap_pair_set",
    "incremental_distance",
    "apply_move",
    "accept",
    "initial_half",
    "run_fsa_kd",
    "odd_run_design",
    "srs_design",
    "ordinary_sa",
]

GLOBAL_REPLACE = "global"
LOCAL_SWAP = "swap"


@dataclass(frozen=True)
class AnnealConfig:
    """Annealing schedule and objective weight.

    Defaults are the published settings: ``T0 = 1``, ``T_min = 1e-8``,
    ``alpha = 0.997``, 6000 iterations and ``lambda = 0.5``.  ``max_iter=None``
    removes the iteration cap (the temperature floor or a time limit then ends
    the run).
    """

    m: int
    n: int
    t0: float = 1.0
    t_min: float = 1e-8
    alpha: float = 0.997
    max_iter: Optional[int] = 6000
    lam: float = 0.5
    seed: Optional[int] = None

    def __post_init__(self):
        if self.m < 3:
            raise DomainError(f"m must be at least 3, got {self.m}")
        if self.n < 2:
            raise DomainError(f"n must be at least 2, got {self.n}")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 <= self.lam <= 1:
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.t0 <= 0 or self.t_min < 0:
            raise DomainError("temperatures must be positive")
        if self.max_iter is not None and self.max_iter < 0:
            raise DomainError("max_iter must be nonnegative")


@dataclass(frozen=True)
class Move:
    kind: str
    row: int
    candidate: tuple
    s: Optional[int] = None
    t: Optional[int] = None


@dataclass
class MoveEvaluation:
    """Effect of a move on the cached state, before it is committed."""

    distances: list
    delta_g: int
    k_min: int
    delta_k_min: int
    delta_phi: float
    eff_counts: list
    hdm: Optional[list] = None


@dataclass
class Trace:
    iteration: list = field(default_factory=list)
    temperature: list = field(default_factory=list)
    phi: list = field(default_factory=list)
    best_phi: list = field(default_factory=list)
    k_min: list = field(default_factory=list)

    def append(self, iteration, temperature, phi, best_phi, k_min):
        self.iteration.append(iteration)
        self.temperature.append(temperature)
        self.phi.append(phi)
        self.best_phi.append(best_phi)
        self.k_min.append(k_min)

    def __len__(self):
        return len(self.iteration)

    def rows(self):
        return zip(self.iteration, self.temperature, self.phi, self.best_phi, self.k_min)


@dataclass
class AnnealResult:
    design: np.ndarray
    summary: criteria.CriteriaSummary
    trace: Trace
    n_updates: int
    elapsed: float
    half: Optional[np.ndarray] = None
    method: str = "fsa-kd"
    deleted_row: Optional[int] = None


class _Objective:
    """Composite objective in floating point, with normalizers fixed by ``(n, m)``.

    The same arithmetic evaluates cached and recomputed states so the two
    agree bit for bit.
    """

    def __init__(self, n, m, lam):
        b1, l2, u2, _ = _bounds(n, m)
        self.lam = lam
        self.u2 = float(u2)
        if b1 == 1 and u2 <= l2:
            log.warning("m=%d: both objective terms are degenerate; every design scores 1", m)
            self.w_min, self.w_second, self.base = 0.0, 0.0, 1.0
            return
        self.base = 0.0
        if u2 <= l2:
            self.w_min, self.w_second = 1 / (b1 - 1), 0.0
        elif b1 == 1:
            if lam > 0:
                log.warning("m=%d gives B1=1; dropping the k_min term and ignoring lambda=%s", m, lam)
            self.w_min, self.w_second = 0.0, 1 / float(u2 - l2)
        else:
            self.w_min, self.w_second = lam / (b1 - 1), (1 - lam) / float(u2 - l2)

    def value(self, kmin, km2):
        return self.base + self.w_min * (kmin - 1) + self.w_second * (self.u2 - km2)


def _g(u, q):
    return u * u + (q - u) * (q - u)


def _positions_list(x):
    pos = [0] * len(x)
    for r, c in enumerate(x):
        pos[c] = r
    return pos


def _kendall_pos(pa, pb, pairs):
    """Kendall distance from two position maps, comparing every component pair."""
    d = 0
    for a, b in pairs:
        if (pa[a] < pa[b]) != (pb[a] < pb[b]):
            d += 1
    return d


@lru_cache(maxsize=None)
def _pair_list(m):
    a, b = pair_index(m)
    return tuple(zip(a.tolist(), b.tolist()))


class AnnealState:
    """Mutable search state over a representative half-design.

    Caches the position map of every representative, the within-half
    distance matrix, a count array of effective distances ``min(u, q-u)``
    over representative pairs (index ``0..q//2``), and the running sum
    ``g_sum`` of ``u^2 + (q-u)^2``.  Everything is held in plain lists; the
    per-move work is a handful of integer comparisons.
    """

    def __init__(self, reps, objective):
        self.reps = [tuple(int(c) for c in row) for row in reps]
        self.h = len(self.reps)
        self.m = len(self.reps[0])
        self.q = self.m * (self.m - 1) // 2
        self.pairs = _pair_list(self.m)
        self.objective = objective
        self.pos = [_positions_list(x) for x in self.reps]
        self.hdm, self.eff_counts, self.g_sum = self._from_scratch(self.pos)
        self.k_min = _first_positive(self.eff_counts)
        self.keys = {}
        for i, row in enumerate(self.reps):
            self.keys[row] = i
            self.keys[row[::-1]] = i
        self.phi = self.objective.value(self.k_min, self.km2_float)
        self.counters = {"distance_updates": 0, "sign_products": 0, "full_recomputes": 0}

    def _from_scratch(self, pos):
        h, q, pairs = len(pos), self.q, self.pairs
        hdm = [[0] * h for _ in range(h)]
        counts = [0] * (q // 2 + 1)
        g_sum = 0
        for i in range(h):
            for j in range(i + 1, h):
                u = _kendall_pos(pos[i], pos[j], pairs)
                hdm[i][j] = hdm[j][i] = u
                counts[min(u, q - u)] += 1
                g_sum += _g(u, q)
        return hdm, counts, g_sum

    @property
    def half(self):
        return np.array(self.reps, dtype=np.int64)

    @property
    def km2_float(self):
        return (self.h * self.q * self.q + 2 * self.g_sum) / (self.h * (2 * self.h - 1))

    @property
    def k_m2(self):
        return Fraction(self.h * self.q * self.q + 2 * self.g_sum, self.h * (2 * self.h - 1))

    def is_valid(self, move):
        """False when the candidate run (or its reverse) already sits in another row."""
        row = self.keys.get(move.candidate)
        return row is None or row == move.row

    def check_consistency(self):
        """Assert the caches equal a from-scratch recomputation."""
        assert self.pos == [_positions_list(x) for x in self.reps], "position maps drifted"
        hdm, counts, g_sum = self._from_scratch(self.pos)
        assert np.array_equal(np.array(hdm), distance_matrix(self.half)), "distance kernel disagrees"
        assert hdm == self.hdm, "half-distance matrix drifted"
        assert counts == self.eff_counts, "effective-distance counts drifted"
        assert g_sum == self.g_sum, "g_sum drifted"
        assert self.k_min == _first_positive(counts), "k_min drifted"
        assert self.phi == self.objective.value(self.k_min, self.km2_float), "phi drifted"

    def commit(self, move, ev):
        r = move.row
        old = self.reps[r]
        del self.keys[old]
        del self.keys[old[::-1]]
        cand = move.candidate
        self.reps[r] = cand
        self.keys[cand] = r
        self.keys[cand[::-1]] = r
        self.pos[r] = _positions_list(cand)
        if ev.hdm is not None:
            self.hdm = ev.hdm
        else:
            row = ev.distances
            self.hdm[r] = list(row)
            for j in range(self.h):
                self.hdm[j][r] = row[j]
        self.eff_counts = ev.eff_counts
        self.g_sum += ev.delta_g
        self.k_min = ev.k_min
        self.phi = self.objective.value(self.k_min, self.km2_float)


def _first_positive(counts):
    for r in range(1, len(counts)):
        if counts[r]:
            return r
    raise AssertionError("no run pairs recorded")


def propose_move(state, rng, temperature, t0):
    """Draw a move: global replacement with probability ``T/T0``, else a local swap.

    Draw order is fixed: move kind, row, then move details.
    """
    m = state.m
    is_global = rng.random() < temperature / t0
    r = int(rng.integers(len(state.reps)))
    if is_global:
        return Move(GLOBAL_REPLACE, r, tuple(rng.permutation(m).tolist()))
    s, t = state.pairs[int(rng.integers(len(state.pairs)))]
    cand = list(state.reps[r])
    cand[s], cand[t] = cand[t], cand[s]
    return Move(LOCAL_SWAP, r, tuple(cand), s, t)


def swap_pair_set(x, s, t):
    """Component pairs whose relative order flips when positions ``s < t`` of ``x`` swap.

    Returned as a set of sorted ``(a, b)`` tuples; it holds ``2(t-s)-1`` pairs.
    """
    if not s < t:
        raise DomainError(f"swap positions need s < t, got s={s}, t={t}")
    x = [int(v) for v in x]
    pairs = {tuple(sorted((x[s], x[t])))}
    for ell in range(s + 1, t):
        pairs.add(tuple(sorted((x[s], x[ell]))))
        pairs.add(tuple(sorted((x[t], x[ell]))))
    return pairs


def incremental_distance(k_old, x_r, x_j, pairs):
    """``k(x_r', x_j)`` after a swap in ``x_r`` flipping ``pairs``, from ``k(x_r, x_j)``.

    Each flipped pair adds ``z(x_r) * z(x_j)``: one more disagreement if the
    pair agreed before, one fewer otherwise.
    """
    pos_r = _positions_list([int(c) for c in x_r])
    pos_j = _positions_list([int(c) for c in x_j])
    total = k_old
    for a, b in pairs:
        total += (1 if pos_r[a] < pos_r[b] else -1) * (1 if pos_j[a] < pos_j[b] else -1)
    return int(total)


def _finish(state, move, new, hdm=None):
    """Turn the candidate row distances into the objective change."""
    r = move.row
    q = state.q
    old = state.hdm[r]
    counts = list(state.eff_counts)
    delta_g = 0
    for j in range(state.h):
        if j == r:
            continue
        u, v = old[j], new[j]
        if u != v:
            delta_g += _g(v, q) - _g(u, q)
            counts[min(u, q - u)] -= 1
            counts[min(v, q - v)] += 1
    kmin = _first_positive(counts)
    obj = state.objective
    dk = kmin - state.k_min
    h = state.h
    dphi = obj.w_min * dk - obj.w_second * 2 * delta_g / (h * (2 * h - 1))
    return MoveEvaluation(new, delta_g, kmin, dk, dphi, counts, hdm)


def apply_move(state, move):
    """Evaluate a move incrementally without mutating ``state``.

    A local swap changes only the pairs it flips, so each of the ``h-1``
    affected distances moves by a sum of ``2(t-s)-1`` sign products.  A
    global replacement recomputes the ``h-1`` distances directly.
    """
    r, h = move.row, state.h
    old = state.hdm[r]
    pos = state.pos
    new = [0] * h
    if move.kind == LOCAL_SWAP:
        x = state.reps[r]
        s, t = move.s, move.t
        xs, xt = x[s], x[t]
        mid = x[s + 1 : t]
        for j in range(h):
            if j == r:
                continue
            p = pos[j]
            ps, pt = p[xs], p[xt]
            # x_r has xs before every mid before xt; +1 where x_j agrees
            d = old[j] + (1 if ps < pt else -1)
            for c in mid:
                pc = p[c]
                d += (1 if ps < pc else -1) + (1 if pc < pt else -1)
            new[j] = d
        state.counters["sign_products"] += (h - 1) * (2 * (t - s) - 1)
    else:
        pc = _positions_list(move.candidate)
        pairs = state.pairs
        for j in range(h):
            if j != r:
                new[j] = _kendall_pos(pc, pos[j], pairs)
    state.counters["distance_updates"] += h - 1
    return _finish(state, move, new)


def _apply_move_full(state, move):
    """Evaluate a move by recomputing every within-half distance."""
    pos = list(state.pos)
    pos[move.row] = _positions_list(move.candidate)
    hdm, counts, g_sum = state._from_scratch(pos)
    state.counters["full_recomputes"] += 1
    kmin = _first_positive(counts)
    obj = state.objective
    h = state.h
    km2 = (h * state.q * state.q + 2 * g_sum) / (h * (2 * h - 1))
    dphi = obj.value(kmin, km2) - state.phi
    return MoveEvaluation(hdm[move.row], g_sum - state.g_sum, kmin, kmin - state.k_min, dphi, counts, hdm)


def accept(delta_phi, temperature, rng):
    """Metropolis rule: always take improvements, else with probability ``exp(dphi/T)``."""
    if delta_phi > 0:
        return True
    return rng.random() < math.exp(delta_phi / temperature)


def initial_half(m, h, rng, max_failures=None):
    """Random half-design whose foldover expansion has no repeated run."""
    if math.factorial(m) < 2 * h:
        raise ConstructionError(f"a foldover design with {2 * h} distinct runs needs 2h <= m! = {math.factorial(m)}")
    max_failures = 100 * h if max_failures is None else max_failures
    rows, seen = [], set()
    failures = 0
    while len(rows) < h:
        x = tuple(rng.permutation(m).tolist())
        if x in seen:
            failures += 1
            if failures >= max_failures:
                raise ConstructionError(f"no valid half-design after {failures} consecutive rejected draws")
            continue
        failures = 0
        rows.append(x)
        seen.add(x)
        seen.add(x[::-1])
    return np.array(rows, dtype=np.int64)


def _rng(config, rng):
    return np.random.default_rng(config.seed) if rng is None else rng


def run_fsa_kd(config, rng=None, *, update="incremental", time_limit=None, check=False):
    """Foldover simulated annealing for maximin Kendall-distance designs.

    Parameters
    ----------
    config : AnnealConfig
        Requires even ``n`` with ``n >= 4`` and ``n <= m!``.
    rng : numpy.random.Generator, optional
        Defaults to ``default_rng(config.seed)``.
    update : {"incremental", "full"}
        How candidate distances are obtained.  Both modes consume random
        numbers identically.
    time_limit : float, optional
        Wall-clock budget in seconds; checked before each iteration.
    check : bool
        Verify the cached state against a full recomputation after every
        accepted move.

    Returns
    -------
    AnnealResult
        The best design seen (half first, then its reverses), its criteria,
        and a per-iteration trace.
    """
    start = time.perf_counter()
    if config.n % 2 or config.n < 4:
        raise DomainError(f"the foldover search needs an even n >= 4, got n={config.n}")
    if update not in ("incremental", "full"):
        raise ValueError(f"unknown update mode {update!r}")
    rng = _rng(config, rng)
    h = config.n // 2
    objective = _Objective(config.n, config.m, config.lam)
    state = AnnealState(initial_half(config.m, h, rng), objective)
    evaluate_move = apply_move if update == "incremental" else _apply_move_full

    best_reps, best_phi = list(state.reps), state.phi
    trace = Trace()
    temperature = config.t0
    it = 0
    while config.max_iter is None or it < config.max_iter:
        if temperature < config.t_min:
            break
        if time_limit is not None and time.perf_counter() - start >= time_limit:
            break
        it += 1
        move = propose_move(state, rng, temperature, config.t0)
        if state.is_valid(move):
            ev = evaluate_move(state, move)
            if accept(ev.delta_phi, temperature, rng):
                state.commit(move, ev)
                if check:
                    state.check_consistency()
                if state.phi > best_phi:
                    best_reps, best_phi = list(state.reps), state.phi
        trace.append(it, temperature, state.phi, best_phi, state.k_min)
        temperature *= config.alpha

    half = np.array(best_reps, dtype=np.int64)
    design = expand(half)
    summary = criteria.evaluate(design, config.lam)
    return AnnealResult(
        design=design,
        summary=summary,
        trace=trace,
        n_updates=it,
        elapsed=time.perf_counter() - start,
        half=half,
        method="fsa-kd" if update == "incremental" else "foldover-full",
    )


def _leave_one_out(design):
    """Index of the run whose deletion leaves the largest ``k_min``.

    Ties go to the smaller ``k_m2``, then to the lower row index.
    """
    n = design.shape[0]
    dist = distance_matrix(design).astype(np.int64)
    best = None
    for i in range(n):
        keep = np.delete(np.arange(n), i)
        sub = dist[np.ix_(keep, keep)][np.triu_indices(n - 1, k=1)]
        key = (-int(sub.min()), Fraction(int((sub * sub).sum()), sub.size), i)
        if best is None or key < best:
            best = key
    return best[2]


def odd_run_design(config, rng=None, **kwargs):
    """Odd-``n`` design: anneal an ``(n+1)``-run foldover design, then drop its weakest run."""
    if config.n % 2 == 0:
        raise DomainError(f"odd_run_design needs an odd n, got n={config.n}")
    start = time.perf_counter()
    parent_cfg = AnnealConfig(**{**config.__dict__, "n": config.n + 1})
    parent = run_fsa_kd(parent_cfg, _rng(config, rng), **kwargs)
    i = _leave_one_out(parent.design)
    design = np.delete(parent.design, i, axis=0)
    return AnnealResult(
        design=design,
        summary=criteria.evaluate(design, config.lam),
        trace=parent.trace,
        n_updates=parent.n_updates,
        elapsed=time.perf_counter() - start,
        half=parent.half,
        method="odd",
        deleted_row=i,
    )


def srs_design(n, m, rng):
    """``n`` distinct permutations drawn uniformly without replacement."""
    total = math.factorial(m)
    if n > total:
        raise DomainError(f"cannot draw {n} distinct runs from {total} permutations")
    if 2 * n > total:
        full = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
        return full[rng.choice(total, size=n, replace=False)]
    rows, seen = [], set()
    while len(rows) < n:
        x = tuple(rng.permutation(m).tolist())
        if x not in seen:
            seen.add(x)
            rows.append(x)
    return np.array(rows, dtype=np.int64)


class _DesignState:
    """Unrestricted ``n``-run state for the ordinary annealing baseline."""

    def __init__(self, design, objective):
        self.reps = [tuple(int(c) for c in row) for row in design]
        self.n = len(self.reps)
        self.m = len(self.reps[0])
        self.pairs = _pair_list(self.m)
        self.n_pairs = self.n * (self.n - 1) // 2
        self.objective = objective
        self.keys = {row: i for i, row in enumerate(self.reps)}
        self.pos = [_positions_list(x) for x in self.reps]
        self.k_min, self.sumsq = self.score(self.pos)
        self.phi = objective.value(self.k_min, self.sumsq / self.n_pairs)

    def score(self, pos):
        """``(k_min, sum of squared distances)`` recomputed over every run pair."""
        pairs = self.pairs
        kmin, sumsq = None, 0
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                d = _kendall_pos(pos[i], pos[j], pairs)
                sumsq += d * d
                if kmin is None or d < kmin:
                    kmin = d
        return kmin, sumsq

    def is_valid(self, move):
        row = self.keys.get(move.candidate)
        return row is None or row == move.row


def ordinary_sa(config, rng=None, *, time_limit=None):
    """Annealing over unrestricted designs with full recomputation per move.

    Moves, schedule and objective match :func:`run_fsa_kd`; the foldover
    normalizers of ``(n, m)`` are kept as fixed scalars.
    """
    start = time.perf_counter()
    if math.factorial(config.m) < config.n:
        raise ConstructionError(f"{config.n} distinct runs exceed m! = {math.factorial(config.m)}")
    rng = _rng(config, rng)
    objective = _Objective(config.n, config.m, config.lam)
    state = _DesignState(srs_design(config.n, config.m, rng), objective)
    best, best_phi = list(state.reps), state.phi
    trace = Trace()
    temperature = config.t0
    it = 0
    while config.max_iter is None or it < config.max_iter:
        if temperature < config.t_min:
            break
        if time_limit is not None and time.perf_counter() - start >= time_limit:
            break
        it += 1
        move = propose_move(state, rng, temperature, config.t0)
        if state.is_valid(move):
            pos = list(state.pos)
            pos[move.row] = _positions_list(move.candidate)
            kmin, sumsq = state.score(pos)
            phi = objective.value(kmin, sumsq / state.n_pairs)
            if accept(phi - state.phi, temperature, rng):
                del state.keys[state.reps[move.row]]
                state.keys[move.candidate] = move.row
                state.reps[move.row] = move.candidate
                state.pos = pos
                state.k_min, state.sumsq, state.phi = kmin, sumsq, phi
                if phi > best_phi:
                    best, best_phi = list(state.reps), phi
        trace.append(it, temperature, state.phi, best_phi, state.k_min)
        temperature *= config.alpha
    design = np.array(best, dtype=np.int64)
    summary = criteria.evaluate(design, config.lam)
    return AnnealResult(
        design=design,
        summary=summary,
        trace=trace,
        n_updates=it,
        elapsed=time.perf_counter() - start,
        method="ordinary-sa",
    )
