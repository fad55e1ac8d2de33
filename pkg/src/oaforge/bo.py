"""Bayesian optimization over permutations with a Mallows-kernel GP and EI.

The acquisition is maximized by best-improvement local search over the
all-pairs swap neighborhood from several random starts.
"""

import math
from dataclasses import dataclass

import numpy as np

from .anneal import AnnealConfig, odd_run_design, run_fsa_kd, srs_design
from .exceptions import DomainError
from .permutations import pair_index
from .surrogate import ei_from_moments, gp_fit, gp_predict
from .tsp import tsp_objective_batch

__all__ = ["BOResult", "initial_design", "maximize_ei", "run_bo"]

INIT_MODES = ("fsa-kd", "srs")


@dataclass
class BOResult:
    best_so_far: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    n_init: int


def initial_design(mode, n, m, rng, **anneal_kwargs):
    """``n`` distinct starting permutations, either annealed or simple random."""
    if mode == "srs":
        return srs_design(n, m, rng)
    if mode == "fsa-kd":
        config = AnnealConfig(m=m, n=n, **anneal_kwargs)
        build = run_fsa_kd if n % 2 == 0 else odd_run_design
        return build(config, rng).design
    raise DomainError(f"unknown initial design mode {mode!r}; expected one of {INIT_MODES}")


def _swap_neighbors(x):
    a, b = pair_index(x.size)
    nbrs = np.repeat(x[None, :], a.size, axis=0)
    rows = np.arange(a.size)
    nbrs[rows, a] = x[b]
    nbrs[rows, b] = x[a]
    return nbrs


def _ei(model, x, best_y):
    mean, var = gp_predict(model, x)
    return ei_from_moments(mean, np.sqrt(var), best_y)


def maximize_ei(model, best_y, evaluated, rng, restarts=10, max_steps=1000):
    """Best unevaluated permutation found by restarted steepest-ascent on EI.

    Each restart starts from a uniform random permutation and moves to the
    best swap neighbor while that strictly raises EI.  If every local optimum
    was already evaluated, the best unevaluated neighbor of the top one is
    returned instead.
    """
    m = model.inputs.shape[1]
    found = []
    for _ in range(restarts):
        x = rng.permutation(m).astype(np.int64)
        value = _ei(model, x, best_y)[0]
        for _ in range(max_steps):
            nbrs = _swap_neighbors(x)
            scores = _ei(model, nbrs, best_y)
            k = int(np.argmax(scores))
            if scores[k] <= value:
                break
            x, value = nbrs[k], scores[k]
        found.append((value, x))
    # stable on ties: earlier restarts win
    found.sort(key=lambda item: -item[0])
    for _, x in found:
        if tuple(x.tolist()) not in evaluated:
            return x
    nbrs = _swap_neighbors(found[0][1])
    scores = _ei(model, nbrs, best_y)
    for k in np.argsort(-scores, kind="stable"):
        if tuple(nbrs[k].tolist()) not in evaluated:
            return nbrs[k]
    while True:
        x = rng.permutation(m).astype(np.int64)
        if tuple(x.tolist()) not in evaluated:
            return x


def run_bo(instance, n_init=20, n_seq=60, init="fsa-kd", restarts=10, rng=None, theta_grid=None, anneal_kwargs=None):
    """Minimize a TSP instance by GP-EI Bayesian optimization.

    Returns the best-so-far curve over all ``n_init + n_seq`` evaluations.
    """
    m = instance.m
    if n_init < 2:
        raise DomainError(f"need at least 2 initial evaluations, got {n_init}")
    if n_seq < 0:
        raise DomainError(f"n_seq must be nonnegative, got {n_seq}")
    if n_init + n_seq > math.factorial(m):
        raise DomainError(f"{n_init + n_seq} distinct evaluations exceed m! = {math.factorial(m)}")
    rng = np.random.default_rng(rng)
    design = initial_design(init, n_init, m, rng, **(anneal_kwargs or {}))
    inputs = [row for row in design]
    outputs = list(tsp_objective_batch(design, instance))
    evaluated = {tuple(row.tolist()) for row in inputs}
    for _ in range(n_seq):
        model = gp_fit(np.array(inputs), np.array(outputs), theta_grid=theta_grid)
        x = maximize_ei(model, min(outputs), evaluated, rng, restarts=restarts)
        inputs.append(x)
        outputs.append(float(tsp_objective_batch(x[None, :], instance)[0]))
        evaluated.add(tuple(x.tolist()))
    y = np.array(outputs)
    return BOResult(np.minimum.accumulate(y), np.array(inputs), y, n_init)
