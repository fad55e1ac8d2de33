"""Budget-fair benchmark harness for the annealing searches.

Every cell ``(m, n, method, rep)`` owns a generator seeded from
``(seed, m, n, rep)``, so the methods see matched seeds and results do not
depend on the worker count or completion order.
"""

import csv
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .anneal import AnnealConfig, odd_run_design, ordinary_sa, run_fsa_kd, srs_design
from .criteria import evaluate
from .exceptions import DomainError

__all__ = ["Budget", "BenchRow", "METHODS", "parse_budget", "run_cell", "run_bench", "summarize", "write_rows", "default_jobs"]

METHODS = ("ordinary-sa", "foldover-full", "foldover-incremental", "srs")


@dataclass(frozen=True)
class Budget:
    """Either an update count or a wall-clock limit in seconds."""

    kind: str
    value: float

    def __str__(self):
        value = int(self.value) if self.kind == "updates" else self.value
        return f"{self.kind}:{value}"


def parse_budget(text):
    """Parse ``updates:N`` or ``seconds:S``."""
    kind, sep, value = text.partition(":")
    if not sep or kind not in ("updates", "seconds"):
        raise DomainError(f"budget must look like updates:N or seconds:S, got {text!r}")
    try:
        number = int(value) if kind == "updates" else float(value)
    except ValueError:
        raise DomainError(f"bad budget value {value!r}") from None
    if number <= 0 or not math.isfinite(number):
        raise DomainError(f"budget must be positive, got {text!r}")
    return Budget(kind, number)


@dataclass
class BenchRow:
    m: int
    n: int
    method: str
    rep: int
    elapsed: float
    updates: int
    k_min: int
    k_m2: float
    phi: float


def _cell_seed(seed, m, n, rep):
    return np.random.SeedSequence([seed, m, n, rep])


def run_cell(m, n, method, rep, budget, seed=0, lam=0.5):
    """Run one benchmark cell and time it end to end.

    The clock covers initialization, the search, building the final design
    and evaluating its criteria.
    """
    rng = np.random.default_rng(_cell_seed(seed, m, n, rep))
    if budget.kind == "updates":
        config, limit = AnnealConfig(m=m, n=n, lam=lam, max_iter=int(budget.value)), None
    else:
        config, limit = AnnealConfig(m=m, n=n, lam=lam, max_iter=None), budget.value
    start = time.perf_counter()
    if method == "srs":
        design, updates = srs_design(n, m, rng), 0
        summary = evaluate(design, lam)
    else:
        if method == "ordinary-sa":
            result = ordinary_sa(config, rng, time_limit=limit)
        elif method in ("foldover-full", "foldover-incremental"):
            update = "full" if method == "foldover-full" else "incremental"
            build = run_fsa_kd if n % 2 == 0 else odd_run_design
            result = build(config, rng, update=update, time_limit=limit)
        else:
            raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
        summary, updates = result.summary, result.n_updates
    elapsed = time.perf_counter() - start
    phi = math.nan if summary.phi is None else summary.phi
    return BenchRow(m, n, method, rep, elapsed, updates, summary.k_min, float(summary.k_m2), phi)


def _run_cell_args(args):
    return run_cell(*args)


def default_jobs():
    """Worker count from ``OAFORGE_JOBS``, else 1."""
    raw = os.environ.get("OAFORGE_JOBS", "1")
    try:
        jobs = int(raw)
    except ValueError:
        raise DomainError(f"OAFORGE_JOBS must be an integer, got {raw!r}") from None
    return max(jobs, 1)


def run_bench(m_list, n_list, methods, reps, budget, seed=0, lam=0.5, jobs=1):
    """All cells of the grid, sorted by ``(m, n, method, rep)``.

    ``n_list`` entries may be callables of ``m`` so grids like ``n in
    {m, ..., 4m}`` can be expressed.
    """
    for method in methods:
        if method not in METHODS:
            raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
    cells = []
    for m in m_list:
        ns = sorted({int(n(m)) if callable(n) else int(n) for n in n_list})
        for n in ns:
            for method in methods:
                cells.extend((m, n, method, rep, budget, seed, lam) for rep in range(reps))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell_args, cells))
    else:
        rows = [run_cell(*cell) for cell in cells]
    order = {name: i for i, name in enumerate(METHODS)}
    return sorted(rows, key=lambda r: (r.m, r.n, order[r.method], r.rep))


def summarize(rows):
    """Per-method means of time, updates, ``k_min``, ``k_m2`` and ``phi``."""
    out = []
    for method in METHODS:
        sel = [r for r in rows if r.method == method]
        if not sel:
            continue
        phis = [r.phi for r in sel if not math.isnan(r.phi)]
        out.append(
            {
                "method": method,
                "cells": len(sel),
                "mean_elapsed": statistics.fmean(r.elapsed for r in sel),
                "mean_updates": statistics.fmean(r.updates for r in sel),
                "mean_k_min": statistics.fmean(r.k_min for r in sel),
                "mean_k_m2": statistics.fmean(r.k_m2 for r in sel),
                "mean_phi": statistics.fmean(phis) if phis else math.nan,
            }
        )
    return out


def write_rows(path, rows, fields=None):
    """Write dataclass rows or dicts as CSV."""
    dicts = [asdict(r) if not isinstance(r, dict) else r for r in rows]
    fields = fields or (list(dicts[0]) if dicts else [f for f in BenchRow.__dataclass_fields__])
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(dicts)
