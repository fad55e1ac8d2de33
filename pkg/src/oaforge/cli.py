"""Command-line interface: ``oaforge {construct, evaluate, bench, bo-demo}``.

Exit codes: 0 success, 1 usage error, 2 infeasible request or unreadable
input, 3 internal error.
"""

import argparse
import logging
import math
import re
import sys
import time

import numpy as np

from . import __version__
from .anneal import AnnealConfig, odd_run_design, ordinary_sa, run_fsa_kd, srs_design
from .bench import METHODS, default_jobs, parse_budget, run_bench, summarize, write_rows
from .bo import INIT_MODES, run_bo
from .exceptions import ConditioningError, ConstructionError, DesignFileError, DimensionError, DomainError, InvalidDesignError
from .io import dump_report, metrics_report, read_design, write_design
from .tsp import TspInstance

log = logging.getLogger("oaforge")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3
CONSTRUCT_METHODS = ("fsa-kd", "srs", "ordinary-sa", "odd")
DEFAULT_INSTANCE_SEED = 2024

_EXPECTED = (ConditioningError, ConstructionError, DesignFileError, DimensionError, DomainError, InvalidDesignError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


_N_TOKEN = re.compile(r"^(\d*)m$|^(\d+)$")


def _n_term(token):
    match = _N_TOKEN.match(token.strip())
    if not match:
        raise argparse.ArgumentTypeError(f"bad run-size term {token!r}; use N, m, or Km")
    if match.group(2) is not None:
        value = int(match.group(2))
        return lambda m: value
    k = int(match.group(1) or 1)
    return lambda m: k * m


def _n_list(text):
    """Run sizes: integers, multiples of ``m`` such as ``2m``, or ranges ``a..b``."""
    out = []
    for token in text.split(","):
        if not token.strip():
            continue
        lo, sep, hi = token.partition("..")
        if sep:
            lo_f, hi_f = _n_term(lo), _n_term(hi)
            out.append(lambda m, lo_f=lo_f, hi_f=hi_f: list(range(lo_f(m), hi_f(m) + 1)))
        else:
            term = _n_term(token)
            out.append(lambda m, term=term: [term(m)])
    return out


def _methods(text):
    names = [tok.strip() for tok in text.split(",") if tok.strip()]
    for name in names:
        if name not in METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    return names


def _fresh_seed():
    return int(np.random.SeedSequence().entropy % 2**32)


def build_parser():
    parser = _Parser(prog="oaforge", description="Maximin Kendall-distance order-of-addition designs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", help="build a design and report its criteria")
    p.add_argument("--m", type=int, required=True, help="number of components")
    p.add_argument("--n", type=int, required=True, help="number of runs")
    p.add_argument("--method", choices=CONSTRUCT_METHODS, default="fsa-kd")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=None, help="default: fresh entropy, echoed in the report")
    p.add_argument("--out", help="design CSV path")
    p.add_argument("--report", help="metrics JSON path (default: stdout)")
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--t-min", type=float, default=1e-8)
    p.add_argument("--alpha", type=float, default=0.997)
    p.add_argument("--max-iter", type=int, default=6000)
    p.add_argument("--update", choices=("incremental", "full"), default="incremental")
    p.add_argument("--timing", action="store_true", help="record elapsed seconds in the report")

    p = sub.add_parser("evaluate", help="report the criteria of a design file")
    p.add_argument("--in", dest="path", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--report", help="metrics JSON path (default: stdout)")

    p = sub.add_parser("bench", help="time the searches on a grid under a fixed budget")
    p.add_argument("--m-list", type=_int_list, default=[6, 8, 10])
    p.add_argument("--n-list", type=_n_list, default=_n_list("m,2m,3m,4m"), help="e.g. 'm,2m,3m,4m' or 'm..4m'")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--budget", default="updates:1200", help="updates:N or seconds:S")
    p.add_argument("--methods", type=_methods, default=["ordinary-sa", "foldover-full", "foldover-incremental"])
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: $OAFORGE_JOBS or 1)")
    p.add_argument("--out", help="per-cell CSV path")
    p.add_argument("--summary", help="per-method summary CSV path")

    p = sub.add_parser("bo-demo", help="Bayesian optimization on a random Euclidean TSP")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--n-init", type=int, default=20)
    p.add_argument("--n-seq", type=int, default=60)
    p.add_argument("--init", choices=INIT_MODES, default="fsa-kd")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instance-seed", type=int, default=DEFAULT_INSTANCE_SEED)
    p.add_argument("--instance", help="cost-matrix CSV; overrides --m and --instance-seed")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", help="trace CSV path (default: stdout)")
    return parser


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_construct(args):
    if args.method == "fsa-kd" and args.n % 2:
        raise UsageError(f"--method fsa-kd needs an even --n (got {args.n}); use --method odd")
    if args.method == "odd" and args.n % 2 == 0:
        raise UsageError(f"--method odd needs an odd --n (got {args.n}); use --method fsa-kd")
    if args.max_iter < 0:
        raise UsageError("--max-iter must be nonnegative")
    seed = _fresh_seed() if args.seed is None else args.seed
    if args.m < 2:
        raise DomainError(f"m must be at least 2, got {args.m}")
    if args.n < 2:
        raise DomainError(f"n must be at least 2, got {args.n}")
    if args.n > math.factorial(args.m):
        raise DomainError(f"{args.n} distinct runs exceed m! = {math.factorial(args.m)}")
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    if args.method == "srs":
        design, updates = srs_design(args.n, args.m, rng), 0
    else:
        config = AnnealConfig(
            m=args.m, n=args.n, t0=args.t0, t_min=args.t_min, alpha=args.alpha, max_iter=args.max_iter, lam=args.lam, seed=seed
        )
        if args.method == "ordinary-sa":
            result = ordinary_sa(config, rng)
        else:
            build = run_fsa_kd if args.method == "fsa-kd" else odd_run_design
            result = build(config, rng, update=args.update)
        design, updates = result.design, result.n_updates
    report = metrics_report(
        design,
        lam=args.lam,
        method=args.method,
        seed=seed,
        elapsed=time.perf_counter() - start if args.timing else None,
        update_count=updates,
    )
    if args.out:
        write_design(args.out, design, {"m": args.m, "n": args.n, "seed": seed, "method": args.method, "lambda": args.lam})
    _emit(dump_report(report), args.report)
    return EXIT_OK


def cmd_evaluate(args):
    design, meta = read_design(args.path)
    if design.shape[0] < 2:
        raise DomainError("a design needs at least 2 runs to evaluate")
    seed = meta.get("seed")
    report = metrics_report(
        design,
        lam=args.lam,
        method=meta.get("method"),
        seed=int(seed) if seed is not None and seed.lstrip("-").isdigit() else seed,
    )
    _emit(dump_report(report), args.report)
    return EXIT_OK


def cmd_bench(args):
    budget = parse_budget(args.budget)
    if args.reps < 1:
        raise UsageError("--reps must be positive")
    jobs = args.jobs if args.jobs is not None else default_jobs()
    rows = []
    for m in args.m_list:
        ns = sorted({n for f in args.n_list for n in f(m)})
        rows.extend(run_bench([m], ns, args.methods, args.reps, budget, seed=args.seed, lam=args.lam, jobs=jobs))
    if args.out:
        write_rows(args.out, rows)
    summary = summarize(rows)
    if args.summary:
        write_rows(args.summary, summary)
    print(f"budget {budget}, {len(rows)} cells")
    print(f"{'method':<22}{'cells':>6}{'time (s)':>12}{'updates':>10}{'k_min':>8}{'k_m2':>10}{'phi':>8}")
    for s in summary:
        print(
            f"{s['method']:<22}{s['cells']:>6}{s['mean_elapsed']:>12.4f}{s['mean_updates']:>10.1f}"
            f"{s['mean_k_min']:>8.2f}{s['mean_k_m2']:>10.2f}{s['mean_phi']:>8.3f}"
        )
    return EXIT_OK


def _bo_rep(args):
    instance, n_init, n_seq, init, restarts, seed, rep = args
    rng = np.random.default_rng(np.random.SeedSequence([seed, rep]))
    return run_bo(instance, n_init, n_seq, init=init, restarts=restarts, rng=rng).best_so_far


def cmd_bo_demo(args):
    if args.reps < 1:
        raise UsageError("--reps must be positive")
    if args.instance:
        instance = TspInstance.from_csv(args.instance)
    else:
        if args.m < 3:
            raise DomainError(f"m must be at least 3, got {args.m}")
        instance = TspInstance.random_euclidean(args.m, np.random.default_rng(args.instance_seed))
    jobs = args.jobs if args.jobs is not None else default_jobs()
    tasks = [(instance, args.n_init, args.n_seq, args.init, args.restarts, args.seed, rep) for rep in range(args.reps)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_bo_rep, tasks))
    else:
        traces = [_bo_rep(t) for t in tasks]
    lines = ["rep,iteration,best_so_far"]
    for rep, trace in enumerate(traces):
        lines += [f"{rep},{i + 1},{float(v)!r}" for i, v in enumerate(trace)]
    _emit("\n".join(lines) + "\n", args.out)
    mean = np.mean(traces, axis=0)
    marks = sorted({args.n_init, min(args.n_init + 10, mean.size), mean.size})
    out = sys.stderr if args.out is None else sys.stdout
    print(f"mean best-so-far over {args.reps} reps ({args.init} init):", file=out)
    for k in marks:
        print(f"  evaluation {k:>4}: {mean[k - 1]:.6f}", file=out)
    return EXIT_OK


def _configure_logging(verbose):
    # one handler on the package logger, bound to the current stderr
    for handler in list(log.handlers):
        if getattr(handler, "_oaforge", False):
            log.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler._oaforge = True
    handler.setFormatter(logging.Formatter("oaforge: %(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.DEBUG if verbose else logging.WARNING)


COMMANDS = {"construct": cmd_construct, "evaluate": cmd_evaluate, "bench": cmd_bench, "bo-demo": cmd_bo_demo}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"oaforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _EXPECTED as exc:
        print(f"oaforge: error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"oaforge: error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # pragma: no cover - reported, not swallowed silently
        log.debug("internal error", exc_info=True)
        print(f"oaforge: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
