"""Design files (CSV) and metrics reports (JSON)."""

import json
import logging
from fractions import Fraction
from pathlib import Path

import numpy as np

from .criteria import bounds as foldover_bounds, evaluate
from .exceptions import DesignFileError
from .foldover import is_foldover_design

log = logging.getLogger(__name__)

__all__ = [
    "format_design",
    "parse_design",
    "read_design",
    "write_design",
    "rational",
    "metrics_report",
    "dump_report",
]


def format_design(design, metadata=None):
    """CSV text: ``# key=value`` metadata lines, then one run per line."""
    lines = [f"# {k}={v}" for k, v in (metadata or {}).items() if v is not None]
    lines += [",".join(str(int(c)) for c in row) for row in np.asarray(design)]
    return "\n".join(lines) + "\n"


def parse_design(text):
    """Parse design CSV text into ``(design, metadata)``.

    Raises
    ------
    DesignFileError
        On a malformed line, a row that is not a permutation of
        ``0..m-1``, or rows of different lengths.  The error carries the
        offending line number.
    """
    rows, metadata, m = [], {}, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                metadata[key.strip()] = value.strip()
            continue
        try:
            row = [int(tok) for tok in line.split(",")]
        except ValueError:
            raise DesignFileError(f"non-integer label in {line!r}", lineno) from None
        if m is None:
            m = len(row)
        elif len(row) != m:
            raise DesignFileError(f"expected {m} labels, got {len(row)}", lineno)
        if sorted(row) != list(range(m)):
            raise DesignFileError(f"{line!r} is not a permutation of 0..{m - 1}", lineno)
        rows.append(row)
    if not rows:
        raise DesignFileError("no runs in design file")
    if "m" in metadata and metadata["m"] != str(m):
        raise DesignFileError(f"metadata says m={metadata['m']} but runs have {m} labels")
    if "n" in metadata and metadata["n"] != str(len(rows)):
        raise DesignFileError(f"metadata says n={metadata['n']} but the file has {len(rows)} runs")
    return np.array(rows, dtype=np.int64), metadata


def read_design(path):
    return parse_design(Path(path).read_text())


def write_design(path, design, metadata=None):
    Path(path).write_text(format_design(design, metadata))


def rational(value):
    """Exact ``"p/q"`` string (or ``"p"``) plus a decimal rendering."""
    value = Fraction(value)
    return {"exact": str(value), "decimal": float(value)}


def metrics_report(design, *, lam=0.5, method=None, seed=None, elapsed=None, update_count=None):
    """Structured metrics of a design, ready for JSON serialization.

    Bounds and ``phi`` need an even ``n >= 4`` and ``m >= 3``; otherwise they
    are reported as ``null``.
    """
    design = np.asarray(design)
    n, m = design.shape
    summary = evaluate(design, lam)
    if summary.k_min == 0:
        log.warning("design has duplicate runs (k_min = 0)")
    bounds = None
    if n % 2 == 0 and n >= 4 and m >= 3:
        b = foldover_bounds(n, m)
        bounds = {
            "B1": b.b1,
            "L2": rational(b.l2),
            "U2": rational(b.u2),
            "kave_bench": rational(b.kave_bench),
        }
    return {
        "m": m,
        "n": n,
        "method": method,
        "seed": seed,
        "lambda": lam,
        "k_min": summary.k_min,
        "k_ave": rational(summary.k_ave),
        "k_m2": rational(summary.k_m2),
        "c1": rational(summary.c1),
        "c2": rational(summary.c2),
        "tr_m2": rational(summary.tr_m2),
        "phi": summary.phi,
        "bounds": bounds,
        "foldover": bool(is_foldover_design(design)),
        "elapsed_seconds": elapsed,
        "update_count": update_count,
    }


def dump_report(report, path=None):
    """Serialize with sorted keys so equal reports give equal bytes."""
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
