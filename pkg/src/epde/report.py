"""Plot-ready CSV output.

Every file starts with a ``#`` provenance line (command, package version,
hash of the resolved configuration); numbers carry 17 significant digits,
so a value survives a write/read round trip unchanged.
"""

from __future__ import annotations

import hashlib
import io
import math
from typing import Mapping, TextIO

import numpy as np

__all__ = [
    "fmt",
    "config_hash",
    "provenance_line",
    "write_trajectory",
    "write_states",
    "write_grid",
    "write_convergence",
    "write_mconvergence",
    "write_region",
    "read_csv",
]


def fmt(x) -> str:
    """17 significant digits.

    >>> fmt(0.1)
    '0.10000000000000001'
    >>> fmt(0.5)
    '0.50000000000000000'
    >>> fmt(3)
    '3'
    """
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, "#.17g")


def config_hash(config: Mapping) -> str:
    """Short SHA-256 of the sorted ``key=value`` lines of ``config``."""
    text = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def provenance_line(command: str, config: Mapping) -> str:
    from . import __version__

    return f"# command={command} version={__version__} config={config_hash(config)}"


def _emit(out: TextIO, lines):
    for line in lines:
        out.write(line)
        out.write("\n")


def write_trajectory(out: TextIO, traj, provenance: str):
    _emit(out, [provenance, "t,phi"])
    _emit(out, (f"{fmt(t)},{fmt(p)}" for t, p in zip(traj.times, traj.phi)))


def write_states(out: TextIO, traj, provenance: str):
    if traj.states is None:
        raise ValueError("trajectory holds no collocation states; solve with store_states=True")
    _emit(out, [provenance, "t,theta_index,value"])
    for t, row in zip(traj.times, traj.states):
        _emit(out, (f"{fmt(t)},{j},{fmt(v)}" for j, v in enumerate(row)))


def write_grid(out: TextIO, grid, provenance: str):
    _emit(out, [provenance, "j,theta,weight"])
    _emit(out, (f"{j},{fmt(th)},{fmt(w)}" for j, (th, w) in enumerate(zip(grid.nodes, grid.weights))))


def write_convergence(out: TextIO, table, provenance: str):
    _emit(out, [provenance, "dt,N,error,observed_order"])
    _emit(out, (f"{fmt(r.dt)},{r.N},{fmt(r.error)},{fmt(r.observed_order)}" for r in table.rows))
    _emit(out, [f"# slope={fmt(table.slope)} reference={table.reference} rows_fitted={min(4, len(table.rows))}"])


def write_mconvergence(out: TextIO, table, provenance: str):
    _emit(out, [provenance, "M,error"])
    _emit(out, (f"{m},{fmt(e)}" for m, e in zip(table.Ms, table.errors)))
    _emit(out, [f"# ratio={fmt(table.ratio)} reference={table.reference}"])


def write_region(out: TextIO, field, provenance: str):
    _emit(out, [provenance, "re_sigma,im_sigma,rho,flag"])
    _emit(out, (f"{fmt(x)},{fmt(y)},{fmt(r)},{flag}" for x, y, r, flag in field.rows()))
    flags = field.flags
    _emit(
        out,
        [
            f"# stable={field.stable_count} boundary={int(np.count_nonzero(flags == 'boundary'))} "
            f"undefined={field.nan_count} total={field.rho.size}"
        ],
    )


def read_csv(text_or_file):
    """Parse one of the CSVs above into ``(header, rows, comments)``; numbers as floats."""
    if isinstance(text_or_file, str):
        text_or_file = io.StringIO(text_or_file)
    header, rows, comments = None, [], []
    for line in text_or_file:
        line = line.rstrip("\n")
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        parts = line.split(",")
        if header is None:
            header = parts
            continue
        row = []
        for p in parts:
            try:
                row.append(float(p))
            except ValueError:
                row.append(p)
        rows.append(row)
    return header, rows, comments
