"""Atomic, bit-reproducible writers for trajectories, grids, and reports.

All numeric output uses 17 significant digits (round-trip exact for
doubles), '.' as the decimal separator, and LF line endings. Files are
written to a temporary sibling and renamed into place so interrupted runs
never leave truncated output behind.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

__all__ = [
    "fmt",
    "atomic_write_text",
    "write_json",
    "write_csv_rows",
    "write_trajectory_csv",
    "write_grid_csv",
]


def fmt(value: float) -> str:
    return format(value, ".17g")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f".{path.name}.{os.getpid()}.tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_csv_rows(path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_trajectory_csv(traj, path) -> None:
    from .simulator import TRAJECTORY_COLUMNS

    columns = [traj.column(name) for name in TRAJECTORY_COLUMNS]
    int_cols = {TRAJECTORY_COLUMNS.index("p"), TRAJECTORY_COLUMNS.index("q")}

    def rows():
        for k in range(len(traj)):
            yield [
                str(int(col[k])) if i in int_cols else fmt(col[k])
                for i, col in enumerate(columns)
            ]

    write_csv_rows(path, TRAJECTORY_COLUMNS, rows())


def write_grid_csv(grid, path) -> None:
    header = ("e", "edot", "admissible", "delta_L", "sign")

    def rows():
        for e, edot, admissible, value, sign in grid.rows():
            yield (fmt(e), fmt(edot), str(admissible), fmt(value), str(sign))

    write_csv_rows(path, header, rows())
