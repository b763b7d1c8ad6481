"""Fixed-width study tables from solver CSV rows.

The solver writes one row per (case, mesh) run with full float precision;
this module renders the conventional effectivity-table layout: element
count, true error, effectivity, and the three error contributions, at
two significant digits.
"""

from __future__ import annotations

import csv
import sys

COLUMNS = [
    ("# Elements", "n_elements", "d"),
    ("Error", "true_error", "e"),
    ("Eff", "eff", "f"),
    ("E_mom", "e_mom", "e"),
    ("E_con", "e_con", "e"),
    ("E_M", "e_mag", "e"),
]
_WIDTHS = {"d": 10, "e": 10, "f": 6}


def read_study(path):
    """CSV rows as dicts with floats parsed and blanks as None."""
    with open(path, newline="") as fh:
        rows = []
        for raw in csv.DictReader(fh):
            row = dict(raw)
            for key, val in raw.items():
                if key in ("case", "space", "status"):
                    continue
                if val is None or val == "":
                    row[key] = None
                elif key in ("n", "n_elements", "newton_iters"):
                    row[key] = int(val)
                else:
                    row[key] = float(val)
            rows.append(row)
    return rows


def _cell(row, key, kind):
    width = _WIDTHS[kind]
    val = row.get(key)
    if val is None:
        return "---".rjust(width)
    if kind == "d":
        return f"{val:{width}d}"
    if kind == "f":
        return f"{val:{width}.2f}"
    return f"{val:{width}.2e}"


def render_table(rows, stream=None) -> str:
    """Fixed-width table; failed rows keep their element count and say so."""
    stream = stream if stream is not None else sys.stderr
    header = "  ".join(name.rjust(_WIDTHS[kind])
                       for name, _, kind in COLUMNS)
    lines = [header]
    if not rows:
        print("warning: study file has no rows", file=stream)
        return header + "\n"
    for row in sorted(rows, key=lambda r: (r.get("n_elements") or 0)):
        if row.get("status", "ok") != "ok":
            cells = [_cell(row, "n_elements", "d"),
                     f"FAILED ({row['status']})"]
            lines.append("  ".join(cells))
            continue
        lines.append("  ".join(_cell(row, key, kind)
                               for _, key, kind in COLUMNS))
    return "\n".join(lines) + "\n"
