"""Closed-form vs tensor sweep of every non-vanishing case; one CSV per case."""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from fiveconst.medium import MaterialPoint
from fiveconst.symbols import CLOSED_FORMS, sweep_rows, write_sweep_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("sweeps"))
    ap.add_argument("--medium", type=float, nargs=4, default=(1.0, 1.0, 0.5, 0.25), metavar=("LAM", "MU", "A", "B"))
    ap.add_argument("--num", type=int, default=90)
    args = ap.parse_args()
    p = MaterialPoint(*args.medium)
    args.out.mkdir(parents=True, exist_ok=True)
    alphas = np.linspace(0.02, math.pi - 0.02, args.num)
    for case in CLOSED_FORMS:
        rows = sweep_rows(case, p, alphas)
        path = args.out / (case.replace("->", "_to_").replace("+", "_") + ".csv")
        write_sweep_csv(path, rows)
        worst = max((r[-1] for r in rows), default=float("nan"))
        print(f"{case:10s} {len(rows):4d} rows  max rel err {worst:.2e}  -> {path}")


if __name__ == "__main__":
    main()
