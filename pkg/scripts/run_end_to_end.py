"""Run the four end-to-end experiments and recover (A, B) from their reports."""

from __future__ import annotations

import argparse
from pathlib import Path

from fiveconst import io as fio
from fiveconst.cli import load_config
from fiveconst.inversion import end_to_end_recovery
from fiveconst.simulator import ExperimentConfig, run_interaction_experiment

ROOT = Path(__file__).resolve().parents[1]
NAMES = ("pp_sh_40", "pp_sh_130", "p_sv_sv_60", "p_sv_sv_140")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=ROOT / "e2e-out")
    ap.add_argument("--n", type=int, default=None, help="override the grid size")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    reports = []
    for name in NAMES:
        cfg = load_config(ROOT / "configs" / "e2e" / f"{name}.yaml")
        if args.n:
            cfg["grid"]["n"] = [args.n, args.n]
        rep = run_interaction_experiment(ExperimentConfig.from_dict(cfg), workers=args.workers)
        rep.write(args.out, stem=f"{name}_report")
        print(f"{name}: measured {rep.measured_symbol:.5g} predicted {rep.predicted_symbol:.5g} "
              f"({100 * rep.relative_error:.2f}%)")
        reports.append(rep)
    res = end_to_end_recovery(reports)
    fio.write_json(args.out / "recovery.json", res.as_dict())
    truth = reports[0].medium
    for k in ("A", "B"):
        got = getattr(res, k)
        print(f"{k}: recovered {got:.6g}, true {truth[k]:.6g}, error {100 * abs(got - truth[k]) / abs(truth[k]):.2f}%")


if __name__ == "__main__":
    main()
