"""Write configs/synthetic_measurements.json from the closed-form amplitudes."""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from fiveconst.inversion import synthesize, write_measurements
from fiveconst.medium import MaterialPoint


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "configs" / "synthetic_measurements.json")
    ap.add_argument("--count", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    p = MaterialPoint(2.0, 1.0, 0.3, -0.4)
    rng = np.random.default_rng(args.seed)
    ms = [
        synthesize(p, "P+SV->SV", float(a), float(s), (1.0, float(r), 1.0), (1.0, 1.0))
        for a, s, r in zip(rng.uniform(0.2, math.pi - 0.2, args.count), rng.uniform(0.2, math.pi - 0.2, args.count),
                           rng.uniform(0.5, 1.5, args.count))
    ]
    write_measurements(args.out, ms, {"medium": p.as_dict(), "seed": args.seed})
    print(f"wrote {len(ms)} measurements to {args.out}")


if __name__ == "__main__":
    main()
