"""Command-line front end: ``fiveconst <subcommand> [config.yaml] [options]``.

Configs are YAML (or JSON) mappings; ``--set key=value`` overrides single
entries (dotted keys reach into nested mappings, values are parsed as
YAML). Outputs go to ``--out``, else ``$FIVECONST_OUTPUT_DIR``, else
``./fiveconst-out``. Exit codes: 0 success, 2 validation error, 3 numeric
failure, 4 I/O error; failures print a JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import yaml

from . import io as fio
from .inversion import (
    DegenerateSystemError,
    Measurement,
    TravelTime,
    c_identifiability_report,
    end_to_end_recovery,
    read_measurements,
    recover_AB,
    recover_AB_alt,
    recover_lame,
)
from .kinematics import RayTracingError, classify_boundary, forward_covector, trace_ray
from .medium import MaterialPoint, medium_from_dict, wave_speeds
from .resonance import make_config, results_to_json, solve_all
from .simulator import BlowUpError, ExperimentConfig, SimulationError, plan_experiment, run_interaction_experiment
from .symbols import CASE_SPEC, render_table, sweep_rows, write_sweep_csv

OUTPUT_ENV = "FIVECONST_OUTPUT_DIR"
DEFAULT_OUTPUT = "fiveconst-out"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("fiveconst")


class ConfigError(ValueError):
    pass


# -- config handling ------------------------------------------------------------------


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def apply_overrides(cfg: dict, items) -> dict:
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not key=value")
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-mapping")
        node[parts[-1]] = yaml.safe_load(raw)
    return cfg


def _point(cfg: dict) -> MaterialPoint:
    med = cfg.get("medium")
    if not isinstance(med, dict):
        raise ConfigError("config needs a 'medium' mapping with lam, mu (and optionally A, B, C)")
    try:
        return MaterialPoint(**{k: float(v) for k, v in med.items()})
    except TypeError as exc:
        raise ConfigError(f"bad medium keys: {exc}") from exc


def _vector(cfg: dict, key: str, n: int = 3) -> np.ndarray:
    if key not in cfg:
        raise ConfigError(f"missing '{key}'")
    v = np.asarray(cfg[key], float).reshape(-1)
    if v.size == 2 and n == 3:
        v = np.append(v, 0.0)
    if v.size != n:
        raise ConfigError(f"'{key}' must have {n} components")
    return v


def _angles(spec) -> list[float]:
    """Degrees as a list or ``{start, stop, num}``; returns radians."""
    if isinstance(spec, dict):
        vals = np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    else:
        vals = np.atleast_1d(np.asarray(spec, float))
    return [math.radians(v) for v in vals]


class Context:
    def __init__(self, args):
        self.args = args
        self.out = Path(args.out or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
        self.dry_run = args.dry_run
        self.workers = max(1, args.workers)

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def plan(self, obj) -> None:
        sys.stdout.write(fio.dumps({"dry_run": True, "plan": obj}))


# -- subcommands ------------------------------------------------------------------------


def cmd_speeds(cfg: dict, ctx: Context) -> None:
    p = _point(cfg)
    cp, cs = wave_speeds(p)
    if ctx.dry_run:
        return ctx.plan({"medium": p.as_dict()})
    print(f"c_P={fio.fmt_float(cp)} c_S={fio.fmt_float(cs)}")
    fio.write_json(ctx.path("speeds.json"), {"medium": p.as_dict(), "c_P": cp, "c_S": cs})


def cmd_classify(cfg: dict, ctx: Context) -> None:
    p = _point(cfg)
    tau = float(cfg.get("tau", math.nan))
    if not math.isfinite(tau):
        raise ConfigError("missing 'tau'")
    xi, nu = _vector(cfg, "xi"), _vector(cfg, "normal")
    if ctx.dry_run:
        return ctx.plan({"medium": p.as_dict(), "tau": tau, "xi": xi, "normal": nu})
    bc = classify_boundary(tau, xi, nu, p)
    for mode in ("P", "S"):
        print(f"{mode} {bc.tag[mode]}")
    fio.write_json(
        ctx.path("classify.json"),
        {"tag": bc.tag, "root": bc.root, "covector": {k: v for k, v in bc.covector.items()},
         "discriminant": bc.discriminant},
    )


def cmd_trace(cfg: dict, ctx: Context) -> None:
    med_cfg = cfg.get("medium")
    if not isinstance(med_cfg, dict):
        raise ConfigError("config needs a 'medium' mapping")
    base = Path(ctx.args.config).parent if ctx.args.config else Path(".")
    med = medium_from_dict(med_cfg, base)
    mode = cfg.get("mode", "P")
    x0, xi = _vector(cfg, "x0"), _vector(cfg, "xi")
    t_end = float(cfg.get("t_end", 1.0))
    domain = cfg.get("domain")
    if ctx.dry_run:
        return ctx.plan({"medium": getattr(med, "description", "field"), "mode": mode, "x0": x0, "xi": xi,
                         "t_end": t_end})
    start = forward_covector(xi, med.at(x0), mode, t=0.0, x=x0)
    ray = trace_ray(start, med, (0.0, t_end), n_samples=int(cfg.get("n_samples", 101)),
                    domain=tuple(domain) if domain else None)
    ray.to_csv(ctx.path("ray.csv"))
    print(f"ray: {len(ray.t)} samples, end x = {ray.x[-1].tolist()}, max residual {ray.max_residual:.3e}")


def cmd_resonance(cfg: dict, ctx: Context) -> None:
    p = _point(cfg)
    modes = cfg.get("modes", ["P", "P"])
    xi1, xi2 = _vector(cfg, "xi1"), _vector(cfg, "xi2")
    if ctx.dry_run:
        return ctx.plan({"medium": p.as_dict(), "modes": modes, "xi1": xi1, "xi2": xi2})
    results = solve_all(make_config(p, xi1, xi2, modes), p)
    text = results_to_json(results)
    ctx.path("resonance.json").write_text(text)
    for res in results:
        for rec in res.records():
            root = rec.get("root")
            print(f"{rec['case']} {rec['status']}" + (f" b={fio.fmt_float(root)}" if root is not None else ""))


def cmd_symbol(cfg: dict, ctx: Context) -> None:
    p = _point(cfg)
    case = cfg.get("case", "PP->SH")
    if case not in CASE_SPEC:
        raise ConfigError(f"unknown case {case!r}")
    alphas = _angles(cfg.get("alpha_deg", {"start": 10, "stop": 170, "num": 17}))
    psis = _angles(cfg["psi_deg"]) if "psi_deg" in cfg else None
    amps = [complex(a) for a in cfg.get("amplitudes", [1.0, 1.0])]
    if ctx.dry_run:
        return ctx.plan({"case": case, "alphas": len(alphas), "psis": None if psis is None else len(psis)})
    rows = sweep_rows(case, p, alphas, psis, amps)
    write_sweep_csv(ctx.path(cfg.get("output", "symbol_sweep.csv")), rows)
    worst = max((r[-1] for r in rows), default=0.0)
    print(f"{case}: {len(rows)} rows, max closed-form/tensor relative error {worst:.3e}")


def cmd_table(cfg: dict, ctx: Context) -> None:
    p = _point(cfg)
    if ctx.dry_run:
        return ctx.plan({"medium": p.as_dict()})
    text = render_table(p)
    print(text)
    ctx.path("table.txt").write_text(text + "\n")


def cmd_simulate(cfg: dict, ctx: Context) -> None:
    ecfg = ExperimentConfig.from_dict(cfg)
    plan = plan_experiment(ecfg)
    if ctx.dry_run:
        return ctx.plan(plan.describe())
    log.info("running %s", ecfg.name)
    save = ctx.out / "snapshots" if cfg.get("save_snapshots") else None
    rep = run_interaction_experiment(ecfg, workers=ctx.workers, save_dir=save)
    rep.write(ctx.out, stem=f"{ecfg.name}_report")
    print(
        f"{rep.case}: measured {rep.measured_symbol:.6g}, predicted {rep.predicted_symbol:.6g}, "
        f"relative error {rep.relative_error:.3e}, detection {rep.detection_db:.1f} dB"
    )


def _lame(cfg: dict) -> tuple[float, float]:
    if "travel_times" in cfg:
        tts = [TravelTime(t["start"], t["end"], t["mode"], float(t["time"])) for t in cfg["travel_times"]]
        return recover_lame(tts)
    if "lam" in cfg and "mu" in cfg:
        return float(cfg["lam"]), float(cfg["mu"])
    raise ConfigError("invert needs 'travel_times' or both 'lam' and 'mu'")


def cmd_invert(cfg: dict, ctx: Context) -> None:
    base = Path(ctx.args.config).parent if ctx.args.config else Path(".")
    reports = cfg.get("reports")
    if ctx.dry_run:
        return ctx.plan({k: v for k, v in cfg.items() if k != "measurements"})
    if reports:
        reps = [fio.read_json(base / r) for r in reports]
        lam_mu = _lame(cfg) if ("travel_times" in cfg or "lam" in cfg) else (None, None)
        res = end_to_end_recovery(reps, *lam_mu)
    else:
        lam, mu = _lame(cfg)
        src = cfg.get("measurements")
        if src is None:
            raise ConfigError("invert needs 'measurements' (file or list) or 'reports'")
        ms = read_measurements(base / src) if isinstance(src, str) else [Measurement.from_dict(m) for m in src]
        method = cfg.get("method", "auto")
        if method == "auto":
            method = "sv" if all(m.case == "P+SV->SV" for m in ms) else "mixed"
        if method not in ("sv", "mixed"):
            raise ConfigError("method must be auto, sv or mixed")
        res = (recover_AB if method == "sv" else recover_AB_alt)(ms, lam, mu)
    out = res.as_dict()
    if cfg.get("c_report"):
        out["c_identifiability"] = c_identifiability_report(res.point, cfg.get("c_perturbations", [10.0]),
                                                            n_configs=int(cfg.get("c_configs", 20)))
    fio.write_json(ctx.path("recovery.json"), out)
    print(f"lam={fio.fmt_float(res.lam)} mu={fio.fmt_float(res.mu)} A={fio.fmt_float(res.A)} "
          f"B={fio.fmt_float(res.B)} determinant={res.determinant:.6g}")


COMMANDS: dict[str, tuple[Callable, str]] = {
    "speeds": (cmd_speeds, "P and S wave speeds of a material point"),
    "classify": (cmd_classify, "classify a boundary covector per mode"),
    "trace": (cmd_trace, "trace a ray and write it as CSV"),
    "resonance": (cmd_resonance, "resonance roots for two incoming covectors"),
    "symbol": (cmd_symbol, "angle sweep of an interaction symbol"),
    "table": (cmd_table, "classification table of all interactions"),
    "simulate": (cmd_simulate, "run a packet interaction experiment"),
    "invert": (cmd_invert, "recover (lam, mu, A, B) from measurements or reports"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fiveconst", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", nargs="?", help="YAML or JSON config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
        sp.add_argument("--dry-run", action="store_true", help="validate and print the plan only")
        sp.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    return parser


def _classify_error(exc: BaseException) -> int:
    if isinstance(exc, (BlowUpError, DegenerateSystemError, RayTracingError, SimulationError, FloatingPointError)):
        return EXIT_NUMERIC
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, (ValueError, KeyError, TypeError)):
        return EXIT_VALIDATION
    raise exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg = apply_overrides(load_config(args.config), args.set)
        func(cfg, Context(args))
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = _classify_error(exc)
        record = {"error": type(exc).__name__, "message": str(exc), "command": args.command, "exit_code": code}
        sys.stderr.write(json.dumps(record) + "\n")
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
