"""Wavefield records, snapshot files and the bilinear extraction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .. import io as fio
from ..medium import MediumField
from .core import SimGrid, Solver, Stepper
from .packets import PacketSource, load_packets

SNAPSHOT_FORMAT = "fiveconst-snapshot-1"


class RecordMismatchError(ValueError):
    pass


@dataclass
class WavefieldRecord:
    """Displacement snapshots ``(n_t, 3, n1, n2)`` and run metadata.

    ``metadata`` carries at least ``eps`` (the two source amplitudes),
    ``sources``, ``medium``, ``nonlinearity`` and ``dt``.
    """

    times: np.ndarray
    snapshots: np.ndarray
    spacing: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.snapshots = np.asarray(self.snapshots)
        if self.snapshots.ndim != 4 or self.snapshots.shape[1] != 3:
            raise ValueError("snapshots must have shape (n_t, 3, n1, n2)")
        if len(self.times) != self.snapshots.shape[0]:
            raise ValueError("one time per snapshot required")

    @property
    def dims(self) -> tuple[int, int]:
        return tuple(self.snapshots.shape[2:])

    @property
    def eps(self) -> tuple[float, float]:
        e = self.metadata.get("eps", (0.0, 0.0))
        return float(e[0]), float(e[1])

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[i]

    # -- files ----------------------------------------------------------------

    def save(self, prefix) -> tuple[Path, Path]:
        """Write ``prefix.bin`` (little-endian float64, C order) and ``prefix.json``."""
        prefix = Path(prefix)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        bin_path = prefix.with_suffix(".bin")
        json_path = prefix.with_suffix(".json")
        np.ascontiguousarray(self.snapshots, dtype="<f8").tofile(bin_path)
        side = {
            "format": SNAPSHOT_FORMAT,
            "binary": bin_path.name,
            "dtype": "float64-le",
            "shape": list(self.snapshots.shape),
            "axes": ["time", "component", "x1", "x2"],
            "spacing": self.spacing,
            "times": list(self.times),
            "metadata": self.metadata,
        }
        fio.write_json(json_path, side)
        return bin_path, json_path

    @classmethod
    def load(cls, prefix) -> "WavefieldRecord":
        prefix = Path(prefix)
        json_path = prefix.with_suffix(".json")
        side = json.loads(json_path.read_text())
        if side.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"{json_path} is not a snapshot sidecar")
        data = np.fromfile(json_path.parent / side["binary"], dtype="<f8")
        shape = tuple(side["shape"])
        if data.size != math.prod(shape):
            raise ValueError("snapshot binary size does not match its sidecar")
        return cls(side["times"], data.reshape(shape), float(side["spacing"]), side["metadata"])


def _same(a, b) -> bool:
    return json.dumps(a, sort_keys=True, default=str) == json.dumps(b, sort_keys=True, default=str)


def extract_bilinear_response(run12: WavefieldRecord, run1: WavefieldRecord, run2: WavefieldRecord) -> WavefieldRecord:
    """``u12 = (u[eps1, eps2] - u[eps1, 0] - u[0, eps2]) / (eps1 eps2)``.

    The three runs must share grid, times, medium and nonlinearity, and
    their source amplitudes must be ``(e1, e2)``, ``(e1, 0)``, ``(0, e2)``.
    """
    for r in (run1, run2):
        if r.snapshots.shape != run12.snapshots.shape or r.spacing != run12.spacing:
            raise RecordMismatchError("runs do not share the grid")
        if not np.array_equal(r.times, run12.times):
            raise RecordMismatchError("runs do not share snapshot times")
        for key in ("medium", "nonlinearity", "dt"):
            if not _same(r.metadata.get(key), run12.metadata.get(key)):
                raise RecordMismatchError(f"runs differ in {key}")
    e1, e2 = run12.eps
    if e1 == 0 or e2 == 0:
        raise RecordMismatchError("the combined run needs two non-zero amplitudes")
    if run1.eps != (e1, 0.0) or run2.eps != (0.0, e2):
        raise RecordMismatchError(f"amplitudes {run1.eps}, {run2.eps} do not match {run12.eps}")
    u12 = (run12.snapshots - run1.snapshots - run2.snapshots) / (e1 * e2)
    meta = dict(run12.metadata, kind="bilinear", eps=[e1, e2])
    return WavefieldRecord(run12.times.copy(), u12, run12.spacing, meta)


def snap_times(times: Sequence[float], dt: float) -> list[int]:
    """Step indices nearest to the requested times."""
    steps = sorted({int(round(t / dt)) for t in times})
    if steps and steps[0] < 0:
        raise ValueError("snapshot times must be non-negative")
    return steps


def run_simulation(
    template: SimGrid,
    medium: MediumField,
    sources: Sequence[PacketSource],
    record_times: Sequence[float],
    nonlinearity: str = "full",
    kspace_correction: bool = True,
    forcing: Optional[Callable[[float], np.ndarray]] = None,
    metadata: Optional[dict] = None,
    use_numba: bool = True,
) -> WavefieldRecord:
    """Run one simulation from packet initial data and record snapshots.

    ``sources`` gives the packets in a fixed order; their amplitudes become
    ``metadata["eps"]`` (so pass zero-amplitude packets to keep slots).
    """
    g = SimGrid(template.dims, template.spacing, template.dt, template.duration)
    p0 = medium.at((0.0, 0.0, 0.0)) if medium.is_constant else medium.at(_center(sources, g))
    solver = Solver(g, medium, nonlinearity, kspace_correction, use_numba=use_numba)
    load_packets(g, p0, sources, consistent_start=solver.kspace_correction)
    stepper = Stepper(g, solver, forcing)
    steps = snap_times(record_times, g.dt)
    snaps, times = [], []
    for target in steps:
        while g.step < target:
            stepper.step()
        snaps.append(g.displacement())
        times.append(target * g.dt)
    meta = {
        "eps": [float(s.amplitude) for s in sources],
        "sources": [s.as_dict() for s in sources],
        "medium": getattr(medium, "description", repr(medium)),
        "nonlinearity": nonlinearity,
        "dt": g.dt,
        "dims": list(g.dims),
        "kspace_correction": solver.kspace_correction,
    }
    meta.update(metadata or {})
    return WavefieldRecord(np.array(times), np.array(snaps).reshape(len(snaps), 3, *g.dims), g.spacing, meta)


def _center(sources, g: SimGrid):
    if sources:
        c = np.mean([s.center for s in sources], axis=0)
        return (float(c[0]), float(c[1]), 0.0)
    return (0.0, 0.0, 0.0)
