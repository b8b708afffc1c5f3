"""Elastic material model for the five-constant (Landau) nonlinear medium.

Density is fixed to 1 throughout; there is no density field. Parameters are
time independent. A medium is one of

* :class:`ConstantMedium` -- homogeneous, enables closed-form oracles;
* :class:`ExpressionMedium` -- each parameter is a closed-form expression of
  ``x1, x2, x3`` (parsed with sympy, derivatives are exact);
* :class:`GridMedium` -- five channels on a regular 2-D or 3-D grid,
  interpolated with tensor-product cubic splines.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import sympy as sp
from scipy.interpolate import NdBSpline, make_interp_spline

CHANNELS = ("lam", "mu", "A", "B", "C")
GRID_MAGIC = b"FCGRID01"


class MediumError(ValueError):
    """Raised when material parameters violate mu > 0, lam + mu > 0."""


@dataclass(frozen=True)
class MaterialPoint:
    """The five elastic parameters at one spatial point (density 1)."""

    lam: float
    mu: float
    A: float = 0.0
    B: float = 0.0
    C: float = 0.0

    def __post_init__(self) -> None:
        problems = point_violations(self.lam, self.mu)
        if problems:
            raise MediumError("; ".join(problems))

    @property
    def c_p(self) -> float:
        return math.sqrt(self.lam + 2.0 * self.mu)

    @property
    def c_s(self) -> float:
        return math.sqrt(self.mu)

    def speed(self, mode: str) -> float:
        """Wave speed of mode ``"P"`` or ``"S"`` (any S polarization)."""
        return self.c_p if mode.upper() == "P" else self.c_s

    def replace(self, **changes: float) -> "MaterialPoint":
        values = {name: getattr(self, name) for name in CHANNELS}
        values.update(changes)
        return MaterialPoint(**values)

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in CHANNELS}


def point_violations(lam: float, mu: float) -> list[str]:
    out = []
    if not np.isfinite(lam) or not np.isfinite(mu):
        out.append(f"non-finite parameters lam={lam}, mu={mu}")
        return out
    if mu <= 0:
        out.append(f"mu={mu} must be > 0")
    if lam + mu <= 0:
        out.append(f"lam + mu = {lam + mu} must be > 0")
    return out


def wave_speeds(p: MaterialPoint) -> tuple[float, float]:
    """Return ``(c_P, c_S) = (sqrt(lam + 2 mu), sqrt(mu))``."""
    if point_violations(p.lam, p.mu):
        raise MediumError("; ".join(point_violations(p.lam, p.mu)))
    return p.c_p, p.c_s


def _as_positions(x) -> np.ndarray:
    """Promote positions to shape (n, 3); 2-D input gets x3 = 0."""
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    if arr.shape[-1] not in (2, 3):
        raise ValueError(f"positions must have 2 or 3 coordinates, got {arr.shape}")
    if arr.shape[-1] == 2:
        arr = np.concatenate([arr, np.zeros(arr.shape[:-1] + (1,))], axis=-1)
    return arr


class MediumField:
    """Base class: immutable map from position to five parameters."""

    is_constant = False
    description = "medium"

    def values(self, x) -> np.ndarray:
        """Raw (unvalidated) parameters, shape (5, n) for n positions."""
        raise NotImplementedError

    def gradients(self, x) -> np.ndarray:
        """Spatial gradients of the parameters, shape (5, n, 3)."""
        raise NotImplementedError

    def at(self, x) -> MaterialPoint:
        """Validated material at a single position."""
        vals = self.values(x)[:, 0]
        return MaterialPoint(*map(float, vals))

    def speed_squared(self, x, mode: str) -> np.ndarray:
        lam, mu = self.values(x)[:2]
        return lam + 2 * mu if mode.upper() == "P" else mu

    def speed_squared_grad(self, x, mode: str) -> np.ndarray:
        g = self.gradients(x)
        return g[0] + 2 * g[1] if mode.upper() == "P" else g[1]

    def sample_grid(self, *axes: np.ndarray) -> np.ndarray:
        """Sample on the tensor grid spanned by ``axes``; shape (5, *dims)."""
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        vals = self.values(pts)
        return vals.reshape((5,) + mesh[0].shape)


@dataclass(frozen=True)
class ConstantMedium(MediumField):
    point: MaterialPoint
    is_constant = True

    @property
    def description(self) -> str:
        return "constant " + ", ".join(f"{k}={v:g}" for k, v in self.point.as_dict().items())

    def values(self, x) -> np.ndarray:
        n = _as_positions(x).shape[0]
        vec = np.array([getattr(self.point, c) for c in CHANNELS], dtype=float)
        return np.repeat(vec[:, None], n, axis=1)

    def gradients(self, x) -> np.ndarray:
        n = _as_positions(x).shape[0]
        return np.zeros((5, n, 3))

    def at(self, x=None) -> MaterialPoint:
        return self.point


_X = sp.symbols("x1 x2 x3", real=True)


class ExpressionMedium(MediumField):
    """Parameters given as closed-form expressions in ``x1, x2, x3``."""

    def __init__(self, exprs: Mapping[str, str | float]):
        missing = [c for c in ("lam", "mu") if c not in exprs]
        if missing:
            raise ValueError(f"expression medium needs {missing}")
        self._src = {c: exprs.get(c, 0.0) for c in CHANNELS}
        parsed = [sp.sympify(self._src[c], locals=dict(zip(("x1", "x2", "x3"), _X))) for c in CHANNELS]
        unknown = set().union(*(e.free_symbols for e in parsed)) - set(_X)
        if unknown:
            raise ValueError(f"unknown symbols in medium expressions: {sorted(map(str, unknown))}")
        self.is_constant = all(e.is_number for e in parsed)
        self._f = [sp.lambdify(_X, e, "numpy") for e in parsed]
        self._df = [[sp.lambdify(_X, sp.diff(e, xi), "numpy") for xi in _X] for e in parsed]

    @property
    def description(self) -> str:
        return "expression " + ", ".join(f"{k}={v}" for k, v in self._src.items())

    def values(self, x) -> np.ndarray:
        p = _as_positions(x)
        cols = (p[:, 0], p[:, 1], p[:, 2])
        return np.stack([np.broadcast_to(np.asarray(f(*cols), float), p.shape[:1]) for f in self._f])

    def gradients(self, x) -> np.ndarray:
        p = _as_positions(x)
        cols = (p[:, 0], p[:, 1], p[:, 2])
        out = np.empty((5, p.shape[0], 3))
        for i, row in enumerate(self._df):
            for j, f in enumerate(row):
                out[i, :, j] = np.broadcast_to(np.asarray(f(*cols), float), p.shape[:1])
        return out


def _cubic_tensor_spline(axes: Sequence[np.ndarray], data: np.ndarray) -> NdBSpline:
    """Not-a-knot cubic interpolant on a rectilinear grid (separable solves)."""
    coef = np.asarray(data, float)
    knots = []
    for ax, xs in enumerate(axes):
        k = min(3, len(xs) - 1)
        spl = make_interp_spline(xs, coef, k=k, axis=ax)
        knots.append(spl.t)
        coef = np.moveaxis(spl.c, 0, ax)
    degrees = tuple(min(3, len(xs) - 1) for xs in axes)
    return NdBSpline(tuple(knots), coef, degrees)


@dataclass(frozen=True)
class GridSpec:
    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * len(self.dims))

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(n) for n, h, o in zip(self.dims, self.spacing, self.origin)]


class GridMedium(MediumField):
    """Five channels on a regular grid with cubic interpolation.

    Positions outside the grid are clamped to the boundary cells.
    """

    def __init__(self, data: np.ndarray, spec: GridSpec):
        data = np.asarray(data, float)
        if data.shape != (5,) + tuple(spec.dims):
            raise ValueError(f"grid data shape {data.shape} does not match dims {spec.dims}")
        if len(spec.dims) not in (2, 3):
            raise ValueError("grid media must be 2-D or 3-D")
        self.data = data
        self.spec = spec
        self.is_constant = bool(np.all(data == data.reshape(5, -1)[:, :1].reshape((5,) + (1,) * len(spec.dims))))
        axes = spec.axes()
        self._splines = [_cubic_tensor_spline(axes, data[c]) for c in range(5)]
        self._lo = np.array([a[0] for a in axes])
        self._hi = np.array([a[-1] for a in axes])

    @property
    def description(self) -> str:
        return f"grid dims={self.spec.dims} spacing={self.spec.spacing}"

    def _local(self, x) -> np.ndarray:
        p = _as_positions(x)[:, : len(self.spec.dims)]
        return np.clip(p, self._lo, self._hi)

    def values(self, x) -> np.ndarray:
        p = self._local(x)
        return np.stack([s(p) for s in self._splines])

    def gradients(self, x) -> np.ndarray:
        p = self._local(x)
        nd = len(self.spec.dims)
        out = np.zeros((5, p.shape[0], 3))
        for c, s in enumerate(self._splines):
            for j in range(nd):
                nu = tuple(1 if i == j else 0 for i in range(nd))
                out[c, :, j] = s(p, nu=nu)
        return out


# -- validation -----------------------------------------------------------


@dataclass
class ValidationReport:
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:  # truthy when there is something to report
        return bool(self.violations)


def validate_medium(m: MediumField, sample_points=None) -> ValidationReport:
    """List every sampled point violating ``mu > 0, lam + mu > 0``.

    For a :class:`GridMedium` with no sample points, every grid cell is
    checked and violations name the cell index.
    """
    report = ValidationReport()
    if sample_points is None and isinstance(m, GridMedium):
        lam, mu = m.data[0], m.data[1]
        bad = ~((mu > 0) & (lam + mu > 0) & np.isfinite(lam) & np.isfinite(mu))
        for idx in zip(*np.nonzero(bad)):
            cell = tuple(int(i) for i in idx)
            report.violations.append(
                {"cell": cell, "problems": point_violations(float(lam[cell]), float(mu[cell]))}
            )
        return report
    if sample_points is None:
        raise ValueError("sample_points required for non-grid media")
    pts = _as_positions(sample_points)
    vals = m.values(pts)
    for i, (lam, mu) in enumerate(zip(vals[0], vals[1])):
        problems = point_violations(float(lam), float(mu))
        if problems:
            report.violations.append({"index": i, "position": pts[i].tolist(), "problems": problems})
    return report


# -- file formats -----------------------------------------------------------


def write_grid_file(path, data: np.ndarray, spacing, origin=None) -> None:
    """Write a five-channel grid: magic, ndim, nchan, dims, spacing, origin, data.

    Header integers are little-endian uint32, reals little-endian float64;
    data are float64 in C order with shape (5, *dims), channel order
    lam, mu, A, B, C.
    """
    data = np.asarray(data, dtype="<f8")
    dims = data.shape[1:]
    if data.shape[0] != 5:
        raise ValueError("grid data must have 5 channels")
    nd = len(dims)
    origin = tuple(origin) if origin is not None else (0.0,) * nd
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(struct.pack("<II", nd, 5))
        fh.write(struct.pack(f"<{nd}I", *dims))
        fh.write(struct.pack(f"<{nd}d", *map(float, spacing)))
        fh.write(struct.pack(f"<{nd}d", *map(float, origin)))
        fh.write(np.ascontiguousarray(data).tobytes())


def read_grid_file(path) -> GridMedium:
    raw = Path(path).read_bytes()
    if raw[:8] != GRID_MAGIC:
        raise MediumError(f"{path}: not a five-channel grid file")
    nd, nchan = struct.unpack_from("<II", raw, 8)
    if nchan != 5:
        raise MediumError(f"{path}: expected 5 channels, found {nchan}")
    off = 16
    dims = struct.unpack_from(f"<{nd}I", raw, off)
    off += 4 * nd
    spacing = struct.unpack_from(f"<{nd}d", raw, off)
    off += 8 * nd
    origin = struct.unpack_from(f"<{nd}d", raw, off)
    off += 8 * nd
    data = np.frombuffer(raw, dtype="<f8", offset=off).reshape((5,) + tuple(dims))
    return GridMedium(data.copy(), GridSpec(tuple(dims), tuple(spacing), tuple(origin)))


def medium_from_dict(d: Mapping, base_dir: Path | str = ".") -> MediumField:
    """Build a medium from a key-value description.

    ``{"grid": "file.bin"}`` loads a grid file (relative to ``base_dir``);
    otherwise keys ``lam, mu, A, B, C`` hold numbers or expression strings.
    """
    if "grid" in d:
        return read_grid_file(Path(base_dir) / d["grid"])
    if all(isinstance(d.get(c, 0.0), (int, float)) for c in CHANNELS):
        return ConstantMedium(MaterialPoint(**{c: float(d.get(c, 0.0)) for c in CHANNELS}))
    return ExpressionMedium({c: d.get(c, 0.0) for c in CHANNELS})
