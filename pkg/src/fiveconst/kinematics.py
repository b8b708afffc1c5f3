"""Characteristic varieties, boundary covector classes and bicharacteristics.

Sign convention used everywhere in the package: a forward-in-time wave
whose wavevector ``xi`` points along propagation has ``tau < 0``, i.e. the
phase is ``x . xi + t tau``. With this convention the Hamilton field of
``p = tau^2 - c(x)^2 |xi|^2``, written as

    dt/ds = -2 tau,   dx/ds = 2 c^2 xi,   dxi/ds = -|xi|^2 grad(c^2),

moves rays along ``xi`` as ``t`` increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .io import write_csv
from .medium import MaterialPoint, MediumField

MODES = ("P", "S")
GLANCING_TOL = 1e-9


class KinematicsError(ValueError):
    pass


class RayTracingError(RuntimeError):
    """Integrator failure or a ray leaving the prescribed domain."""

    def __init__(self, msg: str, path: "RayPath | None" = None, hit_point=None):
        super().__init__(msg)
        self.path = path
        self.hit_point = hit_point


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.size == 2:
        a = np.append(a, 0.0)
    if a.size != 3:
        raise ValueError(f"expected a 2- or 3-vector, got {v!r}")
    return a


@dataclass(frozen=True)
class Covector:
    """A point ``(t, x)`` with frequency ``tau`` and wavevector ``xi``."""

    t: float
    x: np.ndarray
    tau: float
    xi: np.ndarray
    mode: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "x", _vec3(self.x))
        object.__setattr__(self, "xi", _vec3(self.xi))
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "t", float(self.t))
        if self.mode is not None and self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES} or None")
        if self.tau == 0 and not np.any(self.xi):
            raise KinematicsError("zero covector")

    def __add__(self, other: "Covector") -> "Covector":
        return Covector(self.t, self.x, self.tau + other.tau, self.xi + other.xi)

    def scaled(self, s: float) -> "Covector":
        return Covector(self.t, self.x, s * self.tau, s * self.xi, self.mode)

    def with_mode(self, mode: Optional[str]) -> "Covector":
        return Covector(self.t, self.x, self.tau, self.xi, mode)


def hamiltonian(cv: Covector, p: MaterialPoint, mode: str) -> float:
    """``p_mode = tau^2 - c_mode^2 |xi|^2``."""
    c2 = p.speed(mode) ** 2
    return cv.tau**2 - c2 * float(cv.xi @ cv.xi)


def variety_residual(cv: Covector, p: MaterialPoint, mode: str) -> float:
    """Scale-free membership residual ``|p_mode| / (tau^2 + c^2 |xi|^2)``."""
    c2 = p.speed(mode) ** 2
    return abs(hamiltonian(cv, p, mode)) / (cv.tau**2 + c2 * float(cv.xi @ cv.xi))


def on_variety(cv: Covector, p: MaterialPoint, mode: str, tol: float = 1e-10) -> bool:
    return variety_residual(cv, p, mode) <= tol


def forward_covector(xi, p: MaterialPoint, mode: str, t: float = 0.0, x=(0, 0, 0)) -> Covector:
    """The forward-in-time covector ``(-c |xi|, xi)`` on the mode's variety."""
    xi = _vec3(xi)
    return Covector(t, x, -p.speed(mode) * float(np.linalg.norm(xi)), xi, mode)


def group_velocity(cv: Covector, p: MaterialPoint, tol: float = 1e-10) -> np.ndarray:
    """``dx/dt = c^2 xi / (-tau)``; magnitude ``c_mode``, parallel to ``xi``."""
    if cv.mode not in MODES:
        raise KinematicsError("covector mode must be P or S")
    if not on_variety(cv, p, cv.mode, tol):
        raise KinematicsError(
            f"covector off the {cv.mode} variety (residual {variety_residual(cv, p, cv.mode):.3e})"
        )
    return p.speed(cv.mode) ** 2 * cv.xi / (-cv.tau)


# -- boundary classification ------------------------------------------------


@dataclass
class BoundaryClass:
    """Per-mode elliptic / hyperbolic / glancing tags at a boundary covector.

    ``root[mode]`` is the forward real root when hyperbolic, the root with
    positive imaginary part when elliptic, and 0 when glancing;
    ``covector[mode]`` is ``xi - z nu`` for hyperbolic and glancing modes.
    """

    tag: dict[str, str]
    root: dict[str, complex]
    covector: dict[str, Optional[np.ndarray]]
    discriminant: dict[str, float]


def classify_boundary(tau: float, xi_tangential, normal, p: MaterialPoint, tol: float = GLANCING_TOL) -> BoundaryClass:
    """Classify ``(tau, xi_tangential)`` by the roots of ``p_mode(tau, xi - z nu) = 0``.

    ``normal`` is the exterior unit normal. With ``xi`` tangential the
    equation reads ``z^2 = tau^2 / c^2 - |xi|^2``. A real root is forward if
    the ray it starts enters the domain (moves along ``-normal``) as time
    increases; glancing means the discriminant is below ``tol`` times
    ``tau^2 / c^2 + |xi|^2``.
    """
    xi = _vec3(xi_tangential)
    nu = _vec3(normal)
    if tau == 0 and not np.any(xi):
        raise KinematicsError("zero boundary covector")
    nn = float(np.linalg.norm(nu))
    if not math.isclose(nn, 1.0, rel_tol=1e-9):
        raise KinematicsError(f"normal must be a unit vector (|nu| = {nn})")
    scale_xi = max(float(np.linalg.norm(xi)), abs(tau), 1.0)
    if abs(float(xi @ nu)) > 1e-12 * scale_xi:
        raise KinematicsError("boundary covector must be orthogonal to the normal")

    tag, root, cov, disc = {}, {}, {}, {}
    for mode in MODES:
        c2 = p.speed(mode) ** 2
        d = tau**2 / c2 - float(xi @ xi)
        scale = tau**2 / c2 + float(xi @ xi)
        disc[mode] = d
        if abs(d) <= tol * scale:
            tag[mode], root[mode] = "glancing", 0.0
            cov[mode] = xi.copy()
        elif d > 0:
            z = math.sqrt(d)
            # inward speed of xi - z nu is z c^2 / (-tau): forward needs z * (-tau) > 0
            z = z if tau < 0 else -z
            tag[mode], root[mode] = "hyperbolic", z
            cov[mode] = xi - z * nu
        else:
            tag[mode], root[mode] = "elliptic", complex(0.0, math.sqrt(-d))
            cov[mode] = None
    if tag["P"] == "hyperbolic" and tag["S"] != "hyperbolic":
        raise AssertionError("hyperbolic-for-P must imply hyperbolic-for-S")
    if tag["S"] == "elliptic" and tag["P"] != "elliptic":
        raise AssertionError("elliptic-for-S must imply elliptic-for-P")
    return BoundaryClass(tag, root, cov, disc)


# -- ray tracing --------------------------------------------------------------


@dataclass
class RayPath:
    s: np.ndarray
    t: np.ndarray
    x: np.ndarray  # (n, 3)
    tau: np.ndarray
    xi: np.ndarray  # (n, 3)
    mode: str
    residual: np.ndarray  # |p| / (tau^2 + c^2 |xi|^2)
    stats: dict = field(default_factory=dict)

    def end(self) -> Covector:
        return Covector(self.t[-1], self.x[-1], self.tau[-1], self.xi[-1], self.mode)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual))

    def to_csv(self, path_or_file) -> None:
        header = ["s", "t", "x1", "x2", "x3", "tau", "xi1", "xi2", "xi3", "hamiltonian_residual"]
        rows = (
            [self.s[i], self.t[i], *self.x[i], self.tau[i], *self.xi[i], self.residual[i]] for i in range(len(self.s))
        )
        write_csv(path_or_file, header, rows)


def _ray_rhs(m: MediumField, mode: str, tau: float):
    def rhs(_s, y):
        x, xi = y[:3], y[3:6]
        c2 = float(m.speed_squared(x, mode)[0])
        g = m.speed_squared_grad(x, mode)[0]
        out = np.empty(7)
        out[:3] = 2.0 * c2 * xi
        out[3:6] = -float(xi @ xi) * g
        out[6] = -2.0 * tau
        return out

    return rhs


def trace_ray(
    start: Covector,
    m: MediumField,
    t_span: tuple[float, float],
    rtol: float = 1e-12,
    atol: float = 1e-14,
    max_step: float = np.inf,
    n_samples: int = 101,
    domain: Optional[tuple] = None,
    start_tol: float = 1e-8,
    drift_tol: float = 1e-9,
) -> RayPath:
    """Integrate the bicharacteristic through ``start`` until ``t_span[1]``.

    ``domain`` is an optional axis-aligned box ``(lo, hi)``; leaving it raises
    :class:`RayTracingError` carrying the boundary hit point. ``tau`` is
    constant since parameters do not depend on time, so the curve is
    parametrized with ``s = (t - t0) / (-2 tau)``.
    """
    mode = start.mode
    if mode not in MODES:
        raise KinematicsError("start covector needs mode P or S")
    p0 = m.at(start.x)
    if not on_variety(start, p0, mode, start_tol):
        raise KinematicsError(f"start covector not on the {mode} variety")
    if start.tau == 0:
        raise KinematicsError("tau = 0 on a characteristic variety means xi = 0")
    t0, t1 = map(float, t_span)
    if not math.isclose(t0, start.t, abs_tol=1e-14 * max(1.0, abs(t0))):
        raise KinematicsError("t_span must begin at the start covector's time")
    tau = start.tau
    s_end = (t1 - t0) / (-2.0 * tau)
    y0 = np.concatenate([start.x, start.xi, [start.t]])

    events = None
    if domain is not None:
        lo, hi = (np.asarray(b, float) for b in domain)

        def leave(_s, y):
            x = y[: len(lo)]
            return float(np.min(np.concatenate([x - lo, hi - x])))

        leave.terminal = True
        events = [leave]

    sol = solve_ivp(
        _ray_rhs(m, mode, tau),
        (0.0, s_end),
        y0,
        method="DOP853",
        rtol=rtol,
        atol=atol,
        max_step=max_step,
        dense_output=True,
        events=events,
    )
    if sol.status == -1:
        raise RayTracingError(f"integrator failure: {sol.message}")
    s_last = sol.t[-1]
    s = np.linspace(0.0, s_last, n_samples)
    y = sol.sol(s)
    y[:, -1] = sol.y[:, -1]
    x, xi, t = y[:3].T, y[3:6].T, y[6]
    c2 = m.speed_squared(x, mode)
    xi2 = np.einsum("ij,ij->i", xi, xi)
    res = np.abs(tau**2 - c2 * xi2) / (tau**2 + c2 * xi2)
    path = RayPath(
        s=s,
        t=t,
        x=x,
        tau=np.full_like(s, tau),
        xi=xi,
        mode=mode,
        residual=res,
        stats={"nfev": int(sol.nfev), "n_steps": int(len(sol.t) - 1), "max_residual": float(res.max())},
    )
    if res.max() > drift_tol:
        path.stats["drift_warning"] = True
    if sol.status == 1:
        hit = sol.y_events[0][0][:3]
        raise RayTracingError(f"ray left the domain at {hit.tolist()}", path=path, hit_point=hit)
    return path
