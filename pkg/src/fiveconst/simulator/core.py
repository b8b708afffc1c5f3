"""Pseudospectral time stepping of the five-constant elastodynamics system.

The grid is two-dimensional and periodic; the displacement has three
components, ``u3`` being the antiplane component. Fields are invariant in
``x3``, which reduces the 3-D equations exactly, so in-plane (P, SH) and
antiplane (SV) polarizations coexist.

State is kept in Fourier space (``rfft2`` layout) and advanced with a
kick-drift-kick velocity Verlet step, one force evaluation per step. For
homogeneous media the linear part of the force is applied in Fourier space
with the k-space correction ``omega^2 -> (2/dt)^2 sin^2(omega dt / 2)``,
which makes linear propagation exact in time; the quadratic and cubic
stress terms are evaluated pointwise and differentiated spectrally.
Products are dealiased with the 2/3 rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import fft as sfft

from ._kernels import HAVE_NUMBA, fused_stress
from ..medium import CHANNELS, ConstantMedium, MaterialPoint, MediumField

# leapfrog limit omega dt <= 2 at the undealiased Nyquist corner: c dt/dx <= 2 / (pi sqrt 2)
STABILITY_CONSTANT = 2.0 / (math.pi * math.sqrt(2.0))
DEFAULT_CFL = 0.4
STRAIN_LIMIT = 0.5


class SimulationError(RuntimeError):
    pass


class BlowUpError(SimulationError):
    """Non-finite or runaway fields; carries the step and the offending strain."""

    def __init__(self, msg: str, step: int, t: float, max_strain: float):
        super().__init__(msg)
        self.step = step
        self.t = t
        self.max_strain = max_strain


class CFLError(ValueError):
    pass


def rfft2(a: np.ndarray) -> np.ndarray:
    return sfft.rfft2(a, axes=(-2, -1))


def irfft2(a: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return sfft.irfft2(a, s=shape, axes=(-2, -1))


@dataclass
class SimGrid:
    """Periodic grid plus the evolving spectral state.

    ``uhat``/``vhat`` are ``rfft2`` transforms of displacement and velocity,
    shape ``(3, n1, n2 // 2 + 1)``.
    """

    dims: tuple[int, int]
    spacing: float
    dt: float
    duration: float
    uhat: Optional[np.ndarray] = None
    vhat: Optional[np.ndarray] = None
    t: float = 0.0
    step: int = 0

    def __post_init__(self):
        self.dims = tuple(int(n) for n in self.dims)
        if len(self.dims) != 2 or min(self.dims) < 8 or any(n % 2 for n in self.dims):
            raise ValueError("grid dims must be two even integers >= 8")
        if not self.spacing > 0 or not self.dt > 0 or not self.duration >= 0:
            raise ValueError("spacing and dt must be positive, duration non-negative")
        shape = self.spectral_shape
        if self.uhat is None:
            self.uhat = np.zeros(shape, complex)
        if self.vhat is None:
            self.vhat = np.zeros(shape, complex)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (3, self.dims[0], self.dims[1] // 2 + 1)

    @property
    def length(self) -> tuple[float, float]:
        return (self.dims[0] * self.spacing, self.dims[1] * self.spacing)

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.duration / self.dt - 1e-9))

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.dims[0]) * self.spacing
        y = np.arange(self.dims[1]) * self.spacing
        return np.meshgrid(x, y, indexing="ij")

    def displacement(self) -> np.ndarray:
        return irfft2(self.uhat, self.dims)

    def velocity(self) -> np.ndarray:
        return irfft2(self.vhat, self.dims)

    def copy(self) -> "SimGrid":
        return SimGrid(self.dims, self.spacing, self.dt, self.duration, self.uhat.copy(), self.vhat.copy(), self.t, self.step)

    def check_cfl(self, c_max: float, limit: float = STABILITY_CONSTANT) -> float:
        c = c_max * self.dt / self.spacing
        if c > limit:
            raise CFLError(f"CFL number {c:.4f} exceeds the stability constant {limit:.4f}")
        return c

    @classmethod
    def for_medium(cls, dims, spacing: float, duration: float, c_max: float, cfl: float = DEFAULT_CFL) -> "SimGrid":
        if not 0 < cfl <= STABILITY_CONSTANT:
            raise CFLError(f"cfl must lie in (0, {STABILITY_CONSTANT:.4f}]")
        return cls(dims, spacing, cfl * spacing / c_max, duration)


@dataclass
class Wavenumbers:
    k1: np.ndarray  # (n1, 1)
    k2: np.ndarray  # (1, m2)
    kk: np.ndarray  # |k|^2
    mask: np.ndarray  # 2/3-rule dealias mask

    @classmethod
    def for_grid(cls, g: SimGrid) -> "Wavenumbers":
        n1, n2 = g.dims
        k1 = 2 * np.pi * sfft.fftfreq(n1, g.spacing)[:, None]
        k2 = 2 * np.pi * sfft.rfftfreq(n2, g.spacing)[None, :]
        kmax1 = np.pi / g.spacing * 2 / 3
        mask = (np.abs(k1) < kmax1) & (np.abs(k2) < kmax1 * 1.0)
        return cls(k1, k2, k1**2 + k2**2, mask)

    def unit(self) -> tuple[np.ndarray, np.ndarray]:
        kn = np.sqrt(self.kk)
        kn = np.where(kn == 0, 1.0, kn)
        return self.k1 / kn, self.k2 / kn


class Solver:
    """Force evaluation for one grid and medium.

    ``nonlinearity`` is ``"full"`` or ``"linear"``. ``kspace_correction``
    only applies to homogeneous media. The pointwise stress uses a fused
    numba kernel when available.
    """

    def __init__(
        self,
        grid: SimGrid,
        medium: MediumField,
        nonlinearity: str = "full",
        kspace_correction: bool = True,
        use_numba: bool = True,
    ):
        self.use_numba = use_numba and HAVE_NUMBA
        self.kspace_correction = bool(kspace_correction)
        if nonlinearity not in ("full", "linear"):
            raise ValueError("nonlinearity must be 'full' or 'linear'")
        self.grid = grid
        self.medium = medium
        self.nonlinearity = nonlinearity
        self.wn = Wavenumbers.for_grid(grid)
        self._ik1 = 1j * self.wn.k1 * self.wn.mask
        self._ik2 = 1j * self.wn.k2 * self.wn.mask
        self.homogeneous = bool(getattr(medium, "is_constant", False))
        self.kspace_correction = self.kspace_correction and self.homogeneous
        if self.homogeneous:
            p = medium.at((0.0, 0.0, 0.0))
            self.params = {c: getattr(p, c) for c in CHANNELS}
            self._build_linear(p, kspace_correction)
        else:
            X, Y = grid.coords()
            pts = np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1)
            vals = medium.values(pts)
            self.params = {c: vals[i].reshape(grid.dims) for i, c in enumerate(CHANNELS)}
            lam, mu = self.params["lam"], self.params["mu"]
            if np.any(mu <= 0) or np.any(lam + mu <= 0):
                raise ValueError("medium violates mu > 0, lam + mu > 0 on the grid")
        self.c_max = self._c_max()
        self.cfl = grid.check_cfl(self.c_max)

    def _c_max(self) -> float:
        lam, mu = self.params["lam"], self.params["mu"]
        return float(np.sqrt(np.max(lam + 2 * mu)))

    def _build_linear(self, p: MaterialPoint, correct: bool):
        dt = self.grid.dt
        kk = self.wn.kk
        wp2 = (p.lam + 2 * p.mu) * kk
        ws2 = p.mu * kk
        if correct:
            wp2 = (2 / dt) ** 2 * np.sin(np.sqrt(wp2) * dt / 2) ** 2
            ws2 = (2 / dt) ** 2 * np.sin(np.sqrt(ws2) * dt / 2) ** 2
        n1, n2 = self.wn.unit()
        # in-plane operator  wp2 n n^T + ws2 (I - n n^T); antiplane ws2
        self.lin = {
            "11": -(wp2 * n1 * n1 + ws2 * (1 - n1 * n1)),
            "22": -(wp2 * n2 * n2 + ws2 * (1 - n2 * n2)),
            "12": -(wp2 - ws2) * n1 * n2,
            "33": -ws2,
        }

    # -- force pieces ---------------------------------------------------------

    def gradient(self, uhat: np.ndarray) -> np.ndarray:
        """Real-space ``F[m, n] = du_m/dx_n`` for ``n = 1, 2``, shape (3, 2, n1, n2).

        The third column vanishes since fields do not depend on ``x3``.
        """
        dk = np.empty((3, 2) + uhat.shape[1:], complex)
        np.multiply(self._ik1, uhat, out=dk[:, 0])
        np.multiply(self._ik2, uhat, out=dk[:, 1])
        return irfft2(dk, self.grid.dims)

    def stress_terms(self, F: np.ndarray, linear: bool, nonlinear: bool) -> np.ndarray:
        """Stress contributions ``S[m, n]`` for ``n = 1, 2``, shape (3, 2, n1, n2).

        ``F`` is the in-plane gradient from :meth:`gradient`. Written out
        component by component; the generic tensor form is several times
        slower on large grids.
        """
        P = self.params
        lam, mu, A, B, C = P["lam"], P["mu"], P["A"], P["B"], P["C"]
        out = np.zeros((3, 2) + F.shape[2:])
        # linear strain (symmetric, el[2,2] = 0)
        l00, l11 = F[0, 0], F[1, 1]
        l01 = 0.5 * (F[0, 1] + F[1, 0])
        l02, l12 = 0.5 * F[2, 0], 0.5 * F[2, 1]
        if linear:
            tr = l00 + l11
            out[0, 0] = lam * tr + 2 * mu * l00
            out[1, 1] = lam * tr + 2 * mu * l11
            out[0, 1] = out[1, 0] = 2 * mu * l01
            out[2, 0] = 2 * mu * l02
            out[2, 1] = 2 * mu * l12
        if not nonlinear:
            return out
        # quadratic strain eq_ij = 1/2 sum_k F_ki F_kj, nonzero for i, j < 2
        q00 = 0.5 * (F[0, 0] ** 2 + F[1, 0] ** 2 + F[2, 0] ** 2)
        q11 = 0.5 * (F[0, 1] ** 2 + F[1, 1] ** 2 + F[2, 1] ** 2)
        q01 = 0.5 * (F[0, 0] * F[0, 1] + F[1, 0] * F[1, 1] + F[2, 0] * F[2, 1])
        trq = q00 + q11
        e00, e11, e01 = l00 + q00, l11 + q11, l01 + q01
        e02, e12 = l02, l12
        tre = e00 + e11
        # sigma(e) restricted to the in-plane block
        s00 = lam * tre + 2 * mu * e00
        s11 = lam * tre + 2 * mu * e11
        s01 = 2 * mu * e01
        # e.e (symmetric); only rows m < 3, columns n < 2 are needed, plus the trace
        ee00 = e00 * e00 + e01 * e01 + e02 * e02
        ee11 = e01 * e01 + e11 * e11 + e12 * e12
        ee01 = e00 * e01 + e01 * e11 + e02 * e12
        ee20 = e02 * e00 + e12 * e01
        ee21 = e02 * e01 + e12 * e11
        tr_ee = ee00 + ee11 + e02 * e02 + e12 * e12
        iso = B * tr_ee + C * tre * tre
        b2 = 2 * B * tre
        e = {(0, 0): e00, (1, 1): e11, (0, 1): e01, (1, 0): e01, (2, 0): e02, (2, 1): e12}
        ee = {(0, 0): ee00, (1, 1): ee11, (0, 1): ee01, (1, 0): ee01, (2, 0): ee20, (2, 1): ee21}
        sq = {(0, 0): lam * trq + 2 * mu * q00, (1, 1): lam * trq + 2 * mu * q11, (0, 1): 2 * mu * q01}
        sq[(1, 0)] = sq[(0, 1)]
        se = ((s00, s01), (s01, s11))
        for m in range(3):
            for n in range(2):
                v = F[m, 0] * se[0][n] + F[m, 1] * se[1][n] + A * ee[m, n] + b2 * e[m, n]
                if m < 2:
                    v += sq[m, n]
                if m == n:
                    v += iso
                out[m, n] += v
        return out

    def divergence(self, S: np.ndarray) -> np.ndarray:
        Sh = rfft2(S)
        return (1j * self.wn.k1 * Sh[:, 0] + 1j * self.wn.k2 * Sh[:, 1]) * self.wn.mask

    def linear_spectral(self, uhat: np.ndarray) -> np.ndarray:
        L = self.lin
        a = np.empty_like(uhat)
        a[0] = L["11"] * uhat[0] + L["12"] * uhat[1]
        a[1] = L["12"] * uhat[0] + L["22"] * uhat[1]
        a[2] = L["33"] * uhat[2]
        return a

    def acceleration(self, uhat: np.ndarray) -> tuple[np.ndarray, float]:
        """Spectral acceleration and the max strain magnitude seen (0 if not computed)."""
        full = self.nonlinearity == "full"
        if self.homogeneous:
            a = self.linear_spectral(uhat)
            if not full:
                return a, 0.0
            S, fmax = self._stress(self.gradient(uhat), linear=False, nonlinear=True)
            a += self.divergence(S)
            return a, fmax
        S, fmax = self._stress(self.gradient(uhat), linear=True, nonlinear=full)
        return self.divergence(S), fmax

    def _stress(self, F: np.ndarray, linear: bool, nonlinear: bool) -> tuple[np.ndarray, float]:
        if self.use_numba:
            return fused_stress(F, self.params, linear, nonlinear)
        fmax = float(np.max(np.abs(F)))
        return self.stress_terms(F, linear, nonlinear), fmax

    # -- diagnostics --------------------------------------------------------

    def linear_energy(self, g: SimGrid) -> float:
        """``1/2 sum |v|^2 + 1/2 sum (lam tr(e)^2 + 2 mu e:e)`` times the cell area."""
        v = g.velocity()
        F = self.gradient(g.uhat)
        lam, mu = self.params["lam"], self.params["mu"]
        tr = F[0, 0] + F[1, 1]
        shear = F[0, 0] ** 2 + F[1, 1] ** 2 + 0.5 * (F[0, 1] + F[1, 0]) ** 2 + 0.5 * (F[2, 0] ** 2 + F[2, 1] ** 2)
        pot = lam * tr**2 + 2 * mu * shear
        return float(0.5 * (np.sum(v * v) + np.sum(pot)) * g.spacing**2)


Forcing = Callable[[float], np.ndarray]


@dataclass
class Stepper:
    """Velocity Verlet driver holding the cached acceleration between steps."""

    grid: SimGrid
    solver: Solver
    forcing: Optional[Forcing] = None
    strain_limit: float = STRAIN_LIMIT
    _acc: Optional[np.ndarray] = field(default=None, repr=False)

    def _accel(self, t: float) -> np.ndarray:
        a, smax = self.solver.acceleration(self.grid.uhat)
        if not np.isfinite(smax) or smax > self.strain_limit:
            raise BlowUpError(
                f"blow-up at step {self.grid.step}, t={t:.6g}: max strain {smax:.3e}",
                self.grid.step,
                t,
                smax,
            )
        if self.forcing is not None:
            a = a + self.forcing(t)
        return a

    def step(self) -> None:
        g = self.grid
        dt = g.dt
        if self._acc is None:
            self._acc = self._accel(g.t)
        g.vhat += 0.5 * dt * self._acc
        g.uhat += dt * g.vhat
        g.t += dt
        g.step += 1
        self._acc = self._accel(g.t)
        g.vhat += 0.5 * dt * self._acc
        if self.solver.nonlinearity == "linear" and g.step % 50 == 0:
            if not np.all(np.isfinite(g.uhat)):
                raise BlowUpError(f"non-finite field at step {g.step}", g.step, g.t, float("nan"))


def step_nonlinear(state: SimGrid, m: MediumField, nonlinearity: str = "full", solver: Optional[Solver] = None) -> SimGrid:
    """Advance ``state`` by one time step in place and return it.

    Convenience wrapper; loops should build a :class:`Stepper` once.
    """
    solver = solver or Solver(state, m, nonlinearity)
    st = Stepper(state, solver)
    st.step()
    return state


def homogeneous(p: MaterialPoint) -> ConstantMedium:
    return ConstantMedium(p)
