"""Gaussian wave packets built in Fourier space, plus their exact linear evolution.

A packet is a complex scalar ``psi = env(x) exp(i k0 d.(x - c))`` restricted
to the half plane ``k.d > 0`` and given a per-wavevector polarization, so
each Fourier mode is a pure P, SH or SV plane wave travelling along ``+k``.
Displacement is normalized so that ``amplitude`` is the peak strain.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..medium import MaterialPoint
from .core import SimGrid, rfft2

PACKET_MODES = ("P", "SH", "SV")
# k0 dx must stay below this for the packet to be well resolved
RESOLUTION_LIMIT = math.pi / 4
# envelope cut-off in widths used for the "inside the domain" check
SUPPORT_WIDTHS = 3.0


class PacketError(ValueError):
    pass


def mode_vectors(k1: np.ndarray, k2: np.ndarray, mode: str) -> np.ndarray:
    """Unit polarization field ``(3, ...)`` of ``mode`` for in-plane wavevectors.

    P is ``k/|k|``, SH is ``e3 x k/|k|`` and SV is ``e3``. The zero mode gets
    the zero vector for P and SH.
    """
    k1, k2 = np.broadcast_arrays(np.asarray(k1, float), np.asarray(k2, float))
    kn = np.hypot(k1, k2)
    safe = np.where(kn == 0, 1.0, kn)
    n1, n2 = k1 / safe, k2 / safe
    z = np.zeros_like(kn)
    if mode == "P":
        return np.stack([n1, n2, z])
    if mode == "SH":
        return np.stack([-n2, n1, z])
    if mode == "SV":
        return np.stack([z, z, np.ones_like(kn)])
    raise PacketError(f"unknown packet mode {mode!r}")


def mode_speed(p: MaterialPoint, mode: str) -> float:
    return p.c_p if mode == "P" else p.c_s


@dataclass
class PacketSource:
    """Initial-data wave packet.

    Parameters
    ----------
    center : (2,) position at ``t = 0``
    direction : (2,) propagation direction (normalized on construction)
    k0 : central wavenumber
    widths : Gaussian envelope widths ``(along, across)`` the direction
    mode : ``"P"``, ``"SH"`` (in-plane shear) or ``"SV"`` (antiplane shear)
    amplitude : peak strain ``eps``
    phase : carrier phase at the center
    """

    center: Sequence[float]
    direction: Sequence[float]
    k0: float
    widths: Sequence[float]
    mode: str = "P"
    amplitude: float = 1e-3
    phase: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.direction, float).reshape(-1)[:2]
        n = np.linalg.norm(d)
        if not n > 0:
            raise PacketError("packet direction must be non-zero")
        self.direction = tuple(float(v) for v in d / n)
        self.center = tuple(float(v) for v in np.asarray(self.center, float).reshape(-1)[:2])
        w = np.broadcast_to(np.asarray(self.widths, float), (2,))
        self.widths = (float(w[0]), float(w[1]))
        if self.mode not in PACKET_MODES:
            raise PacketError(f"mode must be one of {PACKET_MODES}")
        if not self.k0 > 0 or min(self.widths) <= 0:
            raise PacketError("k0 and widths must be positive")
        self.k0 = float(self.k0)
        self.amplitude = float(self.amplitude)

    @property
    def wavevector(self) -> np.ndarray:
        return self.k0 * np.asarray(self.direction)

    def as_dict(self) -> dict:
        return asdict(self)

    def with_amplitude(self, eps: float) -> "PacketSource":
        return PacketSource(self.center, self.direction, self.k0, self.widths, self.mode, eps, self.phase)

    def check(self, grid: SimGrid) -> None:
        """Resolution and support checks against ``grid``."""
        kdx = self.k0 * grid.spacing
        if kdx >= RESOLUTION_LIMIT:
            raise PacketError(f"packet under-resolved: k0*dx = {kdx:.3f} >= pi/4")
        L = np.asarray(grid.length)
        d = np.asarray(self.direction)
        perp = np.array([-d[1], d[0]])
        # half-extent of the envelope along each grid axis
        ext = SUPPORT_WIDTHS * np.sqrt((self.widths[0] * d) ** 2 + (self.widths[1] * perp) ** 2)
        if np.any(2 * ext > L):
            raise PacketError("packet envelope does not fit inside the periodic domain")
        if self.k0 * min(self.widths) < 4.0:
            raise PacketError("packet too short: k0 * width < 4 leaves no carrier")

    # -- fields ---------------------------------------------------------------

    def scalar_spectrum(self, grid: SimGrid) -> np.ndarray:
        """Full ``fft2`` of the half-plane-filtered complex scalar, unit peak."""
        X, Y = grid.coords()
        L1, L2 = grid.length
        dx = (X - self.center[0] + L1 / 2) % L1 - L1 / 2
        dy = (Y - self.center[1] + L2 / 2) % L2 - L2 / 2
        d1, d2 = self.direction
        s = dx * d1 + dy * d2
        r = -dx * d2 + dy * d1
        env = np.exp(-0.5 * (s / self.widths[0]) ** 2 - 0.5 * (r / self.widths[1]) ** 2)
        psi = env * np.exp(1j * (self.k0 * s + self.phase))
        ph = np.fft.fft2(psi)
        K1, K2 = full_wavenumbers(grid)
        ph[(K1 * d1 + K2 * d2) <= 0] = 0.0
        # Nyquist modes have no definite direction
        ph[grid.dims[0] // 2, :] = 0.0
        ph[:, grid.dims[1] // 2] = 0.0
        return ph

    def linear_fields(self, grid: SimGrid, p: MaterialPoint, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Exact homogeneous linear displacement and velocity at time ``t``."""
        spec = LinearPacket(self, grid, p)
        return spec.displacement(t), spec.velocity(t)


def full_wavenumbers(grid: SimGrid) -> tuple[np.ndarray, np.ndarray]:
    n1, n2 = grid.dims
    k1 = 2 * np.pi * np.fft.fftfreq(n1, grid.spacing)[:, None]
    k2 = 2 * np.pi * np.fft.fftfreq(n2, grid.spacing)[None, :]
    return np.broadcast_arrays(k1, k2)


class LinearPacket:
    """Exact linear evolution of one packet in a homogeneous medium.

    Every retained Fourier mode is a forward plane wave, so the analytic
    solution is ``U(t) = IFFT(psi_hat e(k) exp(-i omega t)) eps / k0``; the
    physical field is its real part.
    """

    def __init__(self, src: PacketSource, grid: SimGrid, p: MaterialPoint):
        self.src = src
        self.grid = grid
        K1, K2 = full_wavenumbers(grid)
        self.omega = mode_speed(p, src.mode) * np.hypot(K1, K2)
        self.psi_hat = src.scalar_spectrum(grid)
        self.evec = mode_vectors(K1, K2, src.mode)
        self.scale = src.amplitude / src.k0

    def scalar(self, t: float, per_unit: bool = True) -> np.ndarray:
        """Complex analytic scalar ``s(x, t)``; per unit amplitude by default."""
        s = np.fft.ifft2(self.psi_hat * np.exp(-1j * self.omega * t)) / self.src.k0
        return s if per_unit else s * self.src.amplitude

    def analytic(self, t: float) -> np.ndarray:
        """Complex displacement ``(3, n1, n2)`` whose real part is the field."""
        ph = self.psi_hat * np.exp(-1j * self.omega * t)
        return np.fft.ifft2(self.evec * ph, axes=(-2, -1)) * self.scale

    def displacement(self, t: float) -> np.ndarray:
        return self.analytic(t).real

    def velocity(self, t: float) -> np.ndarray:
        ph = -1j * self.omega * self.psi_hat * np.exp(-1j * self.omega * t)
        return np.fft.ifft2(self.evec * ph, axes=(-2, -1)).real * self.scale

    def start_velocity(self, t: float, dt: float) -> np.ndarray:
        """Velocity that makes the corrected Verlet scheme reproduce ``U`` exactly.

        The first drift gives ``u(dt) = u + dt v + dt^2 a / 2`` with
        ``a = -(2/dt)^2 sin^2(omega dt/2) u``; solving for ``v`` so that this
        equals ``exp(-i omega dt) u`` per mode. Differs from the true velocity
        by ``O((omega dt)^2)``.
        """
        w = self.omega * dt
        fac = (np.exp(-1j * w) - 1 + 2 * np.sin(w / 2) ** 2) / dt
        ph = fac * self.psi_hat * np.exp(-1j * self.omega * t)
        return np.fft.ifft2(self.evec * ph, axes=(-2, -1)).real * self.scale


def load_packets(
    grid: SimGrid,
    p: MaterialPoint,
    sources: Sequence[PacketSource],
    consistent_start: bool = False,
) -> SimGrid:
    """Set the grid state to the superposition of ``sources`` at ``grid.t``.

    With ``consistent_start`` the velocity is the one matched to the
    k-space corrected scheme (see :meth:`LinearPacket.start_velocity`), which
    makes homogeneous linear runs exact up to rounding.
    """
    u = np.zeros((3,) + grid.dims)
    v = np.zeros((3,) + grid.dims)
    for src in sources:
        if src.amplitude == 0.0:
            continue
        src.check(grid)
        lp = LinearPacket(src, grid, p)
        u += lp.displacement(grid.t)
        v += lp.start_velocity(grid.t, grid.dt) if consistent_start else lp.velocity(grid.t)
    grid.uhat = rfft2(u)
    grid.vhat = rfft2(v)
    return grid
