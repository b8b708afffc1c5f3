"""Spectral measurements on displacement fields."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import SimGrid
from .packets import full_wavenumbers, mode_vectors


class MeasurementError(ValueError):
    pass


def _as3(field: np.ndarray) -> np.ndarray:
    f = np.asarray(field)
    if f.ndim != 3 or f.shape[0] not in (2, 3):
        raise MeasurementError("field must have shape (2 or 3, n1, n2)")
    if f.shape[0] == 2:
        f = np.concatenate([f, np.zeros((1,) + f.shape[1:], f.dtype)])
    return f


def grid_coords(dims, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(dims[0]) * spacing
    y = np.arange(dims[1]) * spacing
    return np.meshgrid(x, y, indexing="ij")


def measure_mode_amplitude(
    field: np.ndarray,
    wavevector,
    mode: str,
    spacing: float = 1.0,
    window: Optional[np.ndarray] = None,
) -> complex:
    """Amplitude of polarization ``mode`` at ``wavevector``.

    Computes ``(1/N) sum_x w(x) e(k).u(x) exp(-i k.x)`` over all ``N``
    cells, so a complex plane wave ``a e(k) exp(i k.x)`` returns ``a`` and
    the real part of one returns ``a/2``. ``wavevector`` need not lie on the
    grid lattice. The window multiplies the field but does not change the
    normalization, so windows that cover a packet leave its amplitude
    unchanged.
    """
    f = _as3(field)
    k = np.asarray(wavevector, float).reshape(-1)[:2]
    e = mode_vectors(k[0], k[1], mode)
    X, Y = grid_coords(f.shape[1:], spacing)
    proj = np.tensordot(e, f, axes=(0, 0))
    if window is not None:
        w = np.asarray(window, float)
        if w.shape != proj.shape:
            raise MeasurementError("window shape does not match the field")
        if not np.any(w):
            raise MeasurementError("window is empty")
        proj = proj * w
    phase = np.exp(-1j * (k[0] * X + k[1] * Y))
    return complex(np.sum(proj * phase) / proj.size)


def box_window(dims, spacing: float, center, half_widths) -> np.ndarray:
    """Periodic rectangular mask around ``center``."""
    X, Y = grid_coords(dims, spacing)
    L = np.asarray(dims) * spacing
    dx = (X - center[0] + L[0] / 2) % L[0] - L[0] / 2
    dy = (Y - center[1] + L[1] / 2) % L[1] - L[1] / 2
    return ((np.abs(dx) <= half_widths[0]) & (np.abs(dy) <= half_widths[1])).astype(float)


@dataclass
class Spectrum:
    """Full-plane spectrum of a 3-component field, normalized by the cell count."""

    K1: np.ndarray
    K2: np.ndarray
    coeffs: np.ndarray  # (3, n1, n2) complex
    dk: tuple[float, float]

    @classmethod
    def of(cls, field: np.ndarray, spacing: float) -> "Spectrum":
        f = _as3(field)
        n1, n2 = f.shape[1:]
        g = SimGrid((n1, n2), spacing, 1.0, 0.0)
        K1, K2 = full_wavenumbers(g)
        c = np.fft.fft2(f, axes=(-2, -1)) / (n1 * n2)
        return cls(K1, K2, c, (2 * np.pi / (n1 * spacing), 2 * np.pi / (n2 * spacing)))

    def projected(self, mode: str) -> np.ndarray:
        return np.sum(mode_vectors(self.K1, self.K2, mode) * self.coeffs, axis=0)

    def power(self) -> np.ndarray:
        return np.sum(np.abs(self.coeffs) ** 2, axis=0)

    def peak(self, half_plane=None, exclude_radius: float = 0.0, near=None, radius=None) -> tuple[np.ndarray, float]:
        """Lattice wavevector of maximal power, optionally restricted.

        ``half_plane`` keeps ``k.h > 0``; ``near``/``radius`` keep a disk.
        """
        pw = self.power().copy()
        if half_plane is not None:
            h = np.asarray(half_plane, float)
            pw[(self.K1 * h[0] + self.K2 * h[1]) <= 0] = 0.0
        if near is not None and radius is not None:
            pw[np.hypot(self.K1 - near[0], self.K2 - near[1]) > radius] = 0.0
        i = np.unravel_index(int(np.argmax(pw)), pw.shape)
        return np.array([self.K1[i], self.K2[i]]), float(np.sqrt(pw[i]))

    def disk(self, center, radius: float) -> np.ndarray:
        return np.hypot(self.K1 - center[0], self.K2 - center[1]) <= radius

    def lattice_offset(self, k_a, k_b) -> float:
        """Largest per-axis separation of two wavevectors in lattice units."""
        d = np.abs(np.asarray(k_a, float)[:2] - np.asarray(k_b, float)[:2])
        return float(max(d[0] / self.dk[0], d[1] / self.dk[1]))


def band_ratio(target: Spectrum, reference: Spectrum, mode: str, center, radius: float) -> tuple[complex, float]:
    """Least-squares ``c`` with ``target ~ c * reference`` over a k-space disk.

    Both spectra are projected on ``mode``. Returns ``c`` and the coherence
    ``|<r, t>|^2 / (|r|^2 |t|^2)`` (1 when the shapes agree exactly).
    """
    m = target.disk(center, radius)
    if not np.any(m):
        raise MeasurementError("empty wavenumber band")
    t = target.projected(mode)[m]
    r = reference.projected(mode)[m]
    rr = float(np.vdot(r, r).real)
    if rr == 0:
        raise MeasurementError("reference spectrum vanishes on the band")
    rt = complex(np.vdot(r, t))
    tt = float(np.vdot(t, t).real)
    coh = abs(rt) ** 2 / (rr * tt) if tt > 0 else 0.0
    return rt / rr, coh


def phase_frequency(c0: complex, c1: complex, dt: float) -> float:
    """Angular frequency from two samples of ``exp(-i omega t)``."""
    if c0 == 0 or c1 == 0:
        raise MeasurementError("zero amplitude: phase undefined")
    return float(-np.angle(c1 / c0) / dt)
