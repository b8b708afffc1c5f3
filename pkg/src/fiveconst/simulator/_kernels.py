"""Fused pointwise stress kernel (numba). Mirrors ``Solver.stress_terms``."""

from __future__ import annotations

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def _stress_kernel(F, lam, mu, A, B, C, linear, nonlinear, out):
    """``F``: (3, 2, n); parameters: length 1 or n; ``out``: (3, 2, n). Returns max |F|."""
    n = F.shape[2]
    het = lam.shape[0] > 1
    fmax = 0.0
    for i in range(n):
        j = i if het else 0
        la, m_, a_, b_, c_ = lam[j], mu[j], A[j], B[j], C[j]
        f00, f01 = F[0, 0, i], F[0, 1, i]
        f10, f11 = F[1, 0, i], F[1, 1, i]
        f20, f21 = F[2, 0, i], F[2, 1, i]
        for v in (f00, f01, f10, f11, f20, f21):
            av = abs(v)
            if not av <= fmax:  # also catches NaN
                fmax = av
        l00, l11 = f00, f11
        l01 = 0.5 * (f01 + f10)
        l02, l12 = 0.5 * f20, 0.5 * f21
        o00 = o01 = o10 = o11 = o20 = o21 = 0.0
        if linear:
            tr = l00 + l11
            o00 = la * tr + 2 * m_ * l00
            o11 = la * tr + 2 * m_ * l11
            o01 = 2 * m_ * l01
            o10 = o01
            o20 = 2 * m_ * l02
            o21 = 2 * m_ * l12
        if nonlinear:
            q00 = 0.5 * (f00 * f00 + f10 * f10 + f20 * f20)
            q11 = 0.5 * (f01 * f01 + f11 * f11 + f21 * f21)
            q01 = 0.5 * (f00 * f01 + f10 * f11 + f20 * f21)
            trq = q00 + q11
            e00, e11, e01 = l00 + q00, l11 + q11, l01 + q01
            e02, e12 = l02, l12
            tre = e00 + e11
            s00 = la * tre + 2 * m_ * e00
            s11 = la * tre + 2 * m_ * e11
            s01 = 2 * m_ * e01
            ee00 = e00 * e00 + e01 * e01 + e02 * e02
            ee11 = e01 * e01 + e11 * e11 + e12 * e12
            ee01 = e00 * e01 + e01 * e11 + e02 * e12
            ee20 = e02 * e00 + e12 * e01
            ee21 = e02 * e01 + e12 * e11
            iso = b_ * (ee00 + ee11 + e02 * e02 + e12 * e12) + c_ * tre * tre
            b2 = 2 * b_ * tre
            sq00 = la * trq + 2 * m_ * q00
            sq11 = la * trq + 2 * m_ * q11
            sq01 = 2 * m_ * q01
            o00 += f00 * s00 + f01 * s01 + a_ * ee00 + b2 * e00 + sq00 + iso
            o01 += f00 * s01 + f01 * s11 + a_ * ee01 + b2 * e01 + sq01
            o10 += f10 * s00 + f11 * s01 + a_ * ee01 + b2 * e01 + sq01
            o11 += f10 * s01 + f11 * s11 + a_ * ee11 + b2 * e11 + sq11 + iso
            o20 += f20 * s00 + f21 * s01 + a_ * ee20 + b2 * e02
            o21 += f20 * s01 + f21 * s11 + a_ * ee21 + b2 * e12
        out[0, 0, i] = o00
        out[0, 1, i] = o01
        out[1, 0, i] = o10
        out[1, 1, i] = o11
        out[2, 0, i] = o20
        out[2, 1, i] = o21
    return fmax


if HAVE_NUMBA:
    stress_kernel = numba.njit(cache=True, fastmath=False)(_stress_kernel)
else:  # pragma: no cover
    stress_kernel = None


def fused_stress(F: np.ndarray, params: dict, linear: bool, nonlinear: bool) -> tuple[np.ndarray, float]:
    shape = F.shape
    Ff = np.ascontiguousarray(F.reshape(3, 2, -1))
    out = np.empty_like(Ff)
    vals = [np.ascontiguousarray(np.atleast_1d(np.asarray(params[c], float)).ravel()) for c in ("lam", "mu", "A", "B", "C")]
    fmax = stress_kernel(Ff, *vals, linear, nonlinear, out)
    return out.reshape(shape), float(fmax)
