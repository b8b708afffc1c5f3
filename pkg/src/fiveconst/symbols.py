"""Principal symbols of the quadratic source term, two ways.

Ground truth is the direct contraction of the quadratic stress form on
rank-one symbol data: ``sigma(du_m/dx_n) = i pol_m xi_n`` gives
``W = pol (x) xi`` and, because two derivatives contribute ``i * i = -1``,

    g = -[G(W1, W2) + G(W2, W1)],      h = i g xi_out.

The closed forms below express the projections of ``h`` onto the unit
output directions (``e_out`` for P, ``e_h`` for SH, ``e_v`` for SV) in
terms of ``|xi1|, |xi2|, |xi_out|`` and the angles of
:class:`fiveconst.resonance.Frame`. Amplitude conventions: a P input
``a`` has polarization ``a xi`` (not unit), an S input has
``b_H H(xi) + b_V e_v`` (unit vectors).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .io import write_csv
from .kinematics import Covector, variety_residual
from .medium import MaterialPoint
from .resonance import Frame, InteractionConfig, make_config, solve_all

PROJECTION_TOL = 1e-12


class SymbolError(ValueError):
    pass


# -- rank-one data ------------------------------------------------------------


@dataclass(frozen=True)
class RankOneSymbol:
    """``sigma(du_m/dx_n) = i polarization_m xi_n``."""

    polarization: np.ndarray
    xi: np.ndarray
    mode: Optional[str] = None

    def __post_init__(self):
        pol = np.asarray(self.polarization, dtype=complex).reshape(3)
        xi = np.asarray(self.xi, dtype=float).reshape(3)
        object.__setattr__(self, "polarization", pol)
        object.__setattr__(self, "xi", xi)
        if self.mode is None or np.max(np.abs(pol)) < 1e-150:
            return
        xu = xi / float(np.linalg.norm(xi))
        pu = pol / float(np.max(np.abs(pol)))
        cos = abs(np.vdot(xu, pu)) / float(np.linalg.norm(pu))
        if self.mode == "P" and abs(cos - 1.0) > PROJECTION_TOL:
            raise SymbolError("P polarization must be parallel to xi")
        if self.mode == "S" and cos > PROJECTION_TOL:
            raise SymbolError("S polarization must be orthogonal to xi")

    @property
    def gradient(self) -> np.ndarray:
        """``W = pol (x) xi`` (the gradient symbol without its ``i``)."""
        return np.outer(self.polarization, self.xi)

    def strain_trace(self) -> complex:
        return complex(self.polarization @ self.xi)


def quadratic_form(p: MaterialPoint, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """Bilinear quadratic stress ``G(u, w)`` for gradients ``w1 = du``, ``w2 = dw``.

    Row index ``m`` is the displacement component, column ``n`` the
    derivative direction, matching ``S_mn`` in ``d_t^2 u_m = d_n S_mn``.
    """
    u1 = 0.5 * (w1 + w1.T)
    u2 = 0.5 * (w2 + w2.T)
    eye = np.eye(3)
    t1, t2 = np.trace(u1), np.trace(u2)
    return (
        p.lam * t1 * w2
        + 0.5 * p.lam * np.sum(w1 * w2) * eye
        + 2 * p.mu * (w2 @ u1.T)
        + p.mu * (w1.T @ w2)
        + p.A * (u1 @ u2.T)
        + p.B * (2 * t1 * u2 + np.sum(u1 * u2) * eye)
        + p.C * t1 * t2 * eye
    )


def g_form(p: MaterialPoint, s1: RankOneSymbol, s2: RankOneSymbol) -> np.ndarray:
    """Symbol of the symmetrized quadratic form on two rank-one inputs."""
    w1, w2 = s1.gradient, s2.gradient
    return -(quadratic_form(p, w1, w2) + quadratic_form(p, w2, w1))


def source_symbol(p: MaterialPoint, s1: RankOneSymbol, s2: RankOneSymbol, xi_out=None) -> np.ndarray:
    """Unprojected ``h = i g xi_out``; ``xi_out`` defaults to ``xi1 + xi2``."""
    xo = s1.xi + s2.xi if xi_out is None else np.asarray(xi_out, float)
    return 1j * (g_form(p, s1, s2) @ xo)


# -- symbol vectors -----------------------------------------------------------

OUT_MODES = ("P", "SH", "SV")


@dataclass
class SymbolVector:
    value: np.ndarray
    at: Covector
    mode: str
    decomposition: dict[str, complex] = field(default_factory=dict)
    basis: dict[str, np.ndarray] = field(default_factory=dict)

    def recombine(self) -> np.ndarray:
        return sum((c * self.basis[k] for k, c in self.decomposition.items()), np.zeros(3, complex))

    @property
    def amplitude(self) -> complex:
        return self.decomposition[self.mode]


def _out_basis(frame: Frame) -> dict[str, np.ndarray]:
    return {"P": frame.e_out, "SH": frame.e_h, "SV": frame.e_v}


def rank_one_inputs(cfg: InteractionConfig) -> tuple[RankOneSymbol, RankOneSymbol]:
    return (
        RankOneSymbol(cfg.polarization(1), cfg.zeta1.xi, cfg.zeta1.mode),
        RankOneSymbol(cfg.polarization(2), cfg.zeta2.xi, cfg.zeta2.mode),
    )


def interaction_symbol(
    p: MaterialPoint,
    cfg: InteractionConfig,
    out: Covector,
    out_mode: str,
    check_resonant: bool = True,
    tol: float = 1e-10,
) -> SymbolVector:
    """Projection of ``h = i g xi_out`` onto the requested output direction.

    ``out`` must be ``zeta1 + zeta2`` (``zeta2`` already carries the
    resonance factor) and, unless ``check_resonant`` is off, lie on the
    variety of ``out_mode``.
    """
    if out_mode not in OUT_MODES:
        raise SymbolError(f"out_mode must be one of {OUT_MODES}")
    xo = cfg.zeta1.xi + cfg.zeta2.xi
    if not np.allclose(out.xi, xo, rtol=1e-12, atol=1e-12 * float(np.linalg.norm(xo))):
        raise SymbolError("output covector is not zeta1 + zeta2")
    if check_resonant:
        vmode = "P" if out_mode == "P" else "S"
        tau = cfg.zeta1.tau + cfg.zeta2.tau
        r = variety_residual(Covector(out.t, out.x, tau, xo), p, vmode)
        if r > tol:
            raise SymbolError(f"output covector is not resonant for {vmode} (residual {r:.3e})")
    s1, s2 = rank_one_inputs(cfg)
    h = source_symbol(p, s1, s2, xo)
    basis = _out_basis(cfg.frame(xo))
    dec = {k: complex(v @ h) for k, v in basis.items()}
    value = dec[out_mode] * basis[out_mode]
    return SymbolVector(value=value, at=out, mode=out_mode, decomposition=dec, basis=basis)


# -- closed forms ---------------------------------------------------------------


class Case(str, Enum):
    PP_SH = "PP->SH"
    PSH_P = "P+SH->P"
    PSH_SH = "P+SH->SH"
    PSV_SV = "P+SV->SV"
    SHSH_P = "SH+SH->P"
    SHSV_0 = "SH+SV->0"
    SVSV_P = "SV+SV->P"


TABLE_ROWS = tuple(Case)

# (input 1 polarization, input 2 polarization, output direction) per row,
# plus the projections that vanish identically.
CASE_SPEC: dict[str, tuple[str, str, str]] = {
    "PP->SH": ("P", "P", "SH"),
    "P+SH->P": ("P", "SH", "P"),
    "P+SH->SH": ("P", "SH", "SH"),
    "P+SV->SV": ("P", "SV", "SV"),
    "SH+SH->P": ("SH", "SH", "P"),
    "SH+SV->0": ("SH", "SV", "P"),
    "SV+SV->P": ("SV", "SV", "P"),
    "PP->SV": ("P", "P", "SV"),
    "P+SV->P": ("P", "SV", "P"),
    "P+SH->SV": ("P", "SH", "SV"),
    "P+SV->SH": ("P", "SV", "SH"),
    "SH+SV->P": ("SH", "SV", "P"),
    "SV+SH->P": ("SV", "SH", "P"),
}
ZERO_CASES = ("PP->SV", "P+SV->P", "P+SH->SV", "P+SV->SH", "SH+SV->P", "SV+SH->P", "SH+SV->0")


def _key(case) -> str:
    return case.value if isinstance(case, Case) else str(case)


def _pp_sh(p, r1, r2, ro, u, v, al, ps):
    return -1j * u * v * r1**2 * r2**2 * ro * (p.lam + 3 * p.mu + p.A + 2 * p.B) * math.cos(al) * math.sin(2 * ps - al)


def _psh_p(p, r1, r2, ro, u, v, al, ps):
    return 1j * u * v * r1**2 * r2 * ro * (p.lam + 2 * p.B + p.A + 3 * p.mu) * math.cos(al - ps) * math.sin(al + ps)


def _psh_sh(p, r1, r2, ro, u, v, al, ps):
    k1 = p.lam + 2 * p.mu + p.B + 0.5 * p.A
    k2 = p.mu + p.B + 0.5 * p.A
    return -1j * u * v * r1**2 * r2 * ro * (k1 * math.cos(ps) ** 2 - k2 * math.sin(ps) ** 2)


def _psv_sv(p, r1, r2, ro, u, v, al, ps):
    return -1j * u * v * r1**2 * r2 * ro * ((p.lam + p.B) * math.cos(ps) + (2 * p.mu + 0.5 * p.A) * math.cos(al) * math.cos(al - ps))


def _shsh_p(p, r1, r2, ro, u, v, al, ps):
    k1 = p.lam + 2 * p.mu + p.B + 0.5 * p.A
    k2 = p.mu + p.B + 0.5 * p.A
    return -1j * u * v * r1 * r2 * ro * (k1 * math.cos(al) ** 2 - k2 * math.sin(al) ** 2)


def _svsv_p(p, r1, r2, ro, u, v, al, ps):
    return -1j * u * v * r1 * r2 * ro * ((p.lam + p.B) * math.cos(al) + (0.5 * p.A + 2 * p.mu) * math.cos(ps) * math.cos(al - ps))


def _zero(p, r1, r2, ro, u, v, al, ps):
    return 0j


CLOSED_FORMS: dict[str, Callable[..., complex]] = {
    "PP->SH": _pp_sh,
    "P+SH->P": _psh_p,
    "P+SH->SH": _psh_sh,
    "P+SV->SV": _psv_sv,
    "SH+SH->P": _shsh_p,
    "SV+SV->P": _svsv_p,
    **{k: _zero for k in ZERO_CASES},
}


def closed_form_amplitude(
    case,
    p: MaterialPoint,
    magnitudes: Sequence[float],
    amplitudes: Sequence[complex],
    alpha: float,
    psi: float,
) -> complex:
    """Amplitude along the unit output direction of ``case``.

    ``magnitudes = (|xi1|, |xi2|, |xi_out|)``; ``amplitudes`` holds the
    relevant scalar of each input (``a`` for P, ``b_H`` or ``b_V`` for S).
    """
    key = _key(case)
    if key not in CLOSED_FORMS:
        raise SymbolError(f"unknown case {case!r}")
    r1, r2, ro = map(float, magnitudes)
    u, v = (complex(a) for a in amplitudes)
    return complex(CLOSED_FORMS[key](p, r1, r2, ro, u, v, float(alpha), float(psi)))


def case_amplitudes(case, cfg: InteractionConfig) -> tuple[complex, complex]:
    """Pick the scalar amplitudes that a case's closed form consumes."""
    pol1, pol2, _ = CASE_SPEC[_key(case)]
    pick = {"P": 0, "SH": 0, "SV": 1}
    return complex(cfg.amp1[pick[pol1]]), complex(cfg.amp2[pick[pol2]])


def closed_form_for_config(case, p: MaterialPoint, cfg: InteractionConfig) -> complex:
    xo = cfg.zeta1.xi + cfg.zeta2.xi
    f = cfg.frame(xo)
    mags = (np.linalg.norm(cfg.zeta1.xi), np.linalg.norm(cfg.zeta2.xi), np.linalg.norm(xo))
    return closed_form_amplitude(case, p, mags, case_amplitudes(case, cfg), f.alpha, f.psi)


def tensor_amplitude(case, p: MaterialPoint, cfg: InteractionConfig) -> complex:
    """The same amplitude from the tensor contraction (no resonance check)."""
    _, _, out = CASE_SPEC[_key(case)]
    xo = cfg.zeta1.xi + cfg.zeta2.xi
    s1, s2 = rank_one_inputs(cfg)
    h = source_symbol(p, s1, s2, xo)
    return complex(_out_basis(cfg.frame(xo))[out] @ h)


def natural_scale(case, p: MaterialPoint, cfg: InteractionConfig) -> float:
    """Typical size of an amplitude for ``cfg``: used to floor relative errors."""
    pol1, pol2, _ = CASE_SPEC[_key(case)]
    u, v = case_amplitudes(case, cfg)
    r1 = float(np.linalg.norm(cfg.zeta1.xi))
    r2 = float(np.linalg.norm(cfg.zeta2.xi))
    ro = float(np.linalg.norm(cfg.zeta1.xi + cfg.zeta2.xi))
    k = (r1 if pol1 == "P" else 1.0) * (r2 if pol2 == "P" else 1.0)
    mod = abs(p.lam) + abs(p.mu) + abs(p.A) + abs(p.B) + abs(p.C)
    return abs(u * v) * k * r1 * r2 * ro * mod


def relative_error(cf: complex, tf: complex, scale: float, floor: float = 1e-3) -> float:
    """``|cf - tf| / max(|tf|, floor * scale)``."""
    return abs(cf - tf) / max(abs(tf), floor * scale, np.finfo(float).tiny)


def case_config(
    case,
    p: MaterialPoint,
    xi1,
    xi2,
    amps: Sequence[complex] = (1.0, 1.0),
) -> InteractionConfig:
    """Forward config whose input polarizations are the ones named by ``case``."""
    pol1, pol2, _ = CASE_SPEC[_key(case)]

    def mode_amp(pol, a):
        if pol == "P":
            return "P", (a,)
        return "S", ((a, 0.0) if pol == "SH" else (0.0, a))

    m1, a1 = mode_amp(pol1, amps[0])
    m2, a2 = mode_amp(pol2, amps[1])
    return make_config(p, xi1, xi2, (m1, m2), a1, a2)


def resonant_configs(cfg: InteractionConfig, p: MaterialPoint, out_mode: Optional[str] = None):
    """Yield ``(scaled_cfg, output covector, root)`` for every resonant output."""
    for res in solve_all(cfg, p):
        if not res.interacts:
            continue
        if out_mode is not None and res.mode != ("P" if out_mode == "P" else "S"):
            continue
        for b, z in zip(res.roots, res.outputs):
            yield cfg.scaled_second(b), z, b


# -- interaction classification table ---------------------------------------------


def row_coefficients(case, p: MaterialPoint) -> tuple[float, ...]:
    key = _key(case)
    if key in ("PP->SH", "P+SH->P"):
        return (p.lam + 2 * p.B + 3 * p.mu + p.A,)
    if key in ("P+SH->SH", "SH+SH->P"):
        return (p.lam + 2 * p.mu + 0.5 * p.A + p.B, p.mu + 0.5 * p.A + p.B)
    if key in ("P+SV->SV", "SV+SV->P"):
        return (p.lam + p.B, 2 * p.mu + 0.5 * p.A)
    if key == "SH+SV->0":
        return ()
    raise SymbolError(f"unknown case {case!r}")


def classify_interaction(case, p: MaterialPoint, tol: float = 1e-12) -> str:
    """``vanishing`` | ``generically-nonvanishing`` | ``requires-interaction-condition``."""
    key = _key(case)
    coeffs = row_coefficients(key, p)
    scale = abs(p.lam) + abs(p.mu) + abs(p.A) + abs(p.B)
    if not any(abs(c) > tol * scale for c in coeffs):
        return "vanishing"
    if key in ("SH+SH->P", "SV+SV->P"):
        return "requires-interaction-condition"
    return "generically-nonvanishing"


def render_table(p: MaterialPoint) -> str:
    lines = [f"{'interaction':<12} {'classification':<32} coefficients"]
    for row in TABLE_ROWS:
        coeffs = ", ".join(f"{c:.6g}" for c in row_coefficients(row, p)) or "-"
        lines.append(f"{row.value:<12} {classify_interaction(row, p):<32} {coeffs}")
    return "\n".join(lines)


# -- angle sweeps -----------------------------------------------------------------

SWEEP_HEADER = ("case", "alpha", "psi", "amplitude_re", "amplitude_im", "closed_form", "tensor_form", "rel_err")


def _geometric_config(case, p: MaterialPoint, alpha: float, psi: float, amps) -> InteractionConfig:
    # triangle xi1 + xi2 = xi_out with the angle xi2 -> xi_out equal to psi
    r1, r2 = math.sin(psi), math.sin(alpha - psi)
    xi1 = (r1, 0.0, 0.0)
    xi2 = (r2 * math.cos(alpha), r2 * math.sin(alpha), 0.0)
    return case_config(case, p, xi1, xi2, amps)


def sweep_rows(
    case,
    p: MaterialPoint,
    alphas: Sequence[float],
    psis: Optional[Sequence[float]] = None,
    amps: Sequence[complex] = (1.0, 1.0),
) -> list[tuple]:
    """Rows of closed-form vs tensor amplitudes over an angle grid.

    With ``psis`` the symbol identity is evaluated on the triangle
    ``xi1 + xi2 = xi_out`` with angles ``(alpha, psi)``, ``0 < psi < alpha``,
    regardless of resonance. Without it each ``alpha`` is turned into unit
    inputs and every resonant output is evaluated. The closed-form and
    tensor columns hold imaginary parts (both are purely imaginary for real
    amplitudes).
    """
    key = _key(case)
    rows = []

    def emit(cfg):
        cf = closed_form_for_config(key, p, cfg)
        tf = tensor_amplitude(key, p, cfg)
        f = cfg.frame()
        err = relative_error(cf, tf, natural_scale(key, p, cfg))
        rows.append((key, f.alpha, f.psi, tf.real, tf.imag, cf.imag, tf.imag, err))

    for al in alphas:
        if psis is not None:
            for ps in psis:
                if not 0 < ps < al:
                    continue
                emit(_geometric_config(key, p, al, ps, amps))
        else:
            base = case_config(key, p, (1.0, 0.0, 0.0), (math.cos(al), math.sin(al), 0.0), amps)
            _, _, out = CASE_SPEC[key]
            for scfg, _, _ in resonant_configs(base, p, out):
                emit(scfg)
    return rows


def write_sweep_csv(path_or_file, rows: Sequence[tuple]) -> None:
    write_csv(path_or_file, SWEEP_HEADER, rows)
