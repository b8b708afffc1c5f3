"""Three-wave resonance: outgoing characteristic covectors ``zeta1 + b zeta2``.

All quadratics are solved with unit spatial wavevectors and the forward
convention ``tau = -c |xi|``; roots are then rescaled to the actual input
magnitudes, ``b = b_unit |xi1| / |xi2|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .kinematics import MODES, Covector, forward_covector, variety_residual
from .medium import MaterialPoint

GENERIC_TOL = 1e-9
PARALLEL_TOL = 1e-12


class ResonanceError(ValueError):
    pass


def _norm(v: np.ndarray) -> float:
    return math.sqrt(float(v @ v))


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # np.cross is slow for single 3-vectors
    return np.array([u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]])


def _unit(v: np.ndarray) -> np.ndarray:
    n = _norm(v)
    if n == 0:
        raise ResonanceError("zero vector")
    return v / n


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    c = float(u @ v) / (_norm(u) * _norm(v))
    return math.acos(min(1.0, max(-1.0, c)))


def check_transversal(xi1, xi2) -> float:
    """Return ``sin`` of the angle between the wavevectors; raise if parallel."""
    xi1, xi2 = np.asarray(xi1, float), np.asarray(xi2, float)
    s = _norm(_cross(xi1, xi2)) / (_norm(xi1) * _norm(xi2))
    if not s > PARALLEL_TOL:
        raise ResonanceError("wavevectors are parallel (non-transversal intersection)")
    return s


# -- frame ----------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """Orthonormal interaction-plane frame.

    ``e_v`` is the unit normal ``xi1 x xi2 / |xi1 x xi2|``. In-plane
    transverse vectors are ``H(v) = e_v x v/|v|``, a counter-clockwise
    quarter turn about ``e_v``. ``alpha`` is the angle between the inputs
    and ``psi`` the angle between the second input and the output.
    """

    e_v: np.ndarray
    e_out: np.ndarray
    e_h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    alpha: float
    psi: float

    def gram(self) -> np.ndarray:
        m = np.stack([self.e_out, self.e_h, self.e_v])
        return m @ m.T


def transverse(e_v: np.ndarray, v: np.ndarray) -> np.ndarray:
    return _cross(e_v, _unit(np.asarray(v, float)))


def build_frame(xi1, xi2, output_xi=None, case: Optional[str] = None) -> Frame:
    """Frame for inputs ``xi1, xi2`` and output ``output_xi`` (default ``xi1 + xi2``).

    ``case`` is accepted for bookkeeping only; ``psi`` is always the angle
    between ``xi2`` and the output, which is the convention under which the
    closed-form amplitudes in :mod:`fiveconst.symbols` hold for every case.
    """
    xi1 = np.asarray(xi1, float)
    xi2 = np.asarray(xi2, float)
    check_transversal(xi1, xi2)
    out = xi1 + xi2 if output_xi is None else np.asarray(output_xi, float)
    e_v = _unit(_cross(xi1, xi2))
    e_out = _unit(out)
    return Frame(
        e_v=e_v,
        e_out=e_out,
        e_h=_cross(e_v, e_out),
        h1=transverse(e_v, xi1),
        h2=transverse(e_v, xi2),
        alpha=_angle(xi1, xi2),
        psi=_angle(xi2, out),
    )


# -- configuration ----------------------------------------------------------------


@dataclass(frozen=True)
class InteractionConfig:
    """Two incoming covectors at a common point with their amplitudes.

    ``amp1``/``amp2`` are ``(a,)`` for a P wave, whose polarization symbol is
    ``a xi``, and ``(b_H, b_V)`` for an S wave, whose polarization symbol is
    ``b_H H(xi) + b_V e_v`` with unit transverse vectors.
    """

    zeta1: Covector
    zeta2: Covector
    amp1: tuple = (1.0,)
    amp2: tuple = (1.0,)

    def __post_init__(self):
        for z, a in ((self.zeta1, self.amp1), (self.zeta2, self.amp2)):
            if z.mode not in MODES:
                raise ResonanceError("incoming covectors need modes P or S")
            want = 1 if z.mode == "P" else 2
            if len(a) != want:
                raise ResonanceError(f"{z.mode} amplitude needs {want} component(s), got {len(a)}")
        check_transversal(self.zeta1.xi, self.zeta2.xi)

    @property
    def modes(self) -> tuple[str, str]:
        return self.zeta1.mode, self.zeta2.mode

    @property
    def alpha(self) -> float:
        return _angle(self.zeta1.xi, self.zeta2.xi)

    @property
    def cos_alpha(self) -> float:
        x1, x2 = self.zeta1.xi, self.zeta2.xi
        return float(x1 @ x2) / (_norm(x1) * _norm(x2))

    def frame(self, output_xi=None) -> Frame:
        return build_frame(self.zeta1.xi, self.zeta2.xi, output_xi)

    def polarization(self, which: int) -> np.ndarray:
        z, amp = (self.zeta1, self.amp1) if which == 1 else (self.zeta2, self.amp2)
        if z.mode == "P":
            return complex(amp[0]) * z.xi.astype(complex)
        f = self.frame()
        h = f.h1 if which == 1 else f.h2
        return complex(amp[0]) * h + complex(amp[1]) * f.e_v

    def check_on_varieties(self, p: MaterialPoint, tol: float = 1e-10) -> None:
        for k, z in enumerate((self.zeta1, self.zeta2), 1):
            r = variety_residual(z, p, z.mode)
            if r > tol:
                raise ResonanceError(f"input {k} is off the {z.mode} variety (residual {r:.3e})")

    def scaled_second(self, b: float) -> "InteractionConfig":
        """Config with ``zeta2`` replaced by ``b zeta2`` (amplitudes unchanged)."""
        return InteractionConfig(self.zeta1, self.zeta2.scaled(b), self.amp1, self.amp2)


def make_config(
    p: MaterialPoint,
    xi1,
    xi2,
    modes: Sequence[str],
    amp1: tuple = None,
    amp2: tuple = None,
    x=(0.0, 0.0, 0.0),
    t: float = 0.0,
) -> InteractionConfig:
    """Forward covectors ``(-c|xi|, xi)`` for each input, bundled as a config."""
    m1, m2 = modes
    amp1 = amp1 if amp1 is not None else ((1.0,) if m1 == "P" else (1.0, 0.0))
    amp2 = amp2 if amp2 is not None else ((1.0,) if m2 == "P" else (1.0, 0.0))
    z1 = forward_covector(xi1, p, m1, t, x)
    z2 = forward_covector(xi2, p, m2, t, x)
    return InteractionConfig(z1, z2, tuple(amp1), tuple(amp2))


# -- results ------------------------------------------------------------------------


@dataclass
class ResonanceResult:
    case: str
    mode: Optional[str]
    roots: list[float]
    outputs: list[Covector]
    residuals: list[float]
    status: str = "resonant"  # resonant | no-interaction | tie
    discriminant: float = float("nan")
    notes: list[str] = field(default_factory=list)

    @property
    def interacts(self) -> bool:
        return self.status == "resonant"

    def records(self) -> list[dict]:
        if not self.outputs:
            return [{"case": self.case, "status": self.status, "mode": self.mode, "discriminant": self.discriminant}]
        return [
            {
                "case": self.case,
                "status": self.status,
                "mode": self.mode,
                "root": b,
                "tau": z.tau,
                "xi": z.xi.tolist(),
                "residual": r,
                "discriminant": self.discriminant,
            }
            for b, z, r in zip(self.roots, self.outputs, self.residuals)
        ]


def results_to_json(results: Sequence[ResonanceResult]) -> str:
    from .io import dumps

    recs = [r for res in results for r in res.records()]
    return dumps(recs)


def _prepare(cfg: InteractionConfig, p: MaterialPoint, modes: tuple[str, str]):
    if cfg.modes != modes:
        raise ResonanceError(f"expected input modes {modes}, got {cfg.modes}")
    cfg.check_on_varieties(p)
    n1 = _norm(cfg.zeta1.xi)
    n2 = _norm(cfg.zeta2.xi)
    return cfg.cos_alpha, n1 / n2


def _outputs(cfg, p, roots_unit, scale, mode):
    roots = [b * scale for b in roots_unit]
    outs, res = [], []
    for b in roots:
        z = (cfg.zeta1 + cfg.zeta2.scaled(b)).with_mode(mode)
        outs.append(z)
        res.append(variety_residual(z, p, mode))
    return roots, outs, res


def _quadratic_roots(qa: float, qb: float, qc: float) -> tuple[float, float, float]:
    """Real roots of ``qa b^2 + qb b + qc`` (stable form) and the discriminant."""
    d = qb * qb - 4 * qa * qc
    sd = math.sqrt(max(d, 0.0))
    q = -0.5 * (qb + math.copysign(sd, qb))
    r1 = q / qa
    r2 = qc / q if q != 0 else r1
    lo, hi = sorted((r1, r2))
    return lo, hi, d


def solve_pp_to_s(cfg: InteractionConfig, p: MaterialPoint) -> ResonanceResult:
    """S outputs of a P-P interaction; two negative roots with product 1 (unit scale)."""
    cos, scale = _prepare(cfg, p, ("P", "P"))
    lm, l2m = p.lam + p.mu, p.lam + 2 * p.mu
    qa, qb = lm, 2 * (l2m - p.mu * cos)
    lo, hi, d = _quadratic_roots(qa, qb, lm)
    nat = qb * qb + 4 * qa * qa
    status = "tie" if abs(d) <= GENERIC_TOL * nat else "resonant"
    roots, outs, res = _outputs(cfg, p, [hi, lo], scale, "S")
    r = ResonanceResult("PP->S", "S", roots, outs, res, status, d)
    if same_mode_roots(cfg, p):
        raise AssertionError("found a P output of a P-P interaction")
    return r


def solve_ps(cfg: InteractionConfig, p: MaterialPoint) -> tuple[ResonanceResult, ResonanceResult]:
    """P and S outputs of a P (first) and S (second) interaction."""
    swapped = cfg.modes == ("S", "P")
    if swapped:
        cfg = InteractionConfig(cfg.zeta2, cfg.zeta1, cfg.amp2, cfg.amp1)
    cos, scale = _prepare(cfg, p, ("P", "S"))
    lm, l2m = p.lam + p.mu, p.lam + 2 * p.mu
    root = math.sqrt(p.mu * l2m)
    # P output: b[(lam+mu) b + 2(cos(lam+2mu) - sqrt(mu(lam+2mu)))] = 0, drop b = 0
    lin_p = 2 * (cos * l2m - root)
    # S output: (lam+mu) + 2b(sqrt(mu(lam+2mu)) - mu cos) = 0
    lin_s = 2 * (root - p.mu * cos)
    tag = "SP" if swapped else "PS"
    out = []
    for mode, lin, b_unit in (("P", lin_p, -lin_p / lm), ("S", lin_s, None)):
        if abs(lin) <= GENERIC_TOL * (lm + abs(lin)):
            raise ResonanceError(f"degenerate configuration: vanishing linear coefficient for {mode} output")
        if b_unit is None:
            b_unit = -lm / lin
        roots, outs, res = _outputs(cfg, p, [b_unit], scale, mode)
        out.append(ResonanceResult(f"{tag}->{mode}", mode, roots, outs, res, "resonant", lin * lin))
    return out[0], out[1]


def ss_threshold(p: MaterialPoint) -> float:
    """S-S interactions produce a P wave iff ``cos(alpha)`` is below this value."""
    return -p.lam / (p.lam + 2 * p.mu)


def solve_ss_to_p(cfg: InteractionConfig, p: MaterialPoint) -> ResonanceResult:
    """P outputs of an S-S interaction, or ``status='no-interaction'``."""
    cos, scale = _prepare(cfg, p, ("S", "S"))
    lm, l2m = p.lam + p.mu, p.lam + 2 * p.mu
    qa, qb = lm, 2 * (l2m * cos - p.mu)
    d = qb * qb - 4 * qa * qa
    nat = qb * qb + 4 * qa * qa
    if same_mode_roots(cfg, p):
        raise AssertionError("found an S output of an S-S interaction")
    if abs(d) <= GENERIC_TOL * nat:
        b = -qb / (2 * qa)
        roots, outs, res = _outputs(cfg, p, [b], scale, "P")
        return ResonanceResult("SS->P", "P", roots, outs, res, "tie", d, ["double root at the interaction threshold"])
    if d < 0:
        return ResonanceResult("SS->P", None, [], [], [], "no-interaction", d)
    lo, hi, _ = _quadratic_roots(qa, qb, qa)
    roots, outs, res = _outputs(cfg, p, [hi, lo], scale, "P")
    return ResonanceResult("SS->P", "P", roots, outs, res, "resonant", d)


def solve_all(cfg: InteractionConfig, p: MaterialPoint) -> list[ResonanceResult]:
    m = cfg.modes
    if m == ("P", "P"):
        return [solve_pp_to_s(cfg, p)]
    if m == ("S", "S"):
        return [solve_ss_to_p(cfg, p)]
    return list(solve_ps(cfg, p))


def same_mode_roots(cfg: InteractionConfig, p: MaterialPoint, b_grid=None, tol: float = 1e-10) -> list[float]:
    """Nonzero ``b`` on a grid where ``zeta1 + b zeta2`` lies on the inputs' shared variety.

    Only meaningful when both inputs have the same mode. Looks for sign
    changes and near-zeros of the scaled Hamiltonian; ``b = 0`` is excluded.
    """
    m1, m2 = cfg.modes
    if m1 != m2:
        raise ResonanceError("same-mode scan needs equal input modes")
    if b_grid is None:
        b_grid = np.concatenate([-np.logspace(-3, 3, 400)[::-1], np.logspace(-3, 3, 400)])
    c2 = p.speed(m1) ** 2
    b = np.asarray(b_grid, float)
    tau = cfg.zeta1.tau + b * cfg.zeta2.tau
    xi = cfg.zeta1.xi[None, :] + b[:, None] * cfg.zeta2.xi[None, :]
    x2 = np.einsum("ij,ij->i", xi, xi)
    val = (tau * tau - c2 * x2) / (tau * tau + c2 * x2)
    live = b != 0
    found = [float(v) for v in b[live & (np.abs(val) < tol)]]
    # sign changes between neighbours on the same side of zero, skipping b = 0
    j = np.flatnonzero(live[:-1] & live[1:] & (b[:-1] * b[1:] > 0) & (np.sign(val[:-1]) != np.sign(val[1:]))
                       & (np.abs(val[1:]) >= tol))
    found += [float(0.5 * (b[k] + b[k + 1])) for k in j]
    return sorted(found)
