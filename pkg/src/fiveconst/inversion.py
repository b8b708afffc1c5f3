"""Recovery of (lambda, mu) from travel times and (A, B) from symbol amplitudes.

Every closed-form amplitude is ``prefactor(geometry) * (affine in A, B)``
once ``lambda`` and ``mu`` are known, so each measurement contributes one
real linear equation in ``(A, B)``:

==============  ====================================================
case            equation after dividing by the prefactor
==============  ====================================================
PP->SH, P+SH->P lam + 3 mu + A + 2B
P+SH->SH        (lam+2mu+B+A/2) cos^2 psi - (mu+B+A/2) sin^2 psi
SH+SH->P        same with alpha in place of psi
P+SV->SV        (lam+B) cos psi + (2mu+A/2) cos alpha cos(alpha-psi)
SV+SV->P        (lam+B) cos alpha + (2mu+A/2) cos psi cos(alpha-psi)
==============  ====================================================

The in-plane rows (first three) only involve ``A + 2B``; an SV row is
needed to separate ``A`` from ``B``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import io as fio
from .medium import MaterialPoint, MediumError
from .symbols import (
    CASE_SPEC,
    CLOSED_FORMS,
    ZERO_CASES,
    case_config,
    closed_form_amplitude,
    interaction_symbol,
    natural_scale,
    rank_one_inputs,
    resonant_configs,
)

DEGENERATE_TOL = 1e-12
RIDGE_TOL = 1e-6
RIDGE = 1e-12
SUPPORTED_CASES = ("PP->SH", "P+SH->P", "P+SH->SH", "SH+SH->P", "P+SV->SV", "SV+SV->P")
IN_PLANE = ("PP->SH", "P+SH->P", "P+SH->SH", "SH+SH->P")
SV_CASES = ("P+SV->SV", "SV+SV->P")


class InversionError(ValueError):
    pass


class DegenerateSystemError(InversionError):
    pass


# -- travel times -------------------------------------------------------------------


@dataclass
class TravelTime:
    start: Sequence[float]
    end: Sequence[float]
    mode: str
    time: float

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.asarray(self.end, float) - np.asarray(self.start, float)))


def fit_speeds(travel_times: Iterable[TravelTime]) -> dict:
    """Least-squares slowness per mode from straight chords: ``t = s L``."""
    acc = {"P": [0.0, 0.0, 0], "S": [0.0, 0.0, 0]}
    for tt in travel_times:
        if tt.mode not in acc:
            raise InversionError(f"unknown mode {tt.mode!r}")
        L = tt.length
        if L <= 0 or tt.time <= 0:
            raise InversionError("travel times need positive chord length and time")
        acc[tt.mode][0] += L * tt.time
        acc[tt.mode][1] += L * L
        acc[tt.mode][2] += 1
    out = {}
    for m, (lt, ll, n) in acc.items():
        if n == 0:
            raise InversionError(f"at least one {m} traversal is required")
        out[m] = ll / lt
    return out


def recover_lame(travel_times: Iterable[TravelTime]) -> tuple[float, float]:
    """``(lambda, mu)`` from P and S travel times along straight chords."""
    c = fit_speeds(list(travel_times))
    cp, cs = c["P"], c["S"]
    if cs >= cp:
        raise InversionError(f"inconsistent times: c_S = {cs:.6g} >= c_P = {cp:.6g}")
    lam, mu = cp**2 - 2 * cs**2, cs**2
    if mu <= 0 or lam + mu <= 0:
        raise InversionError("fitted speeds violate mu > 0, lambda + mu > 0")
    return lam, mu


# -- measurements ---------------------------------------------------------------------


@dataclass
class Measurement:
    """One measured interaction amplitude.

    ``magnitudes = (|xi1|, |xi2|, |xi_out|)``; ``amplitudes`` are the scalar
    input amplitudes the case's closed form consumes; ``noise`` is the
    absolute uncertainty of ``measured`` (0 when unknown).
    """

    case: str
    alpha: float
    psi: float
    magnitudes: Sequence[float]
    amplitudes: Sequence[complex]
    measured: complex
    noise: float = 0.0

    def __post_init__(self):
        if self.case not in SUPPORTED_CASES:
            raise InversionError(f"unsupported case {self.case!r}; use one of {SUPPORTED_CASES}")
        if not (0 < self.alpha < math.pi and 0 < self.psi < math.pi):
            raise InversionError("angles must lie in (0, pi)")
        if len(self.magnitudes) != 3 or len(self.amplitudes) != 2:
            raise InversionError("need three magnitudes and two amplitudes")
        self.magnitudes = tuple(float(m) for m in self.magnitudes)
        self.amplitudes = tuple(complex(a) for a in self.amplitudes)
        self.measured = complex(self.measured)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Measurement":
        d = dict(d)
        d["amplitudes"] = [fio.complex_from(a) for a in d["amplitudes"]]
        d["measured"] = fio.complex_from(d["measured"])
        return cls(**d)


def synthesize(p: MaterialPoint, case: str, alpha: float, psi: float, magnitudes=(1.0, 1.0, 1.0), amplitudes=(1.0, 1.0)) -> Measurement:
    """Noiseless measurement from the closed form."""
    val = closed_form_amplitude(case, p, magnitudes, amplitudes, alpha, psi)
    return Measurement(case, alpha, psi, magnitudes, amplitudes, val)


def _row(m: Measurement, lam: float, mu: float) -> tuple[complex, np.ndarray, float]:
    """``(prefactor, [dA, dB], constant)`` with ``amplitude = pref * (row.x + const)``."""
    r1, r2, ro = m.magnitudes
    u, v = m.amplitudes
    al, ps = m.alpha, m.psi
    if m.case == "PP->SH":
        pref = -1j * u * v * r1**2 * r2**2 * ro * math.cos(al) * math.sin(2 * ps - al)
        return pref, np.array([1.0, 2.0]), lam + 3 * mu
    if m.case == "P+SH->P":
        pref = 1j * u * v * r1**2 * r2 * ro * math.cos(al - ps) * math.sin(al + ps)
        return pref, np.array([1.0, 2.0]), lam + 3 * mu
    if m.case in ("P+SH->SH", "SH+SH->P"):
        th = ps if m.case == "P+SH->SH" else al
        pref = -1j * u * v * (r1**2 if m.case == "P+SH->SH" else r1) * r2 * ro
        c2, s2 = math.cos(th) ** 2, math.sin(th) ** 2
        return pref, np.array([0.5, 1.0]) * (c2 - s2), (lam + 2 * mu) * c2 - mu * s2
    if m.case == "P+SV->SV":
        pref = -1j * u * v * r1**2 * r2 * ro
        a, b = math.cos(ps), math.cos(al) * math.cos(al - ps)
    else:  # SV+SV->P
        pref = -1j * u * v * r1 * r2 * ro
        a, b = math.cos(al), math.cos(ps) * math.cos(al - ps)
    # (lam + B) a + (2 mu + A/2) b
    return pref, np.array([0.5 * b, a]), lam * a + 2 * mu * b


def angle_determinant(psi1: float, psi2: float) -> float:
    """``det(v(psi1), v(psi2))`` with ``v(psi) = (cos^2 psi, sin^2 psi)``."""
    return math.cos(psi1) ** 2 * math.sin(psi2) ** 2 - math.sin(psi1) ** 2 * math.cos(psi2) ** 2


@dataclass
class RecoveryResult:
    lam: float
    mu: float
    A: float
    B: float
    method: str
    determinant: float
    diagnostics: dict = field(default_factory=dict)
    residuals: list = field(default_factory=list)
    uncertainty: Optional[dict] = None

    @property
    def point(self) -> MaterialPoint:
        return MaterialPoint(self.lam, self.mu, self.A, self.B)

    def as_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return fio.dumps(self.as_dict())


def _solve(rows: np.ndarray, rhs: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, dict]:
    """Weighted least squares with determinant checks and ridge fallback."""
    if len(rows) < 2:
        raise DegenerateSystemError("at least two independent measurements are required")
    # determinant of the unweighted system with unit-normalized rows
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0):
        raise DegenerateSystemError("a measurement carries no information on (A, B)")
    un = rows / norms[:, None]
    det = float(math.sqrt(max(np.linalg.det(un.T @ un), 0.0)))
    if len(rows) == 2:
        det = float(abs(np.linalg.det(un)))
    if det < DEGENERATE_TOL:
        raise DegenerateSystemError(f"degenerate angle set (determinant {det:.3e})")
    W = rows * weights[:, None]
    y = rhs * weights
    N = W.T @ W
    ridge = det < RIDGE_TOL
    if ridge:
        N = N + RIDGE * np.trace(N) * np.eye(2)
    x = np.linalg.solve(N, W.T @ y)
    res = W @ x - y
    diag = {
        "determinant": det,
        "condition": float(np.linalg.cond(un)),
        "ridge": bool(ridge),
        "rms_residual": float(np.sqrt(np.mean(res**2))),
    }
    if len(rows) > 2:
        dof = len(rows) - 2
        s2 = float(res @ res) / dof
        cov = s2 * np.linalg.inv(N)
        diag["std"] = {"A": float(math.sqrt(max(cov[0, 0], 0))), "B": float(math.sqrt(max(cov[1, 1], 0)))}
    return x, {**diag, "weighted_residuals": [float(r) for r in res]}


def _assemble(ms: Sequence[Measurement], lam: float, mu: float):
    rows, rhs, w, imag = [], [], [], []
    gls = all(m.noise > 0 and math.isfinite(m.noise) for m in ms)
    for m in ms:
        pref, row, const = _row(m, lam, mu)
        if abs(pref) == 0:
            raise DegenerateSystemError(f"{m.case} at alpha={m.alpha:.4g}, psi={m.psi:.4g} has a vanishing prefactor")
        q = m.measured / pref
        rows.append(row)
        rhs.append(q.real - const)
        # amplitude-space residual, divided by the stated noise when every row has one
        w.append(abs(pref) / m.noise if gls else abs(pref))
        imag.append(abs(q.imag) / max(abs(q), 1e-300))
    return np.array(rows), np.array(rhs), np.array(w), imag


def recover_AB(measurements: Sequence[Measurement], lam: float, mu: float) -> RecoveryResult:
    """``(A, B)`` from P+SV->SV amplitudes via ``(lam + B, 2 mu + A/2)``."""
    ms = list(measurements)
    if any(m.case != "P+SV->SV" for m in ms):
        raise InversionError("recover_AB uses P+SV->SV measurements only")
    rows, rhs, w, imag = _assemble(ms, lam, mu)
    x, diag = _solve(rows, rhs, w)
    A, B = float(x[0]), float(x[1])
    diag.update(imaginary_fraction=max(imag), n_measurements=len(ms), s1=lam + B, s2=2 * mu + 0.5 * A)
    return RecoveryResult(lam, mu, A, B, "P+SV->SV", diag["determinant"], diag, diag.pop("weighted_residuals"),
                          diag.get("std"))


def recover_AB_alt(measurements: Sequence[Measurement], lam: float, mu: float) -> RecoveryResult:
    """``(A, B)`` from in-plane rows plus at least one SV row.

    In-plane rows fix ``A + 2B``. Pairs of P+SH->SH rows also yield the
    coefficient pair ``(lam+2mu+B+A/2, mu+B+A/2)``, whose solvability is the
    angle determinant reported in the diagnostics. SV rows break the
    remaining one-parameter ambiguity.
    """
    ms = list(measurements)
    in_plane = [m for m in ms if m.case in IN_PLANE]
    if not any(m.case in SV_CASES for m in ms):
        raise DegenerateSystemError(
            "in-plane interactions determine only A + 2B; add a P+SV->SV or SV+SV->P measurement"
        )
    diag_extra = {}
    sh = [m for m in in_plane if m.case == "P+SH->SH"]
    if len(sh) >= 2:
        k, det_psi = _sh_pair(sh, lam, mu)
        diag_extra.update(sh_pair=k, angle_determinant=det_psi, lame_consistency=k[0] - k[1] - (lam + mu))
    rows, rhs, w, imag = _assemble(ms, lam, mu)
    x, diag = _solve(rows, rhs, w)
    A, B = float(x[0]), float(x[1])
    diag.update(diag_extra)
    diag.update(imaginary_fraction=max(imag), n_measurements=len(ms), cases=sorted({m.case for m in ms}),
                a_plus_2b=A + 2 * B)
    return RecoveryResult(lam, mu, A, B, "mixed", diag["determinant"], diag, diag.pop("weighted_residuals"),
                          diag.get("std"))


def _sh_pair(sh: Sequence[Measurement], lam: float, mu: float) -> tuple[list, float]:
    """Solve the P+SH->SH rows for ``(k1, k2)`` in ``k1 cos^2 - k2 sin^2``."""
    M, y, w = [], [], []
    for m in sh:
        r1, r2, ro = m.magnitudes
        u, v = m.amplitudes
        pref = -1j * u * v * r1**2 * r2 * ro
        M.append([math.cos(m.psi) ** 2, -math.sin(m.psi) ** 2])
        y.append((m.measured / pref).real)
        w.append(abs(pref))
    M, y, w = np.array(M), np.array(y), np.array(w)
    det_psi = max(abs(angle_determinant(a.psi, b.psi)) for i, a in enumerate(sh) for b in sh[i + 1:])
    if det_psi < DEGENERATE_TOL:
        raise DegenerateSystemError(f"P+SH->SH angles are degenerate (determinant {det_psi:.3e})")
    k = np.linalg.lstsq(M * w[:, None], y * w, rcond=None)[0]
    return [float(k[0]), float(k[1])], float(det_psi)


# -- C invisibility -------------------------------------------------------------------


def c_sensitivity(cfg, out_mode: str) -> complex:
    """Exact ``d(amplitude)/dC`` of one projected symbol.

    The symbol is linear in ``C`` and the ``C`` term of ``g`` is
    ``-2 C tr(W1) tr(W2) I``, so ``dh/dC = -2i tr(W1) tr(W2) xi_out``.
    """
    s1, s2 = rank_one_inputs(cfg)
    xo = cfg.zeta1.xi + cfg.zeta2.xi
    fr = cfg.frame(xo)
    basis = {"P": fr.e_out, "SH": fr.e_h, "SV": fr.e_v}
    return complex(-2j * s1.strain_trace() * s2.strain_trace() * (basis[out_mode] @ xo))


def c_identifiability_report(p: MaterialPoint, perturbations: Sequence[float] = (10.0,), n_configs: int = 50,
                             seed: int = 0) -> dict:
    """Sensitivity of every projected interaction symbol to ``C``.

    For each case (including the identically vanishing ones) draws
    resonant configurations and records the exact ``C``-derivative.
    ``max_sensitivity`` is ``|d amplitude / dC|`` in units of the
    amplitude scale per unit modulus of that configuration, so it does not
    grow with the wavevector and amplitude sizes; ``max_abs_sensitivity``
    is the raw derivative and ``max_change = max|dC| * max_abs_sensitivity``.
    ``max_direct_change`` is the finite difference of two full symbol
    evaluations; it is bounded by rounding of the whole symbol, not by
    ``C``, and is kept for reference.
    """
    rng = np.random.default_rng(seed)
    per_case = {}
    for case, (_, _, out) in CASE_SPEC.items():
        sens = rel = direct = 0.0
        made = tries = 0
        while made < n_configs and tries < 50 * n_configs:
            tries += 1
            al = rng.uniform(0.05, math.pi - 0.05)
            r2 = rng.uniform(0.3, 3.0)
            rot = _rotation(rng)
            xi1, xi2 = rot @ [1.0, 0.0, 0.0], rot @ [r2 * math.cos(al), r2 * math.sin(al), 0.0]
            base = case_config(case, p, xi1, xi2, rng.normal(size=2))
            for cfg, z, _ in resonant_configs(base, p, out):
                d = abs(c_sensitivity(cfg, out))
                sens = max(sens, d)
                rel = max(rel, d / (natural_scale(case, p, cfg) / _moduli_sum(p)))
                v0 = interaction_symbol(p, cfg, z, out).amplitude
                for dc in perturbations:
                    v1 = interaction_symbol(p.replace(C=p.C + dc), cfg, z, out).amplitude
                    direct = max(direct, abs(v1 - v0))
                made += 1
        dmax = max((abs(d) for d in perturbations), default=0.0)
        per_case[case] = {"max_sensitivity": rel, "max_abs_sensitivity": sens, "max_change": dmax * sens,
                          "max_direct_change": direct, "configs": made}
    return {
        "medium": p.as_dict(),
        "perturbations": [float(d) for d in perturbations],
        "cases": per_case,
        "max_sensitivity": max(v["max_sensitivity"] for v in per_case.values()),
        "max_abs_sensitivity": max(v["max_abs_sensitivity"] for v in per_case.values()),
        "max_change": max(v["max_change"] for v in per_case.values()),
        "max_direct_change": max(v["max_direct_change"] for v in per_case.values()),
    }


def _moduli_sum(p: MaterialPoint) -> float:
    return abs(p.lam) + abs(p.mu) + abs(p.A) + abs(p.B) + abs(p.C)


def _rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    return q * np.sign(np.diag(r))


# -- Monte Carlo -------------------------------------------------------------------------


def _noisy_trial(args) -> tuple[float, float]:
    ms, lam, mu, noise, seed, method = args
    rng = np.random.default_rng(seed)
    noisy = []
    for m in ms:
        y = m.measured * (1 + noise * rng.standard_normal())
        noisy.append(Measurement(m.case, m.alpha, m.psi, m.magnitudes, m.amplitudes, y, noise * abs(y)))
    r = (recover_AB if method == "sv" else recover_AB_alt)(noisy, lam, mu)
    return r.A, r.B


def noise_trials(ms: Sequence[Measurement], lam: float, mu: float, noise: float, trials: int = 200, seed: int = 0,
                 method: str = "sv", workers: int = 1) -> np.ndarray:
    """Recovered ``(A, B)`` under multiplicative Gaussian noise, one seed per trial."""
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    jobs = [(list(ms), lam, mu, noise, int(s), method) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return np.array(list(ex.map(_noisy_trial, jobs)))
    return np.array([_noisy_trial(j) for j in jobs])


# -- simulator reports -------------------------------------------------------------------


NOISE_FACTOR = 3.0


def report_noise(rep: dict) -> float:
    """Absolute uncertainty of a measured symbol from the band-fit coherence."""
    coh = float(rep["coherence"])
    h = abs(fio.complex_from(rep["measured_closed_form_normalized"]))
    if coh <= 0:
        return math.inf
    return h * math.sqrt(max(1.0 - coh, 0.0) / coh)


def measurement_from_report(rep) -> Measurement:
    d = rep.as_dict() if hasattr(rep, "as_dict") else dict(rep)
    if d.get("case") not in SUPPORTED_CASES:
        raise InversionError(f"report case {d.get('case')!r} cannot be inverted")
    return Measurement(
        d["case"],
        float(d["alpha"]),
        float(d["psi"]),
        d["magnitudes"],
        [fio.complex_from(a) for a in d["amplitudes"]],
        fio.complex_from(d["measured_closed_form_normalized"]),
        report_noise(d),
    )


def end_to_end_recovery(reports: Sequence, lam: Optional[float] = None, mu: Optional[float] = None) -> RecoveryResult:
    """Recover ``(A, B)`` from simulator experiment reports.

    ``lam``/``mu`` default to the (homogeneous) medium recorded in the
    reports, standing in for the travel-time step. Measurements whose
    amplitude is below ``3 x`` their noise estimate are reported as
    non-informative and left out of the solve.
    """
    if not reports:
        raise InversionError("no experiment reports")
    ds = [r.as_dict() if hasattr(r, "as_dict") else dict(r) for r in reports]
    if lam is None or mu is None:
        media = {(d["medium"]["lam"], d["medium"]["mu"]) for d in ds}
        if len(media) != 1:
            raise InversionError("reports come from different (lambda, mu); pass them explicitly")
        lam, mu = media.pop()
    used, skipped = [], []
    for d in ds:
        m = measurement_from_report(d)
        if not abs(m.measured) > NOISE_FACTOR * m.noise:
            skipped.append({"name": d.get("name"), "case": m.case, "amplitude": abs(m.measured), "noise": m.noise,
                            "status": "non-informative"})
            continue
        used.append(m)
    if not used:
        raise DegenerateSystemError("all measurements are non-informative")
    if all(m.case == "P+SV->SV" for m in used):
        res = recover_AB(used, lam, mu)
    else:
        res = recover_AB_alt(used, lam, mu)
    res.diagnostics["non_informative"] = skipped
    res.diagnostics["experiments"] = [d.get("name") for d in ds]
    return res


def read_measurements(path) -> list[Measurement]:
    data = fio.read_json(path)
    items = data["measurements"] if isinstance(data, dict) else data
    return [Measurement.from_dict(d) for d in items]


def write_measurements(path, ms: Sequence[Measurement], extra: Optional[dict] = None) -> None:
    obj = dict(extra or {})
    obj["measurements"] = [m.as_dict() for m in ms]
    fio.write_json(path, obj)


def check_point(lam: float, mu: float) -> None:
    try:
        MaterialPoint(lam, mu)
    except MediumError as exc:
        raise InversionError(str(exc)) from exc


__all__ = [
    "CLOSED_FORMS",
    "DegenerateSystemError",
    "InversionError",
    "Measurement",
    "RecoveryResult",
    "TravelTime",
    "ZERO_CASES",
    "angle_determinant",
    "c_identifiability_report",
    "c_sensitivity",
    "end_to_end_recovery",
    "fit_speeds",
    "measurement_from_report",
    "noise_trials",
    "read_measurements",
    "recover_AB",
    "recover_AB_alt",
    "recover_lame",
    "synthesize",
    "write_measurements",
]
