from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiveconst.kinematics import variety_residual
from fiveconst.medium import MaterialPoint
from fiveconst.resonance import (
    ResonanceError,
    build_frame,
    make_config,
    results_to_json,
    same_mode_roots,
    solve_pp_to_s,
    solve_ps,
    solve_ss_to_p,
    ss_threshold,
)


def unit_pair(cos_a):
    return (1.0, 0.0, 0.0), (cos_a, math.sqrt(1 - cos_a**2), 0.0)


def quad_roots(a, b, c):
    d = math.sqrt(b * b - 4 * a * c)
    return sorted([(-b - d) / (2 * a), (-b + d) / (2 * a)])


media = st.tuples(st.floats(0.2, 5), st.floats(-0.8, 4)).map(lambda t: MaterialPoint(t[0] * t[1], t[0]))
angles = st.floats(0.05, math.pi - 0.05)


class TestPPtoS:
    def test_orthogonal_example(self):
        p = MaterialPoint(0.0, 1.0)
        r = solve_pp_to_s(make_config(p, *unit_pair(0.0), ("P", "P")), p)
        assert sorted(r.roots) == pytest.approx([-2 - math.sqrt(3), -2 + math.sqrt(3)], rel=1e-14)
        for z in r.outputs:
            assert z.tau**2 == pytest.approx(1.0 * z.xi @ z.xi, rel=1e-12)

    def test_obtuse_example(self):
        p = MaterialPoint(1.0, 1.0)
        r = solve_pp_to_s(make_config(p, *unit_pair(-0.5), ("P", "P")), p)
        assert sorted(r.roots) == pytest.approx(sorted([(-7 - math.sqrt(33)) / 4, (-7 + math.sqrt(33)) / 4]))

    def test_parallel_rejected(self):
        p = MaterialPoint(1.0, 1.0)
        with pytest.raises(ResonanceError):
            make_config(p, (1, 0, 0), (2, 0, 0), ("P", "P"))

    @settings(max_examples=200, deadline=None)
    @given(media, angles, st.floats(0.2, 5), st.floats(0.2, 5))
    def test_membership_and_reciprocity(self, p, al, r1, r2):
        cfg = make_config(p, (r1, 0, 0), (r2 * math.cos(al), r2 * math.sin(al), 0), ("P", "P"))
        r = solve_pp_to_s(cfg, p)
        assert len(r.roots) == 2 and all(b < 0 for b in r.roots)
        assert max(r.residuals) < 1e-10
        b_unit = [b * r2 / r1 for b in r.roots]
        assert b_unit[0] * b_unit[1] == pytest.approx(1.0, abs=1e-12)

    def test_no_p_output(self):
        p = MaterialPoint(1.0, 1.0)
        cfg = make_config(p, *unit_pair(0.3), ("P", "P"))
        assert same_mode_roots(cfg, p, np.linspace(-50, 50, 20001)) == []


class TestPS:
    def test_example(self):
        p = MaterialPoint(0.0, 1.0)
        rp, rs = solve_ps(make_config(p, *unit_pair(0.0), ("P", "S")), p)
        assert rp.roots == pytest.approx([2 * math.sqrt(2)])
        assert rs.roots == pytest.approx([-1 / (2 * math.sqrt(2))])
        assert rp.residuals[0] < 1e-12 and rs.residuals[0] < 1e-12

    def test_zero_root_is_trivial(self):
        # b = 0 gives zeta1 itself, which is on the P variety
        p = MaterialPoint(1.0, 1.0)
        cfg = make_config(p, *unit_pair(0.2), ("P", "S"))
        assert variety_residual(cfg.zeta1, p, "P") < 1e-15
        rp, _ = solve_ps(cfg, p)
        assert rp.roots[0] != 0.0

    def test_swapped_order(self):
        p = MaterialPoint(1.0, 2.0)
        a = solve_ps(make_config(p, *unit_pair(0.3), ("P", "S")), p)
        xi1, xi2 = unit_pair(0.3)
        b = solve_ps(make_config(p, xi2, xi1, ("S", "P")), p)
        assert a[0].roots == pytest.approx(b[0].roots)
        assert b[0].case == "SP->P"

    @settings(max_examples=200, deadline=None)
    @given(media, angles, st.floats(0.2, 5), st.floats(0.2, 5))
    def test_membership(self, p, al, r1, r2):
        cfg = make_config(p, (r1, 0, 0), (r2 * math.cos(al), r2 * math.sin(al), 0), ("P", "S"))
        for r in solve_ps(cfg, p):
            assert r.residuals[0] < 1e-10


class TestSStoP:
    def test_example(self):
        p = MaterialPoint(0.0, 1.0)
        r = solve_ss_to_p(make_config(p, *unit_pair(-0.75), ("S", "S")), p)
        assert r.interacts
        assert sorted(r.roots) == pytest.approx(sorted([(5 - math.sqrt(21)) / 2, (5 + math.sqrt(21)) / 2]))

    def test_no_interaction(self):
        p = MaterialPoint(0.0, 1.0)
        r = solve_ss_to_p(make_config(p, *unit_pair(0.5), ("S", "S")), p)
        assert r.status == "no-interaction" and r.roots == []

    def test_threshold_on_grid(self):
        p = MaterialPoint(1.0, 1.0)
        c0 = ss_threshold(p)
        for c in np.linspace(-0.99, 0.99, 199):
            if abs(c - c0) < 1e-6:
                continue
            r = solve_ss_to_p(make_config(p, *unit_pair(c), ("S", "S")), p)
            assert r.interacts == (c < c0)

    @settings(max_examples=200, deadline=None)
    @given(media, st.floats(0.0, 1.0), st.floats(0.2, 5), st.floats(0.2, 5))
    def test_reciprocity(self, p, frac, r1, r2):
        c0 = ss_threshold(p)
        c = -1 + 1e-3 + frac * (c0 + 1 - 2e-3)
        al = math.acos(c)
        cfg = make_config(p, (r1, 0, 0), (r2 * math.cos(al), r2 * math.sin(al), 0), ("S", "S"))
        r = solve_ss_to_p(cfg, p)
        if r.status != "resonant":
            return
        assert max(r.residuals) < 1e-10
        b_unit = [b * r2 / r1 for b in r.roots]
        assert b_unit[0] * b_unit[1] == pytest.approx(1.0, abs=1e-12)

    def test_no_s_output(self):
        p = MaterialPoint(1.0, 1.0)
        cfg = make_config(p, *unit_pair(-0.8), ("S", "S"))
        assert same_mode_roots(cfg, p, np.linspace(-50, 50, 20001)) == []


@settings(max_examples=100, deadline=None)
@given(media, angles, st.floats(0.1, 10))
def test_scale_invariance(p, al, s):
    xi1, xi2 = unit_pair(math.cos(al))
    base = solve_pp_to_s(make_config(p, xi1, xi2, ("P", "P")), p)
    scaled = solve_pp_to_s(make_config(p, xi1, s * np.asarray(xi2), ("P", "P")), p)
    assert np.asarray(scaled.roots) * s == pytest.approx(base.roots, rel=1e-12)
    for z0, z1 in zip(base.outputs, scaled.outputs):
        np.testing.assert_allclose(z1.xi, z0.xi, rtol=1e-12, atol=1e-12)


class TestFrame:
    def test_example(self):
        f = build_frame((1, 0, 0), (0, 1, 0), (1, 1, 0))
        assert abs(f.e_v[2]) == pytest.approx(1.0)
        assert abs(f.e_h @ np.array([1, -1, 0]) / math.sqrt(2)) == pytest.approx(1.0)
        assert f.alpha == pytest.approx(math.pi / 2)

    def test_parallel(self):
        with pytest.raises(ResonanceError):
            build_frame((1, 0, 0), (-2, 0, 0))

    def test_gram_random(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            x1, x2 = rng.normal(size=(2, 3))
            f = build_frame(x1, x2)
            assert np.max(np.abs(f.gram() - np.eye(3))) < 1e-14
            assert abs(f.h1 @ x1) < 1e-14 * np.linalg.norm(x1)
            assert math.cos(f.alpha) == pytest.approx(x1 @ x2 / np.linalg.norm(x1) / np.linalg.norm(x2), abs=1e-12)


def test_json_export():
    p = MaterialPoint(0.0, 1.0)
    txt = results_to_json([solve_ss_to_p(make_config(p, *unit_pair(0.5), ("S", "S")), p)])
    assert '"no-interaction"' in txt
