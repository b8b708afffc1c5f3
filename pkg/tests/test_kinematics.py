from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiveconst.kinematics import (
    Covector,
    KinematicsError,
    RayTracingError,
    classify_boundary,
    forward_covector,
    group_velocity,
    trace_ray,
)
from fiveconst.medium import ConstantMedium, ExpressionMedium, MaterialPoint

P21 = MaterialPoint(2.0, 1.0)  # c_P = 2, c_S = 1
NU = (0.0, 0.0, 1.0)


def rk4_reference(x0, xi0, tau, mu_grad, t_end, dt):
    """Fixed-step RK4 in t for c^2 = mu = 1 + g x1 (independent oracle)."""

    def f(y):
        x, xi = y[:3], y[3:]
        c2 = 1.0 + mu_grad * x[0]
        grad = np.array([mu_grad, 0.0, 0.0])
        return np.concatenate([c2 * xi / (-tau), (xi @ xi) * grad / (2 * tau)])

    y = np.concatenate([x0, xi0]).astype(float)
    n = int(round(t_end / dt))
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y[:3], y[3:]


class TestClassifyBoundary:
    def test_hyperbolic_both(self):
        bc = classify_boundary(3.0, (1, 0, 0), NU, P21)
        assert bc.tag == {"P": "hyperbolic", "S": "hyperbolic"}
        assert bc.root["P"] ** 2 == pytest.approx(5 / 4)
        assert bc.root["S"] ** 2 == pytest.approx(8.0)

    def test_p_elliptic(self):
        bc = classify_boundary(1.5, (1, 0, 0), NU, P21)
        assert bc.tag == {"P": "elliptic", "S": "hyperbolic"}
        assert bc.root["P"].imag > 0
        assert bc.covector["P"] is None

    def test_p_glancing(self):
        bc = classify_boundary(2.0, (1, 0, 0), NU, P21)
        assert bc.tag["P"] == "glancing"
        assert bc.root["P"] == 0.0

    def test_forward_root_enters_domain(self):
        # dx/dt of the chosen root must point along -nu (inward) for either sign of tau
        for tau in (-3.0, 3.0):
            bc = classify_boundary(tau, (1, 0, 0), NU, P21)
            cv = Covector(0, (0, 0, 0), tau, bc.covector["P"], "P")
            v = group_velocity(cv, P21)
            assert v @ np.array(NU) < 0

    def test_forward_covector_on_variety(self):
        bc = classify_boundary(-3.0, (1, 0, 0), NU, P21)
        for m in ("P", "S"):
            xi = bc.covector[m]
            assert 9.0 == pytest.approx(P21.speed(m) ** 2 * xi @ xi)

    def test_errors(self):
        with pytest.raises(KinematicsError):
            classify_boundary(0.0, (0, 0, 0), NU, P21)
        with pytest.raises(KinematicsError):
            classify_boundary(1.0, (1, 0, 1), NU, P21)
        with pytest.raises(KinematicsError):
            classify_boundary(1.0, (1, 0, 0), (0, 0, 2), P21)

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(-10, 10),
        st.floats(-5, 5),
        st.floats(-5, 5),
        st.floats(0.1, 5),
        st.floats(-0.9, 5),
    )
    def test_inclusions(self, tau, a, b, mu, lam_ratio):
        if tau == 0 and a == 0 and b == 0:
            return
        p = MaterialPoint(lam_ratio * mu, mu)
        bc = classify_boundary(tau, (a, b, 0.0), NU, p)
        if bc.tag["P"] == "hyperbolic":
            assert bc.tag["S"] == "hyperbolic"
        if bc.tag["S"] == "elliptic":
            assert bc.tag["P"] == "elliptic"


class TestGroupVelocity:
    def test_examples(self):
        assert group_velocity(Covector(0, (0, 0, 0), -2, (1, 0, 0), "P"), P21) == pytest.approx([2, 0, 0])
        assert group_velocity(Covector(0, (0, 0, 0), -3, (0, 3, 0), "S"), P21) == pytest.approx([0, 1, 0])

    def test_off_variety(self):
        with pytest.raises(KinematicsError):
            group_velocity(Covector(0, (0, 0, 0), -1, (1, 0, 0), "P"), P21)

    @given(
        st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3),
        st.sampled_from(["P", "S"]),
        st.floats(0.1, 5),
        st.floats(-0.9, 5),
    )
    def test_speed_identity(self, xi, mode, mu, r):
        p = MaterialPoint(r * mu, mu)
        v = group_velocity(forward_covector(xi, p, mode), p)
        assert np.linalg.norm(v) == pytest.approx(p.speed(mode), rel=1e-12)
        assert v @ np.asarray(xi) > 0


class TestTraceRay:
    def test_homogeneous_straight(self):
        m = ConstantMedium(P21)
        start = forward_covector((1, 0, 0), P21, "P")
        path = trace_ray(start, m, (0.0, 1.5))
        assert path.x[-1] == pytest.approx([3.0, 0, 0], abs=1e-12)
        speed = np.linalg.norm(np.diff(path.x, axis=0), axis=1) / np.diff(path.t)
        assert np.max(np.abs(speed - 2.0)) < 1e-10
        assert path.max_residual < 1e-10
        assert np.all(path.tau == start.tau)

    @pytest.mark.parametrize("mode", ["P", "S"])
    def test_homogeneous_conservation(self, mode):
        m = ConstantMedium(MaterialPoint(0.7, 1.3))
        start = forward_covector((0.3, -1.2, 0.8), m.at(), mode)
        path = trace_ray(start, m, (0.0, 3.0))
        assert path.max_residual < 1e-10

    def test_gradient_medium_matches_reference(self):
        m = ExpressionMedium({"lam": 1.0, "mu": "1 + 0.1*x1"})
        p0 = m.at((0, 0, 0))
        start = forward_covector((1.0, 0.5, 0.0), p0, "S")
        # DOP853 capped at step dt = 0.01 in t versus RK4 at 1/100 of it
        h_s = 0.01 / (-2 * start.tau)
        path = trace_ray(start, m, (0.0, 1.0), max_step=h_s)
        x_ref, xi_ref = rk4_reference(start.x, start.xi, start.tau, 0.1, 1.0, 1e-4)
        assert np.max(np.abs(path.x[-1] - x_ref)) < 1e-8
        assert np.max(np.abs(path.xi[-1] - xi_ref)) < 1e-8
        assert path.max_residual < 1e-10

    def test_reversibility(self):
        m = ExpressionMedium({"lam": "1 + 0.2*x2", "mu": "1 + 0.1*x1"})
        start = forward_covector((0.6, 0.8, 0.0), m.at((0, 0, 0)), "P")
        fwd = trace_ray(start, m, (0.0, 2.0))
        back = trace_ray(fwd.end(), m, (2.0, 0.0))
        assert np.max(np.abs(back.x[-1] - start.x)) < 1e-10
        assert np.max(np.abs(back.xi[-1] - start.xi)) < 1e-10

    def test_exit_domain(self):
        m = ConstantMedium(P21)
        start = forward_covector((1, 0, 0), P21, "S")
        with pytest.raises(RayTracingError) as info:
            trace_ray(start, m, (0.0, 10.0), domain=((-1, -1, -1), (1, 1, 1)))
        assert info.value.hit_point[0] == pytest.approx(1.0)

    def test_start_off_variety(self):
        with pytest.raises(KinematicsError):
            trace_ray(Covector(0, (0, 0, 0), -1.0, (1, 0, 0), "P"), ConstantMedium(P21), (0, 1))

    def test_csv(self):
        m = ConstantMedium(P21)
        path = trace_ray(forward_covector((1, 0, 0), P21, "P"), m, (0.0, 1.0), n_samples=5)
        buf = io.StringIO()
        path.to_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "s,t,x1,x2,x3,tau,xi1,xi2,xi3,hamiltonian_residual"
        assert len(lines) == 6
        assert float(lines[-1].split(",")[2]) == pytest.approx(2.0)
