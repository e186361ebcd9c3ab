import numpy as np
import pytest
from scipy.integrate import solve_ivp

from beris2d import (
    BlowUpError,
    CFLViolation,
    Coefficients,
    QTensorField,
    SimulationState,
    StepperConfig,
    TensorField2,
    VelocityField,
    corotational_transport,
    run,
    shape_tensor_s,
    step,
    vorticity_and_strain,
    zero_q,
    zero_velocity,
)
from beris2d._kernels import kernels
from beris2d.spectral import get_ops

from conftest import random_q, random_u


def const_q(grid, q1, q2):
    return QTensorField(
        grid, np.full((grid.n, grid.n), q1), np.full((grid.n, grid.n), q2)
    )


def relax_coeffs(a=-0.1, c=1.0, l4=1.0):
    return Coefficients(nu=1.0, l1=1.0, l2=0.0, l3=0.0, l4=l4, a=a, b=0.0, c=c)


class TestVorticityAndStrain:
    def test_shear_mode(self, grid32):
        x1, x2 = grid32.coords()
        u = VelocityField(grid32, np.sin(2 * np.pi * x2), np.zeros((32, 32)))
        omega, strain = vorticity_and_strain(u)
        expect = np.pi * np.cos(2 * np.pi * x2)
        assert np.abs(omega.m12 - expect).max() < 1e-11
        assert np.abs(strain.m12 - expect).max() < 1e-11

    def test_sum_reproduces_gradient(self, grid32, ops32):
        u = random_u(grid32, seed=1)
        omega, strain = vorticity_and_strain(u)
        du12 = ops32.ifft(1j * ops32.k2o * ops32.fft(u.u1))
        assert np.abs(strain.m12 + omega.m12 - du12).max() < 1e-12 * max(
            np.abs(du12).max(), 1.0
        )

    def test_traceless_strain(self, grid32):
        u = random_u(grid32, seed=2)
        _, strain = vorticity_and_strain(u)
        assert np.abs(strain.trace()).max() < 1e-12 * max(np.abs(strain.m11).max(), 1.0)


class TestCorotationalTransport:
    def test_zero_velocity(self, grid32):
        q = random_q(grid32, seed=3)
        t = corotational_transport(zero_velocity(grid32), q)
        assert np.abs(t.q1).max() == 0.0 and np.abs(t.q2).max() == 0.0

    def test_constant_q_rotation_only(self, grid32, ops32):
        q = const_q(grid32, 0.2, -0.3)
        u = random_u(grid32, seed=4)
        t = corotational_transport(u, q, dealias=False)
        du12 = ops32.ifft(1j * ops32.k2o * ops32.fft(u.u1))
        du21 = ops32.ifft(1j * ops32.k1o * ops32.fft(u.u2))
        w = 0.5 * (du12 - du21)
        r1, r2 = kernels.rotation(w, q.q1, q.q2)
        assert np.array_equal(t.q1, r1) and np.array_equal(t.q2, r2)

    def test_commutator_orthogonal_to_q(self, grid32, ops32):
        q = random_q(grid32, seed=5)
        u = random_u(grid32, seed=6)
        du12 = ops32.ifft(1j * ops32.k2o * ops32.fft(u.u1))
        du21 = ops32.ifft(1j * ops32.k1o * ops32.fft(u.u2))
        w = 0.5 * (du12 - du21)
        r1, r2 = kernels.rotation(w, q.q1, q.q2)
        pairing = ops32.integral(2 * (r1 * q.q1 + r2 * q.q2))
        assert abs(pairing) < 1e-10


class TestShapeTensor:
    def test_xi_zero_matches_negated_rotation(self, grid32):
        q = random_q(grid32, seed=7)
        u = random_u(grid32, seed=8)
        ops = get_ops(grid32)
        du11, du12 = map(ops.ifft, ops.grad_hat(ops.fft(u.u1)))
        du21, du22 = map(ops.ifft, ops.grad_hat(ops.fft(u.u2)))
        grad_u = TensorField2(grid32, du11, du12, du21, du22)
        s = shape_tensor_s(grad_u, q, xi=0.0)
        w = 0.5 * (du12 - du21)
        r1, r2 = kernels.rotation(w, q.q1, q.q2)
        assert np.array_equal(s.m11, -r1) and np.array_equal(s.m12, -r2)
        assert np.array_equal(s.m21, -r2) and np.array_equal(s.m22, r1)

    def test_zero_q_xi_zero(self, grid32):
        u = random_u(grid32, seed=9)
        ops = get_ops(grid32)
        du11, du12 = map(ops.ifft, ops.grad_hat(ops.fft(u.u1)))
        du21, du22 = map(ops.ifft, ops.grad_hat(ops.fft(u.u2)))
        grad_u = TensorField2(grid32, du11, du12, du21, du22)
        s = shape_tensor_s(grad_u, zero_q(grid32), xi=0.0)
        assert np.abs(s.m12).max() == 0.0

    def test_xi_one_zero_q_gives_strain(self, grid32):
        u = random_u(grid32, seed=10)
        omega, strain = vorticity_and_strain(u)
        ops = get_ops(grid32)
        du11, du12 = map(ops.ifft, ops.grad_hat(ops.fft(u.u1)))
        du21, du22 = map(ops.ifft, ops.grad_hat(ops.fft(u.u2)))
        grad_u = TensorField2(grid32, du11, du12, du21, du22)
        s = shape_tensor_s(grad_u, zero_q(grid32), xi=1.0)
        scale = max(np.abs(strain.m12).max(), 1.0)
        assert np.abs(s.m11 - strain.m11).max() < 1e-13 * scale
        assert np.abs(s.m12 - strain.m12).max() < 1e-13 * scale


class TestStep:
    def test_constant_q_matches_ode_oracle(self, grid32):
        """u = 0 with spatially constant Q reduces to the relaxation ODE
        dq/dt = -(a + 2 c |q|^2) q; an adaptive integrator is the oracle."""
        coeffs = relax_coeffs(a=-0.1, c=1.0)
        q10, q20 = 0.23, -0.11
        state = SimulationState(t=0.0, u=zero_velocity(grid32), q=const_q(grid32, q10, q20))
        cfg = StepperConfig(dt=1e-4)
        for _ in range(1000):
            state = step(state, coeffs, cfg).state

        def rhs(t, y):
            f = -(coeffs.a + 2 * coeffs.c * (y[0] ** 2 + y[1] ** 2))
            return [f * y[0], f * y[1]]

        sol = solve_ivp(rhs, [0, 0.1], [q10, q20], rtol=1e-12, atol=1e-14)
        assert state.q.q1[0, 0] == pytest.approx(sol.y[0, -1], rel=1e-3)
        assert state.q.q2[0, 0] == pytest.approx(sol.y[1, -1], rel=1e-3)
        assert state.u.linf() == 0.0

    def test_isotropic_state_stable(self, grid32):
        coeffs = relax_coeffs(a=0.2, c=1.0)
        state = SimulationState(
            t=0.0, u=zero_velocity(grid32), q=const_q(grid32, 0.05, 0.02)
        )
        cfg = StepperConfig(dt=1e-3)
        norms = [state.q.linf()]
        for _ in range(50):
            state = step(state, coeffs, cfg).state
            norms.append(state.q.linf())
        assert all(b <= a + 1e-15 for a, b in zip(norms, norms[1:]))
        assert norms[-1] < norms[0]

    def test_delta_runs_approach_unregularized(self, grid32):
        """Difference from the delta = 0 trajectory shrinks when delta
        drops fourfold."""
        base = relax_coeffs()
        q0 = random_q(grid32, seed=11, max_mode=4, linf=0.4)
        u0 = random_u(grid32, seed=12, max_mode=2, amp=0.3)
        state0 = SimulationState(t=0.0, u=u0, q=q0)
        cfg = StepperConfig(dt=5e-4)

        def final_u(delta):
            coeffs = Coefficients(
                nu=1.0, l1=1.0, l2=0.0, l3=0.0, l4=1.0, a=-0.1, b=0.0, c=1.0,
                delta=delta, k_reg=4,
            )
            state = state0
            for _ in range(100):
                state = step(state, coeffs, cfg).state
            return state.u

        u_ref = final_u(0.0)
        diffs = []
        for delta in (1e-4, 2.5e-5):
            u_d = final_u(delta)
            diffs.append(
                np.sqrt(np.mean((u_d.u1 - u_ref.u1) ** 2 + (u_d.u2 - u_ref.u2) ** 2))
            )
        assert diffs[1] < diffs[0]

    def test_cfl_guard(self, grid32):
        coeffs = relax_coeffs()
        u = VelocityField(grid32, np.full((32, 32), 5.0), np.zeros((32, 32)))
        state = SimulationState(t=0.0, u=u, q=zero_q(grid32))
        cfg = StepperConfig(dt=1e-2, cfl_guard=0.5)
        with pytest.raises(CFLViolation):
            step(state, coeffs, cfg)

    def test_blowup_detection(self, grid32):
        coeffs = relax_coeffs(a=-0.1)
        q = const_q(grid32, 1e200, 0.0)
        state = SimulationState(t=0.0, u=zero_velocity(grid32), q=q)
        with pytest.raises(BlowUpError):
            step(state, coeffs, StepperConfig(dt=1.0))

    def test_incompressibility_after_step(self, grid32, ops32):
        coeffs = relax_coeffs()
        state = SimulationState(
            t=0.0, u=random_u(grid32, seed=13, amp=0.3), q=random_q(grid32, seed=14)
        )
        out = step(state, coeffs, StepperConfig(dt=1e-3))
        u = out.state.u
        assert ops32.divergence_linf(u) <= 1e-12 * max(u.l2(), 1e-30)

    def test_mean_velocity_invariant(self, grid32):
        coeffs = relax_coeffs()
        u0 = random_u(grid32, seed=15, amp=0.3)
        shifted = VelocityField(grid32, u0.u1 + 0.37, u0.u2 - 0.11)
        state = SimulationState(t=0.0, u=shifted, q=random_q(grid32, seed=16))
        mean1, mean2 = shifted.u1.mean(), shifted.u2.mean()
        out = step(state, coeffs, StepperConfig(dt=1e-3))
        assert out.state.u.u1.mean() == pytest.approx(mean1, abs=1e-12)
        assert out.state.u.u2.mean() == pytest.approx(mean2, abs=1e-12)

    def test_pressure_gradient_curl_free(self, grid32, ops32):
        coeffs = relax_coeffs()
        state = SimulationState(
            t=0.0, u=random_u(grid32, seed=17, amp=0.3), q=random_q(grid32, seed=18)
        )
        out = step(state, coeffs, StepperConfig(dt=1e-3))
        g1h = ops32.fft(out.pressure_gradient.u1)
        g2h = ops32.fft(out.pressure_gradient.u2)
        curl = np.abs(1j * (ops32.k1o * g2h - ops32.k2o * g1h))
        scale = max(np.abs(g1h).max(), np.abs(g2h).max(), 1.0) * (
            2 * np.pi * grid32.n
        )
        assert curl.max() <= 1e-12 * scale

    def test_rejects_bad_coefficients(self, grid32):
        bad = Coefficients(nu=1, l1=0.1, l2=-1, l3=-1, l4=1, a=0, b=0, c=1)
        state = SimulationState(t=0.0, u=zero_velocity(grid32), q=zero_q(grid32))
        from beris2d import CoefficientError

        with pytest.raises(CoefficientError):
            step(state, bad, StepperConfig(dt=1e-3))


class TestRun:
    def test_exact_step_count(self, grid32):
        coeffs = relax_coeffs()
        state0 = SimulationState(
            t=0.0, u=zero_velocity(grid32), q=const_q(grid32, 0.1, 0.0)
        )
        dt = 1e-3
        result = run(state0, coeffs, StepperConfig(dt=dt), t_end=10 * dt, stride=1)
        assert len(result.series) == 11
        assert result.final_state.t == pytest.approx(10 * dt, rel=1e-12)

    def test_observer_stride_rows(self, grid32):
        coeffs = relax_coeffs()
        state0 = SimulationState(
            t=0.0, u=zero_velocity(grid32), q=const_q(grid32, 0.1, 0.0)
        )
        dt = 1e-3
        seen = []
        result = run(
            state0,
            coeffs,
            StepperConfig(dt=dt),
            t_end=10 * dt,
            observer=lambda s, led: seen.append(led.t),
            stride=5,
        )
        assert len(result.series) == 3  # ceil(10/5) + 1 rows including t = 0
        assert seen == [pytest.approx(v) for v in (0.0, 5 * dt, 10 * dt)]

    def test_final_sample_always_included(self, grid32):
        coeffs = relax_coeffs()
        state0 = SimulationState(
            t=0.0, u=zero_velocity(grid32), q=const_q(grid32, 0.1, 0.0)
        )
        dt = 1e-3
        result = run(state0, coeffs, StepperConfig(dt=dt), t_end=10 * dt, stride=3)
        times = [row.t for row in result.series]
        assert times == [pytest.approx(v) for v in (0, 3e-3, 6e-3, 9e-3, 10e-3)]

    def test_deterministic_rerun(self, grid32):
        coeffs = relax_coeffs()
        state0 = SimulationState(
            t=0.0, u=random_u(grid32, seed=19, amp=0.2), q=random_q(grid32, seed=20)
        )
        cfg = StepperConfig(dt=1e-3)
        r1 = run(state0, coeffs, cfg, t_end=0.02, stride=1)
        r2 = run(state0, coeffs, cfg, t_end=0.02, stride=1)
        assert [a.total for a in r1.series] == [b.total for b in r2.series]
        assert np.array_equal(r1.final_state.q.q1, r2.final_state.q.q1)

    def test_requires_future_t_end(self, grid32):
        coeffs = relax_coeffs()
        state0 = SimulationState(t=1.0, u=zero_velocity(grid32), q=zero_q(grid32))
        with pytest.raises(ValueError):
            run(state0, coeffs, StepperConfig(dt=1e-3), t_end=0.5)

    def test_blowup_carries_partial_series(self, grid32):
        coeffs = relax_coeffs()
        q = const_q(grid32, 1e80, 0.0)
        state0 = SimulationState(t=0.0, u=zero_velocity(grid32), q=q)
        with pytest.raises(BlowUpError) as exc_info:
            run(state0, coeffs, StepperConfig(dt=10.0), t_end=100.0, stride=1)
        assert len(exc_info.value.series) >= 1
