import numpy as np
import pytest

from beris2d import VelocityField
from beris2d.spectral import leray_project

from conftest import band_noise, random_u


def x_coords(grid):
    return grid.coords()


class TestDerivatives:
    def test_single_mode(self, grid32, ops32):
        x1, _ = x_coords(grid32)
        f = np.sin(2 * np.pi * x1)
        df = ops32.derivative(f, (1, 0))
        assert np.abs(df - 2 * np.pi * np.cos(2 * np.pi * x1)).max() < 1e-12 * 2 * np.pi

    def test_constant(self, ops32):
        f = np.full((32, 32), 1.7)
        for alpha in ((1, 0), (0, 1), (2, 0), (1, 1), (0, 3)):
            assert np.abs(ops32.derivative(f, alpha)).max() == 0.0

    def test_mixed_mode(self, grid32, ops32):
        x1, x2 = x_coords(grid32)
        f = np.sin(2 * np.pi * x1) * np.sin(2 * np.pi * x2)
        df = ops32.derivative(f, (1, 1))
        expect = (2 * np.pi) ** 2 * np.cos(2 * np.pi * x1) * np.cos(2 * np.pi * x2)
        assert np.abs(df - expect).max() < 1e-11 * (2 * np.pi) ** 2

    def test_multiplier_commutativity(self, grid32, ops32):
        rng = np.random.default_rng(0)
        fhat = ops32.fft(band_noise(grid32, rng, 10))
        seq = ops32.derivative_hat(ops32.derivative_hat(fhat, (1, 0)), (0, 1))
        direct = ops32.derivative_hat(fhat, (1, 1))
        assert np.array_equal(seq, direct)

    def test_order_cap(self, ops32):
        with pytest.raises(ValueError):
            ops32.derivative(np.zeros((32, 32)), (2, 2))


class TestTransforms:
    def test_roundtrip(self, grid32, ops32):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((32, 32))
        back = ops32.ifft(ops32.fft(f))
        assert np.abs(back - f).max() < 1e-12 * np.abs(f).max()

    def test_hermitian_symmetry(self, grid32, ops32):
        rng = np.random.default_rng(2)
        c = ops32.coefficients(rng.standard_normal((32, 32)))
        flipped = np.conj(np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1)))
        assert np.abs(c - flipped).max() < 1e-12 * np.abs(c).max()

    def test_parseval(self, grid32, ops32):
        rng = np.random.default_rng(3)
        f = rng.standard_normal((32, 32))
        physical = np.sqrt(ops32.integral(f ** 2))
        assert ops32.norm(f, "L2") == pytest.approx(physical, rel=1e-12)


class TestLeray:
    def test_pure_gradient(self, grid32, ops32):
        x1, _ = x_coords(grid32)
        f = np.sin(2 * np.pi * x1)
        v = VelocityField(grid32, ops32.derivative(f, (1, 0)), ops32.derivative(f, (0, 1)))
        proj, grad = leray_project(v)
        assert proj.linf() < 1e-12 * v.linf()
        assert np.abs(grad.u1 - v.u1).max() < 1e-12 * v.linf()

    def test_already_solenoidal(self, grid32):
        x1, x2 = x_coords(grid32)
        v = VelocityField(grid32, np.sin(2 * np.pi * x2), np.zeros((32, 32)))
        proj, grad = leray_project(v)
        assert np.abs(proj.u1 - v.u1).max() < 1e-12
        assert grad.linf() < 1e-12

    def test_linearity(self, grid32, ops32):
        x1, x2 = x_coords(grid32)
        f = np.sin(2 * np.pi * x1)
        grad_part = VelocityField(
            grid32, ops32.derivative(f, (1, 0)), ops32.derivative(f, (0, 1))
        )
        sol_part = VelocityField(grid32, np.sin(2 * np.pi * x2), np.zeros((32, 32)))
        both = VelocityField(
            grid32, grad_part.u1 + sol_part.u1, grad_part.u2 + sol_part.u2
        )
        proj, grad = leray_project(both)
        assert np.abs(proj.u1 - sol_part.u1).max() < 1e-12 * both.linf()
        assert np.abs(grad.u1 - grad_part.u1).max() < 1e-12 * both.linf()

    def test_projected_divergence(self, grid32, ops32):
        u = random_u(grid32, seed=11)
        assert ops32.divergence_linf(u) <= 1e-12 * u.l2()

    def test_idempotent(self, grid32):
        rng = np.random.default_rng(4)
        v = VelocityField(grid32, band_noise(grid32, rng, 9), band_noise(grid32, rng, 9))
        once, _ = leray_project(v)
        twice, _ = leray_project(once)
        assert np.abs(twice.u1 - once.u1).max() < 1e-13 * max(once.linf(), 1e-30)

    def test_self_adjoint(self, grid32, ops32):
        rng = np.random.default_rng(5)
        v = VelocityField(grid32, band_noise(grid32, rng, 9), band_noise(grid32, rng, 9))
        w = VelocityField(grid32, band_noise(grid32, rng, 9), band_noise(grid32, rng, 9))
        pv, _ = leray_project(v)
        pw, _ = leray_project(w)
        lhs = ops32.inner(pv.u1, w.u1) + ops32.inner(pv.u2, w.u2)
        rhs = ops32.inner(v.u1, pw.u1) + ops32.inner(v.u2, pw.u2)
        assert abs(lhs - rhs) < 1e-12 * max(abs(lhs), 1.0)


class TestHelmholtzInverse:
    def test_eigenfunction(self, grid32, ops32):
        x1, _ = x_coords(grid32)
        f = np.cos(2 * np.pi * x1)
        out = ops32.helmholtz_inverse(f)
        assert np.abs(out - f / (1 + 4 * np.pi ** 2)).max() < 1e-14

    def test_constant(self, ops32):
        f = np.full((32, 32), 2.5)
        assert np.abs(ops32.helmholtz_inverse(f) - 2.5).max() < 1e-13

    def test_roundtrip(self, grid32, ops32):
        rng = np.random.default_rng(6)
        f = band_noise(grid32, rng, 9)
        w = ops32.helmholtz_inverse(f)
        back = -ops32.laplacian(w) + w
        assert np.abs(back - f).max() < 1e-12 * np.abs(f).max()

    def test_commutes_with_derivative(self, grid32, ops32):
        rng = np.random.default_rng(7)
        f = band_noise(grid32, rng, 9)
        a = ops32.derivative(ops32.helmholtz_inverse(f), (1, 0))
        b = ops32.helmholtz_inverse(ops32.derivative(f, (1, 0)))
        assert np.abs(a - b).max() < 1e-12 * np.abs(a).max()


class TestDealias:
    def test_band_limited_unchanged(self, grid32, ops32):
        rng = np.random.default_rng(8)
        f = band_noise(grid32, rng, 10)  # 10 <= 32/3
        assert np.abs(ops32.dealias(f) - f).max() < 1e-13 * np.abs(f).max()

    def test_idempotent_bitwise(self, grid32, ops32):
        rng = np.random.default_rng(9)
        fhat = ops32.fft(rng.standard_normal((32, 32)))
        once = ops32.dealias_hat(fhat)
        assert np.array_equal(ops32.dealias_hat(once), once)

    def test_nyquist_mode_removed(self, grid32, ops32):
        x1, _ = x_coords(grid32)
        f = np.cos(2 * np.pi * 16 * x1)  # freq n/2
        assert np.abs(ops32.dealias(f)).max() < 1e-12

    def test_cutoff_boundary(self, ops64):
        # n = 64: modes with |m| = 21 survive, |m| = 22 do not
        keep = ops64.dealias_mask
        assert keep[21, 0] and not keep[22, 0]


class TestNorms:
    def test_l2_single_mode(self, grid32, ops32):
        x1, _ = x_coords(grid32)
        f = np.sin(2 * np.pi * x1)
        assert ops32.norm(f, "L2") == pytest.approx(1 / np.sqrt(2), rel=1e-12)

    def test_h1_single_mode(self, grid32, ops32):
        x1, _ = x_coords(grid32)
        f = np.sin(2 * np.pi * x1)
        expect = np.sqrt(0.5 + (2 * np.pi) ** 2 / 2)
        assert ops32.norm(f, "H1") == pytest.approx(expect, rel=1e-12)

    def test_l4_single_mode(self, grid32, ops32):
        x1, _ = x_coords(grid32)
        f = np.sin(2 * np.pi * x1)
        # independent quadrature oracle for int sin^4 = 3/8
        xfine = (np.arange(4096) + 0.5) / 4096
        oracle = np.mean(np.sin(2 * np.pi * xfine) ** 4) ** 0.25
        assert ops32.norm(f, "L4") == pytest.approx((3 / 8) ** 0.25, rel=1e-12)
        assert ops32.norm(f, "L4") == pytest.approx(oracle, rel=1e-9)

    def test_linf(self, grid32, ops32):
        x1, _ = x_coords(grid32)
        f = 0.3 * np.sin(2 * np.pi * x1)
        assert ops32.norm(f, "Linf") == pytest.approx(0.3, rel=1e-12)

    def test_unknown_kind(self, ops32):
        with pytest.raises(ValueError):
            ops32.norm(np.zeros((32, 32)), "H7")
