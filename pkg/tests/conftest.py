import numpy as np
import pytest

from beris2d import Coefficients, GridSpec, QTensorField, VelocityField
from beris2d.spectral import get_ops


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32)


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(64)


@pytest.fixture(scope="session")
def ops32(grid32):
    return get_ops(grid32)


@pytest.fixture(scope="session")
def ops64(grid64):
    return get_ops(grid64)


@pytest.fixture(scope="session")
def full_coeffs():
    """Anisotropic coefficient set exercising every term (kappa = 0.8 > 0)."""
    return Coefficients(
        nu=1.0, l1=1.0, l2=0.3, l3=-0.2, l4=0.8, a=-0.15, b=0.7, c=1.2
    )


def band_noise(grid, rng, max_mode):
    """Real random field with modes confined to max |freq| <= max_mode."""
    n = grid.n
    white = rng.standard_normal((n, n))
    freq = np.fft.fftfreq(n, d=1.0 / n)
    keep = (np.abs(freq)[:, None] <= max_mode) & (np.abs(freq)[None, :] <= max_mode)
    return np.fft.ifft2(np.fft.fft2(white) * keep).real


def random_q(grid, seed, max_mode=None, linf=0.5):
    rng = np.random.default_rng(seed)
    if max_mode is None:
        max_mode = max(1, grid.n // 8)
    q1 = band_noise(grid, rng, max_mode)
    q2 = band_noise(grid, rng, max_mode)
    scale = linf / np.sqrt(2.0 * (q1 ** 2 + q2 ** 2)).max()
    return QTensorField(grid, q1 * scale, q2 * scale)


def random_u(grid, seed, max_mode=None, amp=0.5):
    rng = np.random.default_rng(seed)
    if max_mode is None:
        max_mode = max(1, grid.n // 8)
    ops = get_ops(grid)
    w1 = band_noise(grid, rng, max_mode)
    w2 = band_noise(grid, rng, max_mode)
    p1, p2, _, _ = ops.leray_hat(ops.fft(w1), ops.fft(w2))
    u1 = ops.ifft(p1)
    u2 = ops.ifft(p2)
    scale = amp / max(np.abs(u1).max(), np.abs(u2).max())
    return VelocityField(grid, u1 * scale, u2 * scale)
