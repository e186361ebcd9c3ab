"""Fourier-side differential calculus on the periodic unit square.

Fields live on an n x n grid; their transforms use the plain complex FFT so
Hermitian symmetry of real fields is explicit. Wavenumbers are
k = 2 pi m with integer frequencies m in [-n/2, n/2). First-derivative
multipliers zero the Nyquist frequency, which keeps odd derivatives real and
exactly skew-adjoint under the grid quadrature; even multipliers (Laplacian,
Sobolev weights) keep it.

Dealiasing follows the 2/3 rule: a product of two fields with modes below the
cutoff is exactly alias-free after one mask. Cubic nonlinearities are formed
in two stages with a mask between them; one mask per multiplication stage is
the contract relied on throughout the solver. The cutoff keeps modes with
3 max(|m1|, |m2|) <= n. The mask can also clip true content of wide-band
inputs, so diagnostics that need exact products pass ``dealias=False`` in
the modules built on top of this one.

Everything here is a pure function of immutable inputs; the cached operator
tables are read-only after construction, so concurrent use is safe.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .fields import GridSpec, VelocityField

__all__ = ["SpectralOps", "get_ops", "NORM_KINDS"]

NORM_KINDS = ("L2", "L4", "Linf", "H1", "H2", "H3")


class SpectralOps:
    """Precomputed multiplier tables and transform helpers for one grid."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        n = grid.n
        m = np.fft.fftfreq(n, d=1.0 / n)  # integer frequencies
        self.m1 = m[:, None] * np.ones((1, n))
        self.m2 = np.ones((n, 1)) * m[None, :]
        self.k1 = 2.0 * np.pi * self.m1
        self.k2 = 2.0 * np.pi * self.m2
        # Nyquist-free copies for odd derivative orders
        self.k1o = np.where(np.abs(self.m1) == n // 2, 0.0, self.k1)
        self.k2o = np.where(np.abs(self.m2) == n // 2, 0.0, self.k2)
        self.ksq = self.k1 ** 2 + self.k2 ** 2
        self._ksq_safe = np.where(self.ksq == 0.0, 1.0, self.ksq)
        mi = np.rint(self.m1).astype(np.int64)
        mj = np.rint(self.m2).astype(np.int64)
        self.dealias_mask = (3 * np.abs(mi) <= n) & (3 * np.abs(mj) <= n)
        self.helmholtz_mult = 1.0 / (1.0 + self.ksq)
        for arr in (
            self.m1, self.m2, self.k1, self.k2, self.k1o, self.k2o,
            self.ksq, self._ksq_safe, self.dealias_mask, self.helmholtz_mult,
        ):
            arr.setflags(write=False)

    # -- transforms --------------------------------------------------------

    def fft(self, f: np.ndarray) -> np.ndarray:
        return np.fft.fft2(f)

    def ifft(self, fhat: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(fhat).real

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Unitary Fourier coefficients: f(x) = sum c_m exp(2 pi i m.x)."""
        return np.fft.fft2(f) / self.grid.n ** 2

    # -- derivatives -------------------------------------------------------

    def _axis_multiplier(self, order: int, axis: int) -> np.ndarray:
        if order == 0:
            return 1.0
        k_even = self.k1 if axis == 0 else self.k2
        k_odd = self.k1o if axis == 0 else self.k2o
        k = k_odd if order % 2 else k_even
        return (1j * k) ** order

    def derivative_hat(self, fhat: np.ndarray, alpha) -> np.ndarray:
        a1, a2 = alpha
        if a1 < 0 or a2 < 0 or a1 + a2 > 3:
            raise ValueError(f"multi-index {alpha} outside supported range")
        return fhat * self._axis_multiplier(a1, 0) * self._axis_multiplier(a2, 1)

    def derivative(self, f: np.ndarray, alpha) -> np.ndarray:
        """Spectral partial derivative d^alpha f, exact on band-limited fields."""
        return self.ifft(self.derivative_hat(self.fft(f), alpha))

    def grad_hat(self, fhat: np.ndarray):
        return 1j * self.k1o * fhat, 1j * self.k2o * fhat

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.ifft(-self.ksq * self.fft(f))

    # -- dealiasing --------------------------------------------------------

    def dealias_hat(self, fhat: np.ndarray) -> np.ndarray:
        return fhat * self.dealias_mask

    def dealias(self, f: np.ndarray) -> np.ndarray:
        """Zero every mode with max(|m1|, |m2|) beyond n/3; idempotent."""
        return self.ifft(self.dealias_hat(self.fft(f)))

    # -- projections and inverses ------------------------------------------

    def leray_hat(self, u1hat: np.ndarray, u2hat: np.ndarray):
        """Spectral Helmholtz split into solenoidal and gradient parts.

        The zero mode (grid mean of u, a Galilean mode) is left in the
        solenoidal part untouched.
        """
        div_over_ksq = (self.k1o * u1hat + self.k2o * u2hat) / self._ksq_safe
        g1 = self.k1o * div_over_ksq
        g2 = self.k2o * div_over_ksq
        return u1hat - g1, u2hat - g2, g1, g2

    def divergence_hat(self, u1hat: np.ndarray, u2hat: np.ndarray) -> np.ndarray:
        return 1j * (self.k1o * u1hat + self.k2o * u2hat)

    def divergence_linf(self, v: VelocityField) -> float:
        d = self.divergence_hat(self.fft(v.u1), self.fft(v.u2)) / self.grid.n ** 2
        return float(np.abs(d).max())

    def helmholtz_inverse(self, f: np.ndarray) -> np.ndarray:
        """(-Laplacian + I)^{-1} f; the zero mode maps to itself."""
        return self.ifft(self.helmholtz_mult * self.fft(f))

    # -- quadrature and norms ----------------------------------------------

    def integral(self, f: np.ndarray) -> float:
        """Grid quadrature over the measure-one cell (exact for trig content
        below the grid size)."""
        return float(f.mean())

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float((f * g).mean())

    def _sobolev_weight(self, order: int) -> np.ndarray:
        # sum over multi-indices |alpha| <= order of k1^(2 a1) k2^(2 a2)
        w = np.zeros_like(self.ksq)
        for total in range(order + 1):
            for a1 in range(total + 1):
                a2 = total - a1
                w = w + self.k1 ** (2 * a1) * self.k2 ** (2 * a2)
        return w

    def norm(self, f: np.ndarray, kind: str) -> float:
        """Norm of a scalar field.

        L2 and the Sobolev norms go through Parseval on the coefficients;
        L4 uses grid quadrature and Linf the grid maximum.
        """
        if kind == "L2":
            c = self.coefficients(f)
            return float(np.sqrt((np.abs(c) ** 2).sum()))
        if kind == "L4":
            return float(self.integral(np.abs(f) ** 4) ** 0.25)
        if kind == "Linf":
            return float(np.abs(f).max())
        if kind in ("H1", "H2", "H3"):
            order = int(kind[1])
            c = self.coefficients(f)
            return float(np.sqrt((self._sobolev_weight(order) * np.abs(c) ** 2).sum()))
        raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")

    def norm_sq_components(self, comps, kind: str) -> float:
        """Squared L2/H1/H2/H3 norm summed over field components."""
        return sum(self.norm(f, kind) ** 2 for f in comps)


@lru_cache(maxsize=None)
def _ops_for_n(n: int) -> SpectralOps:
    return SpectralOps(GridSpec(n))


def get_ops(grid: GridSpec) -> SpectralOps:
    """Shared operator table for a grid (cached per resolution)."""
    return _ops_for_n(grid.n)


def leray_project(v: VelocityField):
    """Project a velocity field onto divergence-free fields.

    Returns the projected field and the removed curl-free gradient part,
    which is the discrete pressure-gradient contribution.
    """
    ops = get_ops(v.grid)
    p1, p2, g1, g2 = ops.leray_hat(ops.fft(v.u1), ops.fft(v.u2))
    proj = VelocityField(v.grid, ops.ifft(p1), ops.ifft(p2))
    grad = VelocityField(v.grid, ops.ifft(g1), ops.ifft(g2))
    return proj, grad
