"""Pointwise tensor-algebra kernels for the solver hot path.

Everything here is an elementwise pass over (n, n) float64 grids: products of
the Q-tensor components (q1, q2), their first derivatives (a1, a2, b1, b2 for
d1 q1, d2 q1, d1 q2, d2 q2) and velocity gradients. Two interchangeable
implementations exist:

* ``numpy_kernels``  - vectorized numpy expressions, always available.
* ``numba_kernels``  - numba ``@njit`` loops that fuse each pass into a single
  sweep without temporaries.

The active implementation is picked at import time: numba when importable,
unless the environment variable ``BERIS2D_NUMBA`` is set to ``0``, ``false``
or ``off``. ``benchmarks/kernel_bench.py`` times the two paths against each
other.

Both paths are deterministic (no fastmath, no threading); results agree to
roundoff but are not required to match bitwise across paths.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["kernels", "numpy_kernels", "numba_kernels", "HAVE_NUMBA", "USING_NUMBA"]


def _numba_requested() -> bool:
    flag = os.environ.get("BERIS2D_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


class numpy_kernels:
    """Vectorized reference implementations."""

    name = "numpy"

    @staticmethod
    def stage_one(q1, q2, a1, a2, b1, b2):
        """First products of state and gradients.

        Returns (trq2, G11, G12, G22, v11_1, v11_2, v12_1, v12_2):
        tr(Q^2), the gradient Gram tensor G_ij = Q_kl,i Q_kl,j, and the two
        flux vectors v_k = Q_ij,l Q_lk for the components (ij) = (11), (12).
        """
        trq2 = 2.0 * (q1 * q1 + q2 * q2)
        g11 = 2.0 * (a1 * a1 + b1 * b1)
        g12 = 2.0 * (a1 * a2 + b1 * b2)
        g22 = 2.0 * (a2 * a2 + b2 * b2)
        v11_1 = a1 * q1 + a2 * q2
        v11_2 = a1 * q2 - a2 * q1
        v12_1 = b1 * q1 + b2 * q2
        v12_2 = b1 * q2 - b2 * q1
        return trq2, g11, g12, g22, v11_1, v11_2, v12_1, v12_2

    @staticmethod
    def bulk_force(q1, q2, trq2, a, c):
        """-(a + c tr(Q^2)) Q, two independent components."""
        f = -(a + c * trq2)
        return f * q1, f * q2

    @staticmethod
    def sigma_s_quadratic(a1, a2, b1, b2, l1, l2, l3):
        """Quadratic distortion-stress part -2(L1 A + L2 B + L3 C)."""
        A11 = 2.0 * (a1 * a1 + b1 * b1)
        A12 = 2.0 * (a1 * a2 + b1 * b2)
        A22 = 2.0 * (a2 * a2 + b2 * b2)
        B11 = a1 * a1 + a2 * b1 + b1 * b1 - a1 * b2
        B12 = a1 * a2 + b1 * b2
        B22 = a2 * b1 + b2 * b2 - a1 * b2 + a2 * a2
        d1 = a1 + b2
        d2 = b1 - a2
        C11 = d1 * a1 + d2 * b1
        C12 = d1 * b1 - d2 * a1
        C21 = d1 * a2 + d2 * b2
        C22 = d1 * b2 - d2 * a2
        s11 = -2.0 * (l1 * A11 + l2 * B11 + l3 * C11)
        s12 = -2.0 * (l1 * A12 + l2 * B12 + l3 * C12)
        s21 = -2.0 * (l1 * A12 + l2 * B12 + l3 * C21)
        s22 = -2.0 * (l1 * A22 + l2 * B22 + l3 * C22)
        return s11, s12, s21, s22

    @staticmethod
    def sigma_s_cubic(q1, q2, g11, g12, g22, l4):
        """Cubic distortion-stress part -2 L4 Q_jm G_mi (G pre-dealiased)."""
        s11 = -2.0 * l4 * (q1 * g11 + q2 * g12)
        s12 = -2.0 * l4 * (q2 * g11 - q1 * g12)
        s21 = -2.0 * l4 * (q1 * g12 + q2 * g22)
        s22 = -2.0 * l4 * (q2 * g12 - q1 * g22)
        return s11, s12, s21, s22

    @staticmethod
    def sigma_a_scalar(q1, q2, h1, h2):
        """Commutator scalar s with sigma^a = [[0, s], [-s, 0]]."""
        return 2.0 * (q1 * h2 - q2 * h1)

    @staticmethod
    def rotation(w, q1, q2):
        """Corotational rotation Q omega - omega Q as a component pair."""
        return -2.0 * w * q2, 2.0 * w * q1

    @staticmethod
    def advect(u1, u2, g1, g2):
        """u . grad f from the two partials of f."""
        return u1 * g1 + u2 * g2

    @staticmethod
    def bulk_density(q1, q2, a, c):
        """(a/2) tr(Q^2) + (c/4) tr^2(Q^2); the cubic invariant vanishes."""
        trq2 = 2.0 * (q1 * q1 + q2 * q2)
        return 0.5 * a * trq2 + 0.25 * c * trq2 * trq2

    @staticmethod
    def elastic_density(q1, q2, a1, a2, b1, b2, l1, l2, l3, l4):
        """Distortion energy density with all four elastic constants."""
        e1 = 2.0 * (a1 * a1 + a2 * a2 + b1 * b1 + b2 * b2)
        e2 = a1 * a1 + b1 * b1 + a2 * a2 + b2 * b2 + 2.0 * (a2 * b1 - a1 * b2)
        e3 = (a1 + b2) ** 2 + (b1 - a2) ** 2
        g11 = 2.0 * (a1 * a1 + b1 * b1)
        g12 = 2.0 * (a1 * a2 + b1 * b2)
        g22 = 2.0 * (a2 * a2 + b2 * b2)
        e4 = q1 * (g11 - g22) + 2.0 * q2 * g12
        return l1 * e1 + l2 * e2 + l3 * e3 + l4 * e4


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

HAVE_NUMBA = False
numba_kernels = None

try:  # pragma: no cover - exercised indirectly via the active path
    from numba import njit

    HAVE_NUMBA = True

    @njit(cache=True)
    def _stage_one(q1, q2, a1, a2, b1, b2):
        n0, n1 = q1.shape
        trq2 = np.empty_like(q1)
        g11 = np.empty_like(q1)
        g12 = np.empty_like(q1)
        g22 = np.empty_like(q1)
        v11_1 = np.empty_like(q1)
        v11_2 = np.empty_like(q1)
        v12_1 = np.empty_like(q1)
        v12_2 = np.empty_like(q1)
        for i in range(n0):
            for j in range(n1):
                x1 = q1[i, j]
                x2 = q2[i, j]
                p1 = a1[i, j]
                p2 = a2[i, j]
                r1 = b1[i, j]
                r2 = b2[i, j]
                trq2[i, j] = 2.0 * (x1 * x1 + x2 * x2)
                g11[i, j] = 2.0 * (p1 * p1 + r1 * r1)
                g12[i, j] = 2.0 * (p1 * p2 + r1 * r2)
                g22[i, j] = 2.0 * (p2 * p2 + r2 * r2)
                v11_1[i, j] = p1 * x1 + p2 * x2
                v11_2[i, j] = p1 * x2 - p2 * x1
                v12_1[i, j] = r1 * x1 + r2 * x2
                v12_2[i, j] = r1 * x2 - r2 * x1
        return trq2, g11, g12, g22, v11_1, v11_2, v12_1, v12_2

    @njit(cache=True)
    def _bulk_force(q1, q2, trq2, a, c):
        n0, n1 = q1.shape
        f1 = np.empty_like(q1)
        f2 = np.empty_like(q1)
        for i in range(n0):
            for j in range(n1):
                f = -(a + c * trq2[i, j])
                f1[i, j] = f * q1[i, j]
                f2[i, j] = f * q2[i, j]
        return f1, f2

    @njit(cache=True)
    def _sigma_s_quadratic(a1, a2, b1, b2, l1, l2, l3):
        n0, n1 = a1.shape
        s11 = np.empty_like(a1)
        s12 = np.empty_like(a1)
        s21 = np.empty_like(a1)
        s22 = np.empty_like(a1)
        for i in range(n0):
            for j in range(n1):
                p1 = a1[i, j]
                p2 = a2[i, j]
                r1 = b1[i, j]
                r2 = b2[i, j]
                A11 = 2.0 * (p1 * p1 + r1 * r1)
                A12 = 2.0 * (p1 * p2 + r1 * r2)
                A22 = 2.0 * (p2 * p2 + r2 * r2)
                B11 = p1 * p1 + p2 * r1 + r1 * r1 - p1 * r2
                B12 = p1 * p2 + r1 * r2
                B22 = p2 * r1 + r2 * r2 - p1 * r2 + p2 * p2
                d1 = p1 + r2
                d2 = r1 - p2
                C11 = d1 * p1 + d2 * r1
                C12 = d1 * r1 - d2 * p1
                C21 = d1 * p2 + d2 * r2
                C22 = d1 * r2 - d2 * p2
                s11[i, j] = -2.0 * (l1 * A11 + l2 * B11 + l3 * C11)
                s12[i, j] = -2.0 * (l1 * A12 + l2 * B12 + l3 * C12)
                s21[i, j] = -2.0 * (l1 * A12 + l2 * B12 + l3 * C21)
                s22[i, j] = -2.0 * (l1 * A22 + l2 * B22 + l3 * C22)
        return s11, s12, s21, s22

    @njit(cache=True)
    def _sigma_s_cubic(q1, q2, g11, g12, g22, l4):
        n0, n1 = q1.shape
        s11 = np.empty_like(q1)
        s12 = np.empty_like(q1)
        s21 = np.empty_like(q1)
        s22 = np.empty_like(q1)
        for i in range(n0):
            for j in range(n1):
                x1 = q1[i, j]
                x2 = q2[i, j]
                G11 = g11[i, j]
                G12 = g12[i, j]
                G22 = g22[i, j]
                s11[i, j] = -2.0 * l4 * (x1 * G11 + x2 * G12)
                s12[i, j] = -2.0 * l4 * (x2 * G11 - x1 * G12)
                s21[i, j] = -2.0 * l4 * (x1 * G12 + x2 * G22)
                s22[i, j] = -2.0 * l4 * (x2 * G12 - x1 * G22)
        return s11, s12, s21, s22

    @njit(cache=True)
    def _sigma_a_scalar(q1, q2, h1, h2):
        n0, n1 = q1.shape
        out = np.empty_like(q1)
        for i in range(n0):
            for j in range(n1):
                out[i, j] = 2.0 * (q1[i, j] * h2[i, j] - q2[i, j] * h1[i, j])
        return out

    @njit(cache=True)
    def _rotation(w, q1, q2):
        n0, n1 = q1.shape
        r1 = np.empty_like(q1)
        r2 = np.empty_like(q1)
        for i in range(n0):
            for j in range(n1):
                r1[i, j] = -2.0 * w[i, j] * q2[i, j]
                r2[i, j] = 2.0 * w[i, j] * q1[i, j]
        return r1, r2

    @njit(cache=True)
    def _advect(u1, u2, g1, g2):
        n0, n1 = u1.shape
        out = np.empty_like(u1)
        for i in range(n0):
            for j in range(n1):
                out[i, j] = u1[i, j] * g1[i, j] + u2[i, j] * g2[i, j]
        return out

    @njit(cache=True)
    def _bulk_density(q1, q2, a, c):
        n0, n1 = q1.shape
        out = np.empty_like(q1)
        for i in range(n0):
            for j in range(n1):
                trq2 = 2.0 * (q1[i, j] * q1[i, j] + q2[i, j] * q2[i, j])
                out[i, j] = 0.5 * a * trq2 + 0.25 * c * trq2 * trq2
        return out

    @njit(cache=True)
    def _elastic_density(q1, q2, a1, a2, b1, b2, l1, l2, l3, l4):
        n0, n1 = q1.shape
        out = np.empty_like(q1)
        for i in range(n0):
            for j in range(n1):
                p1 = a1[i, j]
                p2 = a2[i, j]
                r1 = b1[i, j]
                r2 = b2[i, j]
                e1 = 2.0 * (p1 * p1 + p2 * p2 + r1 * r1 + r2 * r2)
                e2 = p1 * p1 + r1 * r1 + p2 * p2 + r2 * r2 + 2.0 * (p2 * r1 - p1 * r2)
                e3 = (p1 + r2) ** 2 + (r1 - p2) ** 2
                g11 = 2.0 * (p1 * p1 + r1 * r1)
                g12 = 2.0 * (p1 * p2 + r1 * r2)
                g22 = 2.0 * (p2 * p2 + r2 * r2)
                e4 = q1[i, j] * (g11 - g22) + 2.0 * q2[i, j] * g12
                out[i, j] = l1 * e1 + l2 * e2 + l3 * e3 + l4 * e4
        return out

    class numba_kernels:  # noqa: D101 - mirror of numpy_kernels
        name = "numba"
        stage_one = staticmethod(_stage_one)
        bulk_force = staticmethod(_bulk_force)
        sigma_s_quadratic = staticmethod(_sigma_s_quadratic)
        sigma_s_cubic = staticmethod(_sigma_s_cubic)
        sigma_a_scalar = staticmethod(_sigma_a_scalar)
        rotation = staticmethod(_rotation)
        advect = staticmethod(_advect)
        bulk_density = staticmethod(_bulk_density)
        elastic_density = staticmethod(_elastic_density)

except ImportError:  # pragma: no cover
    pass


USING_NUMBA = HAVE_NUMBA and _numba_requested()
kernels = numba_kernels if USING_NUMBA else numpy_kernels
