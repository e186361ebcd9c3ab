"""Elastic back-reaction of the order parameter on the momentum balance.

Two stresses force the Navier-Stokes equation: the antisymmetric stress,
a commutator of Q with the constrained molecular field, and the distortion
stress, quadratic-to-cubic in Q and its gradients. Their divergence is the
velocity forcing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import kernels
from .fields import Coefficients, GridSpec, QTensorField, VelocityField
from .spectral import get_ops

__all__ = ["StressField", "sigma_a", "sigma_s", "stress_divergence"]


@dataclass(frozen=True)
class StressField:
    """General 2x2 stress tensor field (no symmetry assumed)."""

    grid: GridSpec
    s11: np.ndarray
    s12: np.ndarray
    s21: np.ndarray
    s22: np.ndarray


def sigma_a(q: QTensorField, hfield: QTensorField) -> StressField:
    """Antisymmetric stress Q H - H Q with H the constrained field.

    For the two-component representation the commutator reduces to a single
    scalar s = 2 (q1 h2 - q2 h1) with sigma^a = [[0, s], [-s, 0]], so
    antisymmetry is structural. Built from the constrained field, never the
    raw molecular field, hence independent of b.
    """
    if hfield.grid != q.grid:
        raise ValueError("q and hfield live on different grids")
    s = kernels.sigma_a_scalar(q.q1, q.q2, hfield.q1, hfield.q2)
    zero = np.zeros_like(s)
    return StressField(q.grid, zero, s, -s, zero)


def sigma_s(
    q: QTensorField, coeffs: Coefficients, *, dealias: bool = True
) -> StressField:
    """Distortion stress -2 (l1 A + l2 B + l3 C + l4 D) with

        A_ij = Q_kl,i Q_kl,j        B_ij = Q_kj,l Q_kl,i
        C_ij = Q_kl,l Q_kj,i        D_ij = Q_jm Q_kl,m Q_kl,i.

    The cubic D term is a two-stage product; in masked mode the gradient
    Gram tensor is dealiased before it multiplies Q.
    """
    ops = get_ops(q.grid)
    q1h = ops.fft(q.q1)
    q2h = ops.fft(q.q2)
    a1, a2 = map(ops.ifft, ops.grad_hat(q1h))
    b1, b2 = map(ops.ifft, ops.grad_hat(q2h))
    s11, s12, s21, s22 = kernels.sigma_s_quadratic(
        a1, a2, b1, b2, coeffs.l1, coeffs.l2, coeffs.l3
    )
    g11 = 2.0 * (a1 * a1 + b1 * b1)
    g12 = 2.0 * (a1 * a2 + b1 * b2)
    g22 = 2.0 * (a2 * a2 + b2 * b2)
    if dealias:
        g11, g12, g22 = ops.dealias(g11), ops.dealias(g12), ops.dealias(g22)
    c11, c12, c21, c22 = kernels.sigma_s_cubic(q.q1, q.q2, g11, g12, g22, coeffs.l4)
    return StressField(q.grid, s11 + c11, s12 + c12, s21 + c21, s22 + c22)


def stress_divergence(
    sa: StressField, ss: StressField, *, dealias: bool = True
) -> VelocityField:
    """Velocity forcing (div sigma)_i = d_j (sigma^a + sigma^s)_ij.

    Spectral divergence; in masked mode the assembled forcing is dealiased
    (the mask is linear, so this covers every additive product stage).
    """
    if sa.grid != ss.grid:
        raise ValueError("stress fields live on different grids")
    ops = get_ops(sa.grid)
    t11 = ops.fft(sa.s11 + ss.s11)
    t12 = ops.fft(sa.s12 + ss.s12)
    t21 = ops.fft(sa.s21 + ss.s21)
    t22 = ops.fft(sa.s22 + ss.s22)
    f1h = 1j * (ops.k1o * t11 + ops.k2o * t12)
    f2h = 1j * (ops.k1o * t21 + ops.k2o * t22)
    if dealias:
        f1h = ops.dealias_hat(f1h)
        f2h = ops.dealias_hat(f2h)
    return VelocityField(sa.grid, ops.ifft(f1h), ops.ifft(f2h))
