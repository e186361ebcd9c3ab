"""Free-energy densities, the molecular field and the constrained field.

The free energy combines a bulk potential in the invariants of Q with a
distortion energy that is quadratic in grad Q for the constants l1..l3 and
cubic (Q grad Q grad Q) for l4. The molecular field is minus the
unconstrained variational derivative of that energy; adding the scalar
multiplier that restores tracelessness and the antisymmetric multiplier that
restores symmetry collapses it, for traceless symmetric 2x2 fields, to the
closed form

    zeta Lap Q + 2 l4 div(Q_ij,l Q_lk) - l4 (grad Q : grad Q)_traceless
    - a Q - c tr(Q^2) Q,          zeta = 2 l1 + l2 + l3,

which is manifestly traceless symmetric and independent of b. The solver
consumes the closed form; the multiplier route exists as a cross-check.

Two evaluation modes: ``dealias=True`` masks every product stage (solver
path, assumes band-limited inputs) and ``dealias=False`` computes exact grid
products (diagnostics path). All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import kernels
from .fields import Coefficients, GridSpec, QTensorField, VelocityField, validate_coefficients
from .spectral import SpectralOps, get_ops

__all__ = [
    "TensorField2",
    "MolecularFieldBundle",
    "EnergyLedger",
    "bulk_energy_density",
    "elastic_energy_density",
    "total_free_energy",
    "free_energy_symmetric",
    "molecular_field_h",
    "lagrange_multipliers",
    "constrained_field",
    "molecular_field_bundle",
    "energy_ledger",
]


@dataclass(frozen=True)
class TensorField2:
    """General (not necessarily symmetric) 2x2 tensor field."""

    grid: GridSpec
    m11: np.ndarray
    m12: np.ndarray
    m21: np.ndarray
    m22: np.ndarray

    def trace(self) -> np.ndarray:
        return self.m11 + self.m22

    def asymmetry(self) -> np.ndarray:
        return self.m12 - self.m21


@dataclass(frozen=True)
class MolecularFieldBundle:
    """Molecular field with its Lagrange multipliers and their sum."""

    h: TensorField2
    lambda_field: np.ndarray
    mu_antisym: TensorField2
    constrained: QTensorField


@dataclass(frozen=True)
class EnergyLedger:
    """Energy split and instantaneous dissipation rates of one state.

    total = kinetic + bulk + elastic by construction. The dissipation
    entries are the viscous rate nu int |grad u|^2, the rotational rate
    int |H + lambda I + mu - mu^T|^2 and the hyperviscous rate
    delta int |(-Lap)^{k/2} u|^2; each is nonnegative up to roundoff.
    """

    t: float
    kinetic: float
    bulk: float
    elastic: float
    free: float
    total: float
    viscous_diss: float
    rotational_diss: float
    reg_diss: float
    q_linf: float
    u_l2: float


# ---------------------------------------------------------------------------
# densities and total energy
# ---------------------------------------------------------------------------


def bulk_energy_density(q: QTensorField, coeffs: Coefficients) -> np.ndarray:
    """(a/2) tr(Q^2) + (c/4) tr^2(Q^2).

    The cubic invariant tr(Q^3) vanishes identically for traceless
    symmetric 2x2 tensors, so b never enters; the output is bitwise
    independent of it.
    """
    return kernels.bulk_density(q.q1, q.q2, coeffs.a, coeffs.c)


def elastic_energy_density(
    q: QTensorField, coeffs: Coefficients, *, dealias: bool = False
) -> np.ndarray:
    """Distortion energy density with spectral gradients.

    Diagnostic quantity, so products default to exact; pass
    ``dealias=True`` to reproduce the masked solver arithmetic.
    """
    ops = get_ops(q.grid)
    a1, a2, b1, b2 = _q_gradients(ops, q)
    density = kernels.elastic_density(
        q.q1, q.q2, a1, a2, b1, b2, coeffs.l1, coeffs.l2, coeffs.l3, coeffs.l4
    )
    return ops.dealias(density) if dealias else density


def total_free_energy(q: QTensorField, coeffs: Coefficients) -> float:
    """Grid quadrature of bulk plus elastic density."""
    ops = get_ops(q.grid)
    return ops.integral(bulk_energy_density(q, coeffs)) + ops.integral(
        elastic_energy_density(q, coeffs)
    )


def free_energy_symmetric(
    grid: GridSpec,
    m11: np.ndarray,
    m12: np.ndarray,
    m22: np.ndarray,
    coeffs: Coefficients,
) -> float:
    """Free energy of a general symmetric (possibly traceful) tensor field.

    Needed by the variational oracle, which perturbs Q in symmetric
    directions without the trace constraint; here tr(M^3) does not vanish
    and b contributes.
    """
    ops = get_ops(grid)
    tr2 = m11 ** 2 + 2.0 * m12 ** 2 + m22 ** 2
    tr3 = m11 ** 3 + m22 ** 3 + 3.0 * m12 ** 2 * (m11 + m22)
    bulk = 0.5 * coeffs.a * tr2 - (coeffs.b / 3.0) * tr3 + 0.25 * coeffs.c * tr2 ** 2

    d11_1, d11_2 = _gradients(ops, m11)
    d12_1, d12_2 = _gradients(ops, m12)
    d22_1, d22_2 = _gradients(ops, m22)
    e1 = d11_1 ** 2 + d11_2 ** 2 + 2.0 * (d12_1 ** 2 + d12_2 ** 2) + d22_1 ** 2 + d22_2 ** 2
    e2 = (
        d11_1 ** 2
        + d12_1 ** 2
        + 2.0 * (d12_1 * d11_2 + d22_1 * d12_2)
        + d12_2 ** 2
        + d22_2 ** 2
    )
    e3 = (d11_1 + d12_2) ** 2 + (d12_1 + d22_2) ** 2
    g11 = d11_1 ** 2 + 2.0 * d12_1 ** 2 + d22_1 ** 2
    g12 = d11_1 * d11_2 + 2.0 * d12_1 * d12_2 + d22_1 * d22_2
    g22 = d11_2 ** 2 + 2.0 * d12_2 ** 2 + d22_2 ** 2
    e4 = m11 * g11 + 2.0 * m12 * g12 + m22 * g22
    elastic = coeffs.l1 * e1 + coeffs.l2 * e2 + coeffs.l3 * e3 + coeffs.l4 * e4
    return ops.integral(bulk + elastic)


# ---------------------------------------------------------------------------
# molecular field and multipliers (cross-check route)
# ---------------------------------------------------------------------------


def molecular_field_h(q: QTensorField, coeffs: Coefficients) -> TensorField2:
    """Unconstrained molecular field H (minus the energy gradient).

    Componentwise, with dvg_i = d_k Q_ik:

        H_ij = 2 l1 Lap Q_ij + 2 (l2 + l3) d_j dvg_i
               + 2 l4 (Q_ij,l dvg_l + Q_ij,lk Q_lk)
               - l4 Q_kl,i Q_kl,j
               - a Q_ij + b (Q^2)_ij - c tr(Q^2) Q_ij.

    Neither symmetric nor traceless in general; the multipliers repair
    both. Exact products (diagnostic route).
    """
    ops = get_ops(q.grid)
    q1h = ops.fft(q.q1)
    q2h = ops.fft(q.q2)
    a1, a2 = ops.grad_hat(q1h)
    b1, b2 = ops.grad_hat(q2h)
    a1, a2, b1, b2 = map(ops.ifft, (a1, a2, b1, b2))
    lap1 = ops.ifft(-ops.ksq * q1h)
    lap2 = ops.ifft(-ops.ksq * q2h)

    dvg1 = a1 + b2  # d_k Q_1k
    dvg2 = b1 - a2  # d_k Q_2k
    dvg1h = ops.fft(dvg1)
    dvg2h = ops.fft(dvg2)
    d1_dvg1, d2_dvg1 = map(ops.ifft, ops.grad_hat(dvg1h))
    d1_dvg2, d2_dvg2 = map(ops.ifft, ops.grad_hat(dvg2h))

    # second partials of the two components for the Q_ij,lk Q_lk sum
    def second(fh):
        xx = ops.ifft(-ops.k1 ** 2 * fh)
        yy = ops.ifft(-ops.k2 ** 2 * fh)
        xy = ops.ifft(-ops.k1o * ops.k2o * fh)
        return xx, xy, yy

    q1xx, q1xy, q1yy = second(q1h)
    q2xx, q2xy, q2yy = second(q2h)

    def transport_terms(grad1, grad2, fxx, fxy, fyy):
        ta = 2.0 * coeffs.l4 * (grad1 * dvg1 + grad2 * dvg2)
        tb = 2.0 * coeffs.l4 * ((fxx - fyy) * q.q1 + 2.0 * fxy * q.q2)
        return ta + tb

    t_q1 = transport_terms(a1, a2, q1xx, q1xy, q1yy)
    t_q2 = transport_terms(b1, b2, q2xx, q2xy, q2yy)

    g11 = 2.0 * (a1 * a1 + b1 * b1)
    g12 = 2.0 * (a1 * a2 + b1 * b2)
    g22 = 2.0 * (a2 * a2 + b2 * b2)

    trq2 = 2.0 * (q.q1 ** 2 + q.q2 ** 2)
    qsq = q.q1 ** 2 + q.q2 ** 2  # Q^2 = (q1^2 + q2^2) I in 2d
    l23 = coeffs.l2 + coeffs.l3

    h11 = (
        2.0 * coeffs.l1 * lap1 + 2.0 * l23 * d1_dvg1 + t_q1 - coeffs.l4 * g11
        - coeffs.a * q.q1 + coeffs.b * qsq - coeffs.c * trq2 * q.q1
    )
    h12 = (
        2.0 * coeffs.l1 * lap2 + 2.0 * l23 * d2_dvg1 + t_q2 - coeffs.l4 * g12
        - coeffs.a * q.q2 - coeffs.c * trq2 * q.q2
    )
    h21 = (
        2.0 * coeffs.l1 * lap2 + 2.0 * l23 * d1_dvg2 + t_q2 - coeffs.l4 * g12
        - coeffs.a * q.q2 - coeffs.c * trq2 * q.q2
    )
    h22 = (
        -2.0 * coeffs.l1 * lap1 + 2.0 * l23 * d2_dvg2 - t_q1 - coeffs.l4 * g22
        + coeffs.a * q.q1 + coeffs.b * qsq + coeffs.c * trq2 * q.q1
    )
    return TensorField2(q.grid, h11, h12, h21, h22)


def lagrange_multipliers(q: QTensorField, coeffs: Coefficients):
    """Scalar multiplier restoring tr = 0 and antisymmetric multiplier
    restoring symmetry:

        lambda       = -(b/2) tr(Q^2) - (l2+l3) d_l d_k Q_lk + (l4/2) |grad Q|^2
        (mu - mu^T)_ij = (l2+l3) (d_i dvg_j - d_j dvg_i)
    """
    ops = get_ops(q.grid)
    a1, a2, b1, b2 = _q_gradients(ops, q)
    dvg1 = a1 + b2
    dvg2 = b1 - a2
    gradsq = 2.0 * (a1 ** 2 + a2 ** 2 + b1 ** 2 + b2 ** 2)
    divdiv = ops.derivative(dvg1, (1, 0)) + ops.derivative(dvg2, (0, 1))
    trq2 = 2.0 * (q.q1 ** 2 + q.q2 ** 2)
    l23 = coeffs.l2 + coeffs.l3
    lam = -(coeffs.b / 2.0) * trq2 - l23 * divdiv + 0.5 * coeffs.l4 * gradsq
    mu12 = l23 * (ops.derivative(dvg2, (1, 0)) - ops.derivative(dvg1, (0, 1)))
    zero = np.zeros_like(mu12)
    return lam, TensorField2(q.grid, zero, mu12, -mu12, zero)


# ---------------------------------------------------------------------------
# constrained field (solver route)
# ---------------------------------------------------------------------------


def _q_gradients(ops: SpectralOps, q: QTensorField):
    g1 = ops.grad_hat(ops.fft(q.q1))
    g2 = ops.grad_hat(ops.fft(q.q2))
    return ops.ifft(g1[0]), ops.ifft(g1[1]), ops.ifft(g2[0]), ops.ifft(g2[1])


def _gradients(ops: SpectralOps, f: np.ndarray):
    g = ops.grad_hat(ops.fft(f))
    return ops.ifft(g[0]), ops.ifft(g[1])


def nonlinear_rhs_hats(
    ops: SpectralOps,
    q1: np.ndarray,
    q2: np.ndarray,
    a1: np.ndarray,
    a2: np.ndarray,
    b1: np.ndarray,
    b2: np.ndarray,
    coeffs: Coefficients,
    dealias: bool,
):
    """Spectral constrained-field terms other than zeta Lap Q.

    Returns the transforms of the cubic flux divergence, the traceless
    gradient-Gram part and the bulk force, summed; the full constrained
    field transform is this minus zeta |k|^2 Q-hat. Shared by the stepper
    (which treats zeta Lap Q implicitly) and the field-level evaluator.
    """
    trq2, g11, g12, g22, v11_1, v11_2, v12_1, v12_2 = kernels.stage_one(
        q1, q2, a1, a2, b1, b2
    )
    if dealias:
        trq2 = ops.dealias(trq2)
    f1, f2 = kernels.bulk_force(q1, q2, trq2, coeffs.a, coeffs.c)
    p1 = 0.5 * coeffs.l4 * (g22 - g11)
    p2 = -coeffs.l4 * g12
    two_l4 = 2.0 * coeffs.l4
    n1h = two_l4 * 1j * (ops.k1o * ops.fft(v11_1) + ops.k2o * ops.fft(v11_2)) + ops.fft(
        p1 + f1
    )
    n2h = two_l4 * 1j * (ops.k1o * ops.fft(v12_1) + ops.k2o * ops.fft(v12_2)) + ops.fft(
        p2 + f2
    )
    if dealias:
        n1h = ops.dealias_hat(n1h)
        n2h = ops.dealias_hat(n2h)
    return n1h, n2h


def constrained_field(
    q: QTensorField, coeffs: Coefficients, *, dealias: bool = False
) -> QTensorField:
    """Right-hand side of the order-parameter equation, closed form.

    Traceless and symmetric by construction (two-component output) and
    independent of b, bitwise. Defaults to exact products; the stepper
    calls the masked variant through its own path.
    """
    ops = get_ops(q.grid)
    q1h = ops.fft(q.q1)
    q2h = ops.fft(q.q2)
    a1, a2 = map(ops.ifft, ops.grad_hat(q1h))
    b1, b2 = map(ops.ifft, ops.grad_hat(q2h))
    n1h, n2h = nonlinear_rhs_hats(ops, q.q1, q.q2, a1, a2, b1, b2, coeffs, dealias)
    derived = validate_coefficients(coeffs)
    h1 = ops.ifft(n1h - derived.zeta * ops.ksq * q1h)
    h2 = ops.ifft(n2h - derived.zeta * ops.ksq * q2h)
    return QTensorField(q.grid, h1, h2)


def molecular_field_bundle(q: QTensorField, coeffs: Coefficients) -> MolecularFieldBundle:
    """H, both multipliers and their sum assembled independently.

    The ``constrained`` member is the solver's closed form; the bundle is
    the cross-check that H + lambda I + (mu - mu^T) lands on it.
    """
    h = molecular_field_h(q, coeffs)
    lam, mu = lagrange_multipliers(q, coeffs)
    return MolecularFieldBundle(
        h=h,
        lambda_field=lam,
        mu_antisym=mu,
        constrained=constrained_field(q, coeffs, dealias=False),
    )


# ---------------------------------------------------------------------------
# energy ledger
# ---------------------------------------------------------------------------


def energy_ledger(
    q: QTensorField,
    u: VelocityField,
    coeffs: Coefficients,
    t: float = 0.0,
) -> EnergyLedger:
    """Energies and instantaneous dissipation rates of one state.

    All integrals use exact (non-dealiased) products of the state, so the
    ledger reports the true discrete energy of the fields as they are.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _energy_ledger_impl(q, u, coeffs, t)


def _energy_ledger_impl(q, u, coeffs, t):
    ops = get_ops(q.grid)
    kinetic = 0.5 * ops.integral(u.u1 ** 2 + u.u2 ** 2)
    bulk = ops.integral(bulk_energy_density(q, coeffs))
    elastic = ops.integral(elastic_energy_density(q, coeffs))

    u1h = ops.fft(u.u1)
    u2h = ops.fft(u.u2)
    du11, du12 = map(ops.ifft, ops.grad_hat(u1h))
    du21, du22 = map(ops.ifft, ops.grad_hat(u2h))
    viscous = coeffs.nu * ops.integral(du11 ** 2 + du12 ** 2 + du21 ** 2 + du22 ** 2)

    h = constrained_field(q, coeffs, dealias=False)
    rotational = ops.integral(2.0 * (h.q1 ** 2 + h.q2 ** 2))

    reg = 0.0
    if coeffs.delta > 0.0:
        weight = ops.ksq ** coeffs.k_reg
        n4 = float(q.grid.n) ** 4
        reg = coeffs.delta * float(
            (weight * (np.abs(u1h) ** 2 + np.abs(u2h) ** 2)).sum() / n4
        )

    free = bulk + elastic
    return EnergyLedger(
        t=t,
        kinetic=kinetic,
        bulk=bulk,
        elastic=elastic,
        free=free,
        total=kinetic + free,
        viscous_diss=viscous,
        rotational_diss=rotational,
        reg_diss=reg,
        q_linf=q.linf(),
        u_l2=u.l2(),
    )
