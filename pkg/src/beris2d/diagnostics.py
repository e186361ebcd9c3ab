"""Measurable consequences of the theory: thresholds, identities, metrics.

Each routine evaluates both sides of some identity or bound by an
independent route and reports the defect, so a failure localizes the broken
ingredient. Random test fields are band-limited to n/8, keeping spectral
derivatives exact and grid quadrature of their products alias-free; the
checks therefore run with dealiasing disabled and their tolerances are
grid-independent.

Pure analysis over immutable snapshots; safe to parallelize across checks
and seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import stress
from .dynamics import SimulationState
from .energetics import (
    EnergyLedger,
    constrained_field,
    free_energy_symmetric,
    lagrange_multipliers,
    molecular_field_h,
)
from .fields import Coefficients, GridSpec, QTensorField, VelocityField, validate_coefficients
from .spectral import get_ops

__all__ = [
    "ThresholdReport",
    "DependenceMetric",
    "MaxPrincipleVerdict",
    "ResidualReport",
    "IdentityReport",
    "eta_thresholds",
    "cancellation_check",
    "max_principle_monitor",
    "energy_law_residual",
    "continuous_dependence_metric",
    "variational_oracle",
    "interpolation_check",
    "identity_suite",
    "constrained_consistency",
    "random_suite_fields",
]

DEFAULT_K1 = 1.0 / 121.0
DEFAULT_K2 = 1.0 / 121.0


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdReport:
    """Smallness thresholds eta and the induced lower bounds a >= -c eta.

    eta_thm uses the configurable factors K1, K2 (known only up to
    domain-dependent constants); eta_lemma32 = (1/9)(zeta/l4)^2 is the
    sharpest explicit sup-norm-preservation bound, eta_lemma24 =
    (1/121)(zeta/l4)^2 the elliptic-estimate bound, and eta2 the
    continuous-dependence bound min{(sqrt(nu)/(16 C*)) zeta/|l4|,
    (1/64)(zeta/l4)^2}. With l4 = 0 every threshold is unconstrained
    (infinite).
    """

    eta_thm: float
    eta_lemma32: float
    eta_lemma24: float
    eta2: float
    a_min_thm: float
    a_min_lemma32: float
    a_min_lemma24: float
    a_min_eta2: float
    unconstrained: bool


def eta_thresholds(
    coeffs: Coefficients,
    k1: float = DEFAULT_K1,
    k2: float = DEFAULT_K2,
    c_star: float = 1.0,
) -> ThresholdReport:
    derived = validate_coefficients(coeffs)
    if coeffs.l4 == 0.0:
        inf = math.inf
        return ThresholdReport(inf, inf, inf, inf, -inf, -inf, -inf, -inf, True)
    ratio = derived.zeta / coeffs.l4
    ratio_abs = derived.zeta / abs(coeffs.l4)
    eta_thm = min(
        k1 * (derived.kappa / coeffs.l4) ** 2,
        k2 * ratio_abs * math.sqrt(coeffs.nu),
    )
    eta_32 = ratio ** 2 / 9.0
    eta_24 = ratio ** 2 / 121.0
    eta2 = min(math.sqrt(coeffs.nu) / (16.0 * c_star) * ratio_abs, ratio ** 2 / 64.0)
    return ThresholdReport(
        eta_thm=eta_thm,
        eta_lemma32=eta_32,
        eta_lemma24=eta_24,
        eta2=eta2,
        a_min_thm=-coeffs.c * eta_thm,
        a_min_lemma32=-coeffs.c * eta_32,
        a_min_lemma24=-coeffs.c * eta_24,
        a_min_eta2=-coeffs.c * eta2,
        unconstrained=False,
    )


# ---------------------------------------------------------------------------
# pointwise cancellation
# ---------------------------------------------------------------------------


def cancellation_check(q_point, m_point, grad_u_point):
    """Both sides of the commutator identity at a single point:

        (Q M - M Q) : grad_u  ==  (Q w - w Q) : M,   w = skew(grad_u),

    for symmetric Q, M. Returns (lhs, rhs, |lhs - rhs|)."""
    q = np.asarray(q_point, dtype=float)
    m = np.asarray(m_point, dtype=float)
    gu = np.asarray(grad_u_point, dtype=float)
    for name, mat in (("q", q), ("m", m)):
        scale = max(np.abs(mat).max(), 1.0)
        if np.abs(mat - mat.T).max() > 1e-12 * scale:
            raise ValueError(f"{name} must be symmetric")
    comm = q @ m - m @ q
    lhs = float((comm * gu).sum())
    w = 0.5 * (gu - gu.T)
    rhs = float(((q @ w - w @ q) * m).sum())
    return lhs, rhs, abs(lhs - rhs)


# ---------------------------------------------------------------------------
# sup-norm monitoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaxPrincipleVerdict:
    passed: bool
    first_violation_time: Optional[float]
    max_linf: float
    bound: float


def max_principle_monitor(
    times: Sequence[float],
    linf_values: Sequence[float],
    eta: float,
    tol: float = 1e-3,
) -> MaxPrincipleVerdict:
    """Check sup-norm preservation: every sample <= sqrt(eta) (1 + tol).

    The boundary value sqrt(eta) itself is admissible.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(linf_values, dtype=float)
    if t.size == 0 or t.size != v.size:
        raise ValueError("empty or mismatched sup-norm series")
    bound = math.sqrt(eta) * (1.0 + tol)
    bad = np.nonzero(v > bound)[0]
    return MaxPrincipleVerdict(
        passed=bad.size == 0,
        first_violation_time=float(t[bad[0]]) if bad.size else None,
        max_linf=float(v.max()),
        bound=bound,
    )


# ---------------------------------------------------------------------------
# energy-law residual
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    per_step: np.ndarray
    cumulative_abs: float
    max_abs: float


def energy_law_residual(ledgers: Sequence[EnergyLedger], dt: float) -> ResidualReport:
    """Per-step defect of the discrete energy balance.

    r_n = [E(t_{n+1}) - E(t_n)] + dt (viscous + rotational + reg)(t_n);
    first order in dt for the implicit-explicit split. Requires the ledger
    sampled every step.
    """
    if len(ledgers) < 2:
        raise ValueError("need at least two ledger rows")
    t = np.array([row.t for row in ledgers])
    if np.abs(np.diff(t) - dt).max() > 1e-9 * max(dt, 1.0):
        raise ValueError("ledger series is not sampled every step of size dt")
    total = np.array([row.total for row in ledgers])
    diss = np.array(
        [row.viscous_diss + row.rotational_diss + row.reg_diss for row in ledgers]
    )
    r = np.diff(total) + dt * diss[:-1]
    return ResidualReport(
        per_step=r, cumulative_abs=float(np.abs(r).sum()), max_abs=float(np.abs(r).max())
    )


# ---------------------------------------------------------------------------
# continuous dependence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DependenceMetric:
    """Lower-order squared distance between two states:

    |(-Lap + I)^{-1}(u1 - u2)|_{H1}^2 + |Q1 - Q2|_{L2}^2.
    """

    value: float
    velocity_part: float
    q_part: float


def continuous_dependence_metric(
    s1: SimulationState, s2: SimulationState
) -> DependenceMetric:
    if s1.grid != s2.grid:
        raise ValueError("states live on different grids")
    ops = get_ops(s1.grid)
    w1 = ops.helmholtz_inverse(s1.u.u1 - s2.u.u1)
    w2 = ops.helmholtz_inverse(s1.u.u2 - s2.u.u2)
    velocity_part = ops.norm_sq_components((w1, w2), "H1")
    dq1 = s1.q.q1 - s2.q.q1
    dq2 = s1.q.q2 - s2.q.q2
    # Frobenius convention: |Q|^2 = 2 (q1^2 + q2^2)
    q_part = 2.0 * ops.norm_sq_components((dq1, dq2), "L2")
    return DependenceMetric(
        value=velocity_part + q_part, velocity_part=velocity_part, q_part=q_part
    )


# ---------------------------------------------------------------------------
# variational oracle
# ---------------------------------------------------------------------------


def _band_noise(ops, rng, max_mode):
    white = rng.standard_normal((ops.grid.n, ops.grid.n))
    keep = (np.abs(ops.m1) <= max_mode) & (np.abs(ops.m2) <= max_mode)
    return ops.ifft(ops.fft(white) * keep)


def variational_oracle(
    q: QTensorField,
    coeffs: Coefficients,
    n_directions: int = 10,
    eps: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative defect between the central finite difference of the free
    energy and the molecular-field pairing <-H, dQ>.

    Directions are random symmetric band-limited tensor fields, not
    traceless: the oracle probes the unconstrained derivative, including the
    b term that the constrained dynamics never sees.
    """
    if not 1e-6 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-6, 1e-3], got {eps}")
    ops = get_ops(q.grid)
    rng = np.random.default_rng(seed)
    max_mode = max(1, q.grid.n // 8)
    h = molecular_field_h(q, coeffs)
    m11_0, m12_0, m22_0 = q.q1, q.q2, -q.q1
    worst = 0.0
    for _ in range(n_directions):
        p11 = _band_noise(ops, rng, max_mode)
        p12 = _band_noise(ops, rng, max_mode)
        p22 = _band_noise(ops, rng, max_mode)
        e_plus = free_energy_symmetric(
            q.grid, m11_0 + eps * p11, m12_0 + eps * p12, m22_0 + eps * p22, coeffs
        )
        e_minus = free_energy_symmetric(
            q.grid, m11_0 - eps * p11, m12_0 - eps * p12, m22_0 - eps * p22, coeffs
        )
        fd = (e_plus - e_minus) / (2.0 * eps)
        pairing = -ops.integral(h.m11 * p11 + (h.m12 + h.m21) * p12 + h.m22 * p22)
        worst = max(worst, abs(fd - pairing) / max(abs(fd), 1e-30))
    return worst


# ---------------------------------------------------------------------------
# identity suite
# ---------------------------------------------------------------------------


def interpolation_check(grid: GridSpec, f: np.ndarray):
    """Both sides of |grad f|_{L4}^2 <= 3 |f|_inf |Lap f|_{L2} by quadrature."""
    ops = get_ops(grid)
    fh = ops.fft(f)
    g1, g2 = map(ops.ifft, ops.grad_hat(fh))
    lhs = math.sqrt(ops.integral((g1 ** 2 + g2 ** 2) ** 2))
    lap = ops.ifft(-ops.ksq * fh)
    rhs = 3.0 * float(np.abs(f).max()) * math.sqrt(ops.integral(lap ** 2))
    return lhs, rhs


def constrained_consistency(q: QTensorField, coeffs: Coefficients) -> float:
    """Max pointwise gap between the closed-form constrained field and the
    independently assembled H + lambda I + (mu - mu^T)."""
    closed = constrained_field(q, coeffs, dealias=False)
    h = molecular_field_h(q, coeffs)
    lam, mu = lagrange_multipliers(q, coeffs)
    r11 = h.m11 + lam + mu.m11
    r12 = h.m12 + mu.m12
    r21 = h.m21 + mu.m21
    r22 = h.m22 + lam + mu.m22
    return float(
        max(
            np.abs(r11 - closed.q1).max(),
            np.abs(r12 - closed.q2).max(),
            np.abs(r21 - closed.q2).max(),
            np.abs(r22 + closed.q1).max(),
        )
    )


@dataclass(frozen=True)
class IdentityReport:
    collapse_max_abs: float
    duality_max_rel: float
    pairing_max_rel: float
    gauge_max_abs: float
    interpolation_holds: bool
    interpolation_min_margin: float
    b_independent: bool
    samples: int

    def all_pass(
        self,
        collapse_tol: float = 1e-10,
        duality_tol: float = 1e-8,
        pairing_tol: float = 1e-8,
        gauge_tol: float = 1e-10,
    ) -> bool:
        return (
            self.collapse_max_abs <= collapse_tol
            and self.duality_max_rel <= duality_tol
            and self.pairing_max_rel <= pairing_tol
            and self.gauge_max_abs <= gauge_tol
            and self.interpolation_holds
            and self.b_independent
        )


def random_suite_fields(grid: GridSpec, n_samples: int, seed: int):
    """Paired random (Q, u) inputs for the identity suite: band-limited to
    n/8, Q rescaled to order-one sup norm, u solenoidal."""
    ops = get_ops(grid)
    rng = np.random.default_rng(seed)
    max_mode = max(1, grid.n // 8)
    qs, us = [], []
    for _ in range(n_samples):
        q1 = _band_noise(ops, rng, max_mode)
        q2 = _band_noise(ops, rng, max_mode)
        scale = 0.5 / max(np.sqrt(2.0 * (q1 ** 2 + q2 ** 2)).max(), 1e-30)
        qs.append(QTensorField(grid, q1 * scale, q2 * scale))
        w1 = _band_noise(ops, rng, max_mode)
        w2 = _band_noise(ops, rng, max_mode)
        p1, p2, _, _ = ops.leray_hat(ops.fft(w1), ops.fft(w2))
        us.append(VelocityField(grid, ops.ifft(p1), ops.ifft(p2)))
    return qs, us


def identity_suite(
    qs: Sequence[QTensorField],
    us: Sequence[VelocityField],
    coeffs: Coefficients,
) -> IdentityReport:
    """Run the algebraic identity checks on given randomized inputs.

    Checks, each computed by two independent routes with exact products:
    the (l2+l3) Lap Q collapse of the mixed second-derivative terms, the
    distortion-stress / transport duality integral, the antisymmetric-stress
    commutator pairing, the multiplier gauge orthogonality, the gradient
    interpolation inequality, and bitwise b-independence of the constrained
    field.
    """
    if len(qs) != len(us):
        raise ValueError("need matching numbers of Q and u samples")
    grid = qs[0].grid
    ops = get_ops(grid)
    l23 = coeffs.l2 + coeffs.l3
    collapse_max = 0.0
    duality_max = 0.0
    pairing_max = 0.0
    gauge_max = 0.0
    holds = True
    min_margin = math.inf

    coeffs_b0 = Coefficients(
        nu=coeffs.nu, l1=coeffs.l1, l2=coeffs.l2, l3=coeffs.l3, l4=coeffs.l4,
        a=coeffs.a, b=0.0, c=coeffs.c, xi=coeffs.xi,
        delta=coeffs.delta, k_reg=coeffs.k_reg,
    )
    coeffs_b7 = Coefficients(
        nu=coeffs.nu, l1=coeffs.l1, l2=coeffs.l2, l3=coeffs.l3, l4=coeffs.l4,
        a=coeffs.a, b=7.0, c=coeffs.c, xi=coeffs.xi,
        delta=coeffs.delta, k_reg=coeffs.k_reg,
    )
    b_ok = True

    for idx, (q, u) in enumerate(zip(qs, us)):
        a1, a2 = map(ops.ifft, ops.grad_hat(ops.fft(q.q1)))
        b1, b2 = map(ops.ifft, ops.grad_hat(ops.fft(q.q2)))
        dvg1 = a1 + b2
        dvg2 = b1 - a2

        # collapse of the mixed second-derivative block onto l23 Lap Q
        lhs1 = l23 * (ops.derivative(dvg1, (1, 0)) - ops.derivative(dvg2, (0, 1)))
        lhs2 = l23 * (ops.derivative(dvg1, (0, 1)) + ops.derivative(dvg2, (1, 0)))
        collapse_max = max(
            collapse_max,
            float(np.abs(lhs1 - l23 * ops.laplacian(q.q1)).max()),
            float(np.abs(lhs2 - l23 * ops.laplacian(q.q2)).max()),
        )

        # distortion-stress / transport duality
        ss = stress.sigma_s(q, coeffs, dealias=False)
        div = stress.stress_divergence(
            stress.StressField(grid, *(np.zeros_like(q.q1),) * 4), ss, dealias=False
        )
        lhs = ops.integral(u.u1 * div.u1 + u.u2 * div.u2)
        h = molecular_field_h(q, coeffs)
        trq2 = 2.0 * (q.q1 ** 2 + q.q2 ** 2)
        qsq = q.q1 ** 2 + q.q2 ** 2
        hel11 = h.m11 + coeffs.a * q.q1 - coeffs.b * qsq + coeffs.c * trq2 * q.q1
        hel12 = h.m12 + coeffs.a * q.q2 + coeffs.c * trq2 * q.q2
        hel21 = h.m21 + coeffs.a * q.q2 + coeffs.c * trq2 * q.q2
        hel22 = h.m22 - coeffs.a * q.q1 - coeffs.b * qsq - coeffs.c * trq2 * q.q1
        adv1 = u.u1 * a1 + u.u2 * a2
        adv2 = u.u1 * b1 + u.u2 * b2
        rhs = -ops.integral(hel11 * adv1 + (hel12 + hel21) * adv2 - hel22 * adv1)
        duality_max = max(
            duality_max, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30)
        )

        # commutator pairing: int sigma^a(M) : grad u == int (Qw - wQ) : M
        m = qs[(idx + 1) % len(qs)]  # independent symmetric traceless field
        s = 2.0 * (q.q1 * m.q2 - q.q2 * m.q1)
        du12 = ops.ifft(1j * ops.k2o * ops.fft(u.u1))
        du21 = ops.ifft(1j * ops.k1o * ops.fft(u.u2))
        w = 0.5 * (du12 - du21)
        lhs_pair = ops.integral(s * du12 - s * du21)
        rhs_pair = ops.integral(2.0 * (-2.0 * w * q.q2 * m.q1 + 2.0 * w * q.q1 * m.q2))
        pairing_max = max(
            pairing_max,
            abs(lhs_pair - rhs_pair) / max(abs(lhs_pair), abs(rhs_pair), 1e-30),
        )

        # gauge orthogonality of the multipliers against traceless symmetric M
        lam, mu = lagrange_multipliers(q, coeffs)
        gauge = lam * m.q1 + mu.m12 * m.q2 + mu.m21 * m.q2 + lam * (-m.q1)
        gauge_max = max(gauge_max, float(np.abs(gauge).max()))

        # interpolation inequality on the scalar components
        for f in (q.q1, q.q2):
            lhs_i, rhs_i = interpolation_check(grid, f)
            if lhs_i > rhs_i:
                holds = False
            min_margin = min(min_margin, rhs_i - lhs_i)

        # b-independence, bitwise
        h_b0 = constrained_field(q, coeffs_b0, dealias=False)
        h_b7 = constrained_field(q, coeffs_b7, dealias=False)
        b_ok = b_ok and np.array_equal(h_b0.q1, h_b7.q1) and np.array_equal(
            h_b0.q2, h_b7.q2
        )

    return IdentityReport(
        collapse_max_abs=collapse_max,
        duality_max_rel=duality_max,
        pairing_max_rel=pairing_max,
        gauge_max_abs=gauge_max,
        interpolation_holds=holds,
        interpolation_min_margin=min_margin,
        b_independent=b_ok,
        samples=len(qs),
    )
