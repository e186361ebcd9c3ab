"""Time integration of the coupled velocity / order-parameter system.

One first-order IMEX step treats the dissipative backbone implicitly, in
Fourier space where it is diagonal: nu Lap u and the optional
delta (-Lap)^k u in the momentum equation, zeta Lap Q in the order-parameter
equation. Everything else is explicit: fluid self-advection, corotational
transport of Q, the cubic and bulk parts of the constrained field, and the
stress divergence. The pressure never appears; the velocity update is Leray
projected and the rejected curl-free part is returned as the discrete
pressure gradient.

Stability of the explicit second-order cubic term rests on the smallness
regime |l4| ||Q||_inf < zeta that the maximum principle preserves; the
optional CFL guard covers the advective terms.

A simulation is single-owner: one logical thread advances a state. Distinct
simulations share no mutable state and may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._kernels import kernels
from .energetics import EnergyLedger, TensorField2, energy_ledger, nonlinear_rhs_hats
from .fields import (
    Coefficients,
    QTensorField,
    VelocityField,
    require_solvable,
)
from .spectral import SpectralOps, get_ops

__all__ = [
    "SimulationState",
    "StepperConfig",
    "StepOutput",
    "RunResult",
    "CFLViolation",
    "BlowUpError",
    "vorticity_and_strain",
    "corotational_transport",
    "shape_tensor_s",
    "step",
    "run",
]


class CFLViolation(RuntimeError):
    """Advective CFL number exceeded the configured guard; step refused."""

    def __init__(self, t: float, cfl: float, limit: float):
        super().__init__(f"CFL guard violated at t={t}: {cfl:.4g} > {limit:.4g}")
        self.t = t
        self.cfl = cfl
        self.limit = limit


class BlowUpError(RuntimeError):
    """Non-finite field values appeared; carries the last finite ledgers."""

    def __init__(self, t: float, series=()):
        super().__init__(f"non-finite field values at t={t}")
        self.t = t
        self.series = tuple(series)


@dataclass(frozen=True)
class SimulationState:
    """Immutable snapshot (t, u, Q) of one trajectory."""

    t: float
    u: VelocityField
    q: QTensorField

    def __post_init__(self):
        if self.u.grid != self.q.grid:
            raise ValueError("velocity and order parameter live on different grids")

    @property
    def grid(self):
        return self.q.grid


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    scheme: str = "imex1"
    dealias_enabled: bool = True
    cfl_guard: Optional[float] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.scheme != "imex1":
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class StepOutput:
    state: SimulationState
    pressure_gradient: VelocityField


@dataclass(frozen=True)
class RunResult:
    series: tuple
    final_state: SimulationState


# ---------------------------------------------------------------------------
# kinematics
# ---------------------------------------------------------------------------


def vorticity_and_strain(u: VelocityField):
    """Skew and symmetric parts of the velocity gradient.

    The gradient follows the Jacobian convention (grad u)_ij = d_j u_i, so
    strain + vorticity reproduces it exactly.
    """
    ops = get_ops(u.grid)
    du11, du12 = map(ops.ifft, ops.grad_hat(ops.fft(u.u1)))
    du21, du22 = map(ops.ifft, ops.grad_hat(ops.fft(u.u2)))
    w = 0.5 * (du12 - du21)
    zero = np.zeros_like(w)
    omega = TensorField2(u.grid, zero, w, -w, zero)
    strain = TensorField2(u.grid, du11, 0.5 * (du12 + du21), 0.5 * (du12 + du21), du22)
    return omega, strain


def corotational_transport(
    u: VelocityField, q: QTensorField, *, dealias: bool = True
) -> QTensorField:
    """u . grad Q + Q omega - omega Q, traceless symmetric by construction."""
    if u.grid != q.grid:
        raise ValueError("u and q live on different grids")
    ops = get_ops(q.grid)
    a1, a2 = map(ops.ifft, ops.grad_hat(ops.fft(q.q1)))
    b1, b2 = map(ops.ifft, ops.grad_hat(ops.fft(q.q2)))
    du12 = ops.ifft(1j * ops.k2o * ops.fft(u.u1))
    du21 = ops.ifft(1j * ops.k1o * ops.fft(u.u2))
    w = 0.5 * (du12 - du21)
    r1, r2 = kernels.rotation(w, q.q1, q.q2)
    t1 = kernels.advect(u.u1, u.u2, a1, a2) + r1
    t2 = kernels.advect(u.u1, u.u2, b1, b2) + r2
    if dealias:
        t1 = ops.dealias(t1)
        t2 = ops.dealias(t2)
    return QTensorField(q.grid, t1, t2)


def shape_tensor_s(grad_u: TensorField2, q: QTensorField, xi: float) -> TensorField2:
    """Flow-alignment source (xi A + w)(Q + I/2) + (Q + I/2)(xi A - w)
    - 2 xi (Q + I/2) tr(Q grad u).

    At xi = 0 this is exactly the commutator omega Q - Q omega, computed
    through the same kernel as the corotational transport so the reduction
    is bitwise. The general-xi form exists for completeness; the stepper
    runs the corotational case.
    """
    if grad_u.grid != q.grid:
        raise ValueError("grad_u and q live on different grids")
    w = 0.5 * (grad_u.m12 - grad_u.m21)
    if xi == 0.0:
        r1, r2 = kernels.rotation(w, q.q1, q.q2)
        return TensorField2(q.grid, -r1, -r2, -r2, r1)
    a11 = 0.5 * (grad_u.m11 + grad_u.m11)
    a12 = 0.5 * (grad_u.m12 + grad_u.m21)
    a22 = 0.5 * (grad_u.m22 + grad_u.m22)
    # P = Q + I/2
    p11 = q.q1 + 0.5
    p12 = q.q2
    p22 = -q.q1 + 0.5
    # L = xi A + omega, R = xi A - omega
    l11, l12, l21, l22 = xi * a11, xi * a12 + w, xi * a12 - w, xi * a22
    r11, r12, r21, r22 = xi * a11, xi * a12 - w, xi * a12 + w, xi * a22
    s11 = l11 * p11 + l12 * p12 + p11 * r11 + p12 * r21
    s12 = l11 * p12 + l12 * p22 + p11 * r12 + p12 * r22
    s21 = l21 * p11 + l22 * p12 + p12 * r11 + p22 * r21
    s22 = l21 * p12 + l22 * p22 + p12 * r12 + p22 * r22
    trqgu = (
        q.q1 * grad_u.m11 + q.q2 * grad_u.m21 + q.q2 * grad_u.m12 - q.q1 * grad_u.m22
    )
    s11 = s11 - 2.0 * xi * p11 * trqgu
    s12 = s12 - 2.0 * xi * p12 * trqgu
    s21 = s21 - 2.0 * xi * p12 * trqgu
    s22 = s22 - 2.0 * xi * p22 * trqgu
    return TensorField2(q.grid, s11, s12, s21, s22)


# ---------------------------------------------------------------------------
# IMEX step
# ---------------------------------------------------------------------------


def _step_hats(
    ops: SpectralOps,
    q1h,
    q2h,
    u1h,
    u2h,
    coeffs: Coefficients,
    zeta: float,
    config: StepperConfig,
    t: float,
):
    """Advance spectral state one step; returns new hats and pressure hats."""
    # overflow to inf is the blow-up signal checked at the end, not a warning
    with np.errstate(over="ignore", invalid="ignore"):
        return _step_hats_impl(ops, q1h, q2h, u1h, u2h, coeffs, zeta, config, t)


def _step_hats_impl(ops, q1h, q2h, u1h, u2h, coeffs, zeta, config, t):
    dt = config.dt
    dealias = config.dealias_enabled

    q1 = ops.ifft(q1h)
    q2 = ops.ifft(q2h)
    u1 = ops.ifft(u1h)
    u2 = ops.ifft(u2h)

    if config.cfl_guard is not None:
        umax = float(np.sqrt((u1 ** 2 + u2 ** 2).max(initial=0.0)))
        cfl = umax * dt * ops.grid.n
        if cfl > config.cfl_guard:
            raise CFLViolation(t, cfl, config.cfl_guard)

    a1, a2 = map(ops.ifft, ops.grad_hat(q1h))
    b1, b2 = map(ops.ifft, ops.grad_hat(q2h))
    du11, du12 = map(ops.ifft, ops.grad_hat(u1h))
    du21, du22 = map(ops.ifft, ops.grad_hat(u2h))
    w = 0.5 * (du12 - du21)

    # order parameter: explicit nonlinear terms, implicit zeta Lap Q
    n1h, n2h = nonlinear_rhs_hats(ops, q1, q2, a1, a2, b1, b2, coeffs, dealias)
    r1, r2 = kernels.rotation(w, q1, q2)
    t1 = kernels.advect(u1, u2, a1, a2) + r1
    t2 = kernels.advect(u1, u2, b1, b2) + r2
    e1h = n1h - ops.fft(t1)
    e2h = n2h - ops.fft(t2)
    if dealias:
        e1h = ops.dealias_hat(e1h)
        e2h = ops.dealias_hat(e2h)
    q_div = 1.0 + dt * zeta * ops.ksq
    q1h_new = (q1h + dt * e1h) / q_div
    q2h_new = (q2h + dt * e2h) / q_div

    # full constrained field at t_n for the stresses
    h1 = ops.ifft(n1h - zeta * ops.ksq * q1h)
    h2 = ops.ifft(n2h - zeta * ops.ksq * q2h)

    s = kernels.sigma_a_scalar(q1, q2, h1, h2)
    s11, s12, s21, s22 = kernels.sigma_s_quadratic(
        a1, a2, b1, b2, coeffs.l1, coeffs.l2, coeffs.l3
    )
    g11 = 2.0 * (a1 * a1 + b1 * b1)
    g12 = 2.0 * (a1 * a2 + b1 * b2)
    g22 = 2.0 * (a2 * a2 + b2 * b2)
    if dealias:
        g11, g12, g22 = ops.dealias(g11), ops.dealias(g12), ops.dealias(g22)
    c11, c12, c21, c22 = kernels.sigma_s_cubic(q1, q2, g11, g12, g22, coeffs.l4)
    sh = ops.fft(s)
    f1h = (
        1j * (ops.k1o * ops.fft(s11 + c11) + ops.k2o * ops.fft(s12 + c12))
        + 1j * ops.k2o * sh
    )
    f2h = (
        1j * (ops.k1o * ops.fft(s21 + c21) + ops.k2o * ops.fft(s22 + c22))
        - 1j * ops.k1o * sh
    )
    f1h = f1h - ops.fft(kernels.advect(u1, u2, du11, du12))
    f2h = f2h - ops.fft(kernels.advect(u1, u2, du21, du22))
    if dealias:
        f1h = ops.dealias_hat(f1h)
        f2h = ops.dealias_hat(f2h)

    p1h, p2h, grad1h, grad2h = ops.leray_hat(f1h, f2h)
    u_div = 1.0 + dt * (coeffs.nu * ops.ksq + coeffs.delta * ops.ksq ** coeffs.k_reg)
    u1h_new = (u1h + dt * p1h) / u_div
    u2h_new = (u2h + dt * p2h) / u_div

    for arr in (q1h_new, q2h_new, u1h_new, u2h_new):
        if not np.isfinite(arr).all():
            raise BlowUpError(t + dt)
    return q1h_new, q2h_new, u1h_new, u2h_new, grad1h, grad2h


def _state_hats(ops: SpectralOps, state: SimulationState, dealias: bool):
    q1h = ops.fft(state.q.q1)
    q2h = ops.fft(state.q.q2)
    u1h, u2h, _, _ = ops.leray_hat(ops.fft(state.u.u1), ops.fft(state.u.u2))
    if dealias:
        q1h = ops.dealias_hat(q1h)
        q2h = ops.dealias_hat(q2h)
        u1h = ops.dealias_hat(u1h)
        u2h = ops.dealias_hat(u2h)
    return q1h, q2h, u1h, u2h


def _materialize(
    ops: SpectralOps, t: float, q1h, q2h, u1h, u2h
) -> SimulationState:
    grid = ops.grid
    return SimulationState(
        t=t,
        u=VelocityField(grid, ops.ifft(u1h), ops.ifft(u2h)),
        q=QTensorField(grid, ops.ifft(q1h), ops.ifft(q2h)),
    )


def step(
    state: SimulationState, coeffs: Coefficients, config: StepperConfig
) -> StepOutput:
    """One IMEX step from a physical-space state.

    Raises CoefficientError on invalid coefficients, CFLViolation when the
    guard trips and BlowUpError on non-finite output.
    """
    derived = require_solvable(coeffs)
    ops = get_ops(state.grid)
    hats = _state_hats(ops, state, config.dealias_enabled)
    q1h, q2h, u1h, u2h, g1h, g2h = _step_hats(
        ops, *hats, coeffs, derived.zeta, config, state.t
    )
    new_state = _materialize(ops, state.t + config.dt, q1h, q2h, u1h, u2h)
    pressure_gradient = VelocityField(state.grid, ops.ifft(g1h), ops.ifft(g2h))
    return StepOutput(state=new_state, pressure_gradient=pressure_gradient)


def run(
    initial: SimulationState,
    coeffs: Coefficients,
    config: StepperConfig,
    t_end: float,
    observer: Optional[Callable[[SimulationState, EnergyLedger], None]] = None,
    stride: int = 1,
) -> RunResult:
    """March to t_end, sampling the ledger every ``stride`` steps.

    Samples always include t = 0 and the final step. The observer, when
    given, receives each sampled (state, ledger). Deterministic: the same
    inputs reproduce the identical series bitwise. Step errors propagate
    with the failing time; blow-up carries the ledger rows collected so far.
    """
    if t_end <= initial.t:
        raise ValueError(f"t_end={t_end} must exceed initial time {initial.t}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    derived = require_solvable(coeffs)
    n_steps = int(round((t_end - initial.t) / config.dt))
    if n_steps < 1:
        raise ValueError("t_end - initial.t is below one time step")

    ops = get_ops(initial.grid)
    hats = list(_state_hats(ops, initial, config.dealias_enabled))
    series = []

    def sample(i: int):
        t = initial.t + i * config.dt
        state = _materialize(ops, t, *hats)
        ledger = energy_ledger(state.q, state.u, coeffs, t=t)
        series.append(ledger)
        if observer is not None:
            observer(state, ledger)
        return state

    state = sample(0)
    for i in range(1, n_steps + 1):
        t_now = initial.t + (i - 1) * config.dt
        try:
            out = _step_hats(ops, *hats, coeffs, derived.zeta, config, t_now)
        except BlowUpError as exc:
            raise BlowUpError(exc.t, series) from None
        hats = list(out[:4])
        if i % stride == 0 or i == n_steps:
            state = sample(i)
    return RunResult(series=tuple(series), final_state=state)
