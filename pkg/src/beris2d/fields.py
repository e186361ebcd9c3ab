"""Grids, field containers, coefficient validation and initial data.

The order parameter is a traceless symmetric 2x2 tensor field. On the
periodic unit square it has exactly two free components, stored as the
scalar grids ``q1`` and ``q2`` with

    Q = [[q1, q2],
         [q2, -q1]].

Trace and symmetry are therefore structural, never enforced numerically.
All containers are immutable snapshots (frozen dataclasses over read-only
arrays); every function here is pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpec",
    "QTensorField",
    "VelocityField",
    "Coefficients",
    "DerivedConstants",
    "CoefficientError",
    "assemble",
    "validate_coefficients",
    "require_solvable",
    "random_initial_q",
    "random_solenoidal_velocity",
    "zero_q",
    "zero_velocity",
]


class CoefficientError(ValueError):
    """A model assumption needed by the solver does not hold."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out is arr:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GridSpec:
    """Uniform n x n grid on the periodic unit cell [0, 1)^2.

    n must be a power of two, at least 8, so transforms stay fast and the
    2/3 dealiasing cutoff is well separated from the Nyquist mode. The cell
    has measure one: quadrature of a constant field returns that constant.
    """

    n: int

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 8, got {n!r}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    def coords(self):
        """Mesh arrays (X1, X2) with X1 varying along axis 0."""
        x = np.arange(self.n) / self.n
        return np.meshgrid(x, x, indexing="ij")


@dataclass(frozen=True)
class QTensorField:
    """Traceless symmetric tensor field in two-component representation."""

    grid: GridSpec
    q1: np.ndarray
    q2: np.ndarray

    def __post_init__(self):
        shape = (self.grid.n, self.grid.n)
        object.__setattr__(self, "q1", _frozen(self.q1))
        object.__setattr__(self, "q2", _frozen(self.q2))
        if self.q1.shape != shape or self.q2.shape != shape:
            raise ValueError(f"component shape must be {shape}")

    def frobenius_sq(self) -> np.ndarray:
        """Pointwise |Q|^2 = 2 (q1^2 + q2^2)."""
        return 2.0 * (self.q1 ** 2 + self.q2 ** 2)

    def linf(self) -> float:
        """Max over the grid of the pointwise Frobenius norm."""
        return float(np.sqrt(self.frobenius_sq().max(initial=0.0)))


@dataclass(frozen=True)
class VelocityField:
    """Two-component velocity field; solenoidal after Leray projection."""

    grid: GridSpec
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        shape = (self.grid.n, self.grid.n)
        object.__setattr__(self, "u1", _frozen(self.u1))
        object.__setattr__(self, "u2", _frozen(self.u2))
        if self.u1.shape != shape or self.u2.shape != shape:
            raise ValueError(f"component shape must be {shape}")

    def l2(self) -> float:
        return float(np.sqrt(np.mean(self.u1 ** 2 + self.u2 ** 2)))

    def linf(self) -> float:
        return float(np.sqrt((self.u1 ** 2 + self.u2 ** 2).max(initial=0.0)))


def assemble(q: QTensorField, index) -> np.ndarray:
    """Full 2x2 matrix value of Q at one grid point.

    Exists for diagnostic boundaries only; the solver never materializes
    full matrices.
    """
    i, j = index
    n = q.grid.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"grid index {(i, j)} out of range for n={n}")
    v1 = q.q1[i, j]
    v2 = q.q2[i, j]
    return np.array([[v1, v2], [v2, -v1]])


@dataclass(frozen=True)
class Coefficients:
    """Material and model constants.

    nu: fluid viscosity (> 0).
    l1..l4: elastic constants; l4 multiplies the cubic distortion term.
    a, b, c: bulk potential constants; b is stored but dynamically inert in
        two dimensions (the cubic trace invariant of a traceless symmetric
        2x2 tensor vanishes identically).
    xi: shape/alignment parameter (solver runs the corotational case xi=0).
    delta, k_reg: strength and order of the optional hyperviscous
        regularization delta (-Laplacian)^k_reg in the momentum equation;
        k_reg must be an even integer >= 4 whenever delta > 0.
    """

    nu: float
    l1: float
    l2: float
    l3: float
    l4: float
    a: float
    b: float
    c: float
    xi: float = 0.0
    delta: float = 0.0
    k_reg: int = 4


@dataclass(frozen=True)
class DerivedConstants:
    """Combined elastic constants and assumption flags.

    zeta = 2 l1 + l2 + l3 is the diffusion constant of the order-parameter
    equation; kappa = min(l1 + l2, l1 + l3) > 0 is the coercivity constant
    of the quadratic distortion energy, and zeta >= 2 kappa whenever
    kappa > 0.
    """

    zeta: float
    kappa: float
    failures: tuple = field(default_factory=tuple)
    l4_is_zero: bool = False

    @property
    def ok(self) -> bool:
        return not self.failures


def validate_coefficients(coeffs: Coefficients) -> DerivedConstants:
    """Compute zeta and kappa and flag violated assumptions by name.

    Pure function; never raises, so it can back diagnostics-only use. The
    solver entry points refuse to run on any failure (see
    ``require_solvable``). l4 == 0 is reported separately: it is a legal
    isotropic sub-case the user may opt into, not an error.
    """
    zeta = 2.0 * coeffs.l1 + coeffs.l2 + coeffs.l3
    kappa = min(coeffs.l1 + coeffs.l2, coeffs.l1 + coeffs.l3)
    failures = []
    if not coeffs.nu > 0:
        failures.append("viscosity_positive")
    if not kappa > 0:
        failures.append("coercivity_kappa_positive")
    if not coeffs.c > 0:
        failures.append("bulk_c_positive")
    if coeffs.delta < 0:
        failures.append("regularization_nonnegative")
    if coeffs.delta > 0 and (coeffs.k_reg < 4 or coeffs.k_reg % 2 != 0):
        failures.append("regularization_order_even_ge4")
    return DerivedConstants(
        zeta=zeta,
        kappa=kappa,
        failures=tuple(failures),
        l4_is_zero=(coeffs.l4 == 0.0),
    )


def require_solvable(coeffs: Coefficients) -> DerivedConstants:
    """Validate and raise ``CoefficientError`` naming any failed assumption."""
    derived = validate_coefficients(coeffs)
    if not derived.ok:
        raise CoefficientError(
            "coefficient assumptions violated: " + ", ".join(derived.failures)
        )
    return derived


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def _band_limited_noise(grid: GridSpec, rng: np.random.Generator, max_mode: int):
    """Real random field containing only modes with max |freq| <= max_mode."""
    n = grid.n
    white = rng.standard_normal((n, n))
    freq = np.fft.fftfreq(n, d=1.0 / n)
    keep = (np.abs(freq)[:, None] <= max_mode) & (np.abs(freq)[None, :] <= max_mode)
    return np.fft.ifft2(np.fft.fft2(white) * keep).real


def random_initial_q(
    grid: GridSpec, seed: int, max_mode: int, target_linf: float
) -> QTensorField:
    """Smooth band-limited random Q with exact sup-norm.

    Generates both components from the seeded generator, measures the grid
    maximum of |Q| and rescales so it equals ``target_linf``. Deterministic:
    the same seed reproduces the field bitwise. ``max_mode = 0`` yields a
    spatially constant tensor, which is the pure-relaxation test scenario.
    """
    if target_linf <= 0:
        raise ValueError(f"target_linf must be positive, got {target_linf}")
    if not 0 <= max_mode < grid.n / 3:
        raise ValueError(
            f"max_mode must satisfy 0 <= max_mode < n/3, got {max_mode} at n={grid.n}"
        )
    rng = np.random.default_rng(seed)
    q1 = _band_limited_noise(grid, rng, max_mode)
    q2 = _band_limited_noise(grid, rng, max_mode)
    scale = target_linf / np.sqrt(2.0 * (q1 ** 2 + q2 ** 2)).max()
    return QTensorField(grid, q1 * scale, q2 * scale)


def random_solenoidal_velocity(
    grid: GridSpec, seed: int, max_mode: int, l2_norm: float = 0.1
) -> VelocityField:
    """Divergence-free band-limited random velocity with given L2 norm.

    ``max_mode = 0`` returns the zero field (a nonzero constant velocity is
    a Galilean mode with no dynamics of interest here).
    """
    if max_mode == 0 or l2_norm == 0.0:
        return zero_velocity(grid)
    if not 0 < max_mode < grid.n / 3:
        raise ValueError(
            f"max_mode must satisfy 0 <= max_mode < n/3, got {max_mode} at n={grid.n}"
        )
    rng = np.random.default_rng(seed)
    w1 = _band_limited_noise(grid, rng, max_mode)
    w2 = _band_limited_noise(grid, rng, max_mode)
    from .spectral import get_ops  # deferred to avoid an import cycle

    ops = get_ops(grid)
    f1, f2, _, _ = ops.leray_hat(np.fft.fft2(w1), np.fft.fft2(w2))
    f1[0, 0] = 0.0  # no Galilean drift in generated data
    f2[0, 0] = 0.0
    u1 = np.fft.ifft2(f1).real
    u2 = np.fft.ifft2(f2).real
    norm = math.sqrt(float(np.mean(u1 ** 2 + u2 ** 2)))
    if norm == 0.0:
        return zero_velocity(grid)
    return VelocityField(grid, u1 * (l2_norm / norm), u2 * (l2_norm / norm))


def zero_q(grid: GridSpec) -> QTensorField:
    z = np.zeros((grid.n, grid.n))
    return QTensorField(grid, z, z)


def zero_velocity(grid: GridSpec) -> VelocityField:
    z = np.zeros((grid.n, grid.n))
    return VelocityField(grid, z, z)
