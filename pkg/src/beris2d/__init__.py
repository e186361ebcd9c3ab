"""Pseudo-spectral solver and verification suite for the two-dimensional
Beris-Edwards model of nematic liquid-crystal flow with a general
Landau-de Gennes free energy, including its cubic elastic term.

Periodic unit square, Fourier collocation, first-order IMEX time stepping,
and diagnostics for everything the theory makes checkable: energy
dissipation, sup-norm preservation of the order parameter, algebraic
identities and continuous dependence on initial data.
"""

from ._kernels import HAVE_NUMBA, USING_NUMBA
from .diagnostics import (
    DependenceMetric,
    IdentityReport,
    MaxPrincipleVerdict,
    ResidualReport,
    ThresholdReport,
    cancellation_check,
    constrained_consistency,
    continuous_dependence_metric,
    energy_law_residual,
    eta_thresholds,
    identity_suite,
    interpolation_check,
    max_principle_monitor,
    variational_oracle,
)
from .dynamics import (
    BlowUpError,
    CFLViolation,
    RunResult,
    SimulationState,
    StepOutput,
    StepperConfig,
    corotational_transport,
    run,
    shape_tensor_s,
    step,
    vorticity_and_strain,
)
from .energetics import (
    EnergyLedger,
    MolecularFieldBundle,
    TensorField2,
    bulk_energy_density,
    constrained_field,
    elastic_energy_density,
    energy_ledger,
    free_energy_symmetric,
    lagrange_multipliers,
    molecular_field_bundle,
    molecular_field_h,
    total_free_energy,
)
from .fields import (
    CoefficientError,
    Coefficients,
    DerivedConstants,
    GridSpec,
    QTensorField,
    VelocityField,
    assemble,
    random_initial_q,
    random_solenoidal_velocity,
    require_solvable,
    validate_coefficients,
    zero_q,
    zero_velocity,
)
from .spectral import SpectralOps, get_ops, leray_project
from .stress import StressField, sigma_a, sigma_s, stress_divergence

__version__ = "0.1.0"
