"""Driven harmonic oscillator propagators, Floquet analysis, and the
iterative diagonalization engine for quasi-periodic perturbations."""

from .core_fock import (
    OscillatorParams,
    TruncatedOperator,
    Truncation,
    build_ladder,
    build_xpH,
    exp_padded,
    matrix_exp,
)
from .drive_model import (
    DriveSpec,
    FloquetScalars,
    MuNuSigma,
    ScalarKernels,
    eval_drive,
    floquet_scalar_derivs,
    floquet_scalars,
    fourier_coefficient,
    is_resonant_period,
    mu_nu_sigma,
    phi12,
    psi,
    split_elapsed,
)
from .commutators import (
    CommutatorTower,
    FPolynomial,
    HigherOrderBoundReport,
    ad_power,
    ap_commute,
    f_polynomial,
    higher_order_bound_check,
    sup_xn_norm,
    xn_operator,
    xn_operator_via_floquet,
)
from .errors import (
    DomainError,
    FloquetLabError,
    IntegrationError,
    InvalidIntervalError,
    InvalidTruncationError,
    NotConvergedError,
    NumericError,
    ResonanceError,
    ResonantTimeError,
    SmallDenominatorError,
    UnsupportedDriveError,
)
from .floquet import (
    Classification,
    FloquetData,
    StabilityReport,
    TransitionBoundReport,
    build_HF,
    build_SF,
    build_UF,
    classify_monodromy,
    energy_bound_constant,
    floquet_data,
    solve_sylvester_separated,
    spectral_projector,
    stability_scan,
    transition_bound_check,
)
from .kam import (
    BlockPerturbation,
    FloquetMatrixSpace,
    KamConfig,
    KamResult,
    KamState,
    build_k0,
    detect_resonances,
    diagonal_part,
    eps_v_norm,
    kam_iterate,
    level_hamiltonian,
    load_problem,
    random_perturbation,
    reconstruct_propagator,
    solve_homological,
    weighted_block_norm,
)
from .oracle import EvolveResult, PeriodStepper, evolve_state, hamiltonian_at, integrate
from .propagator import (
    PropagatorFactors,
    factored_factors,
    heisenberg_check,
    propagator_factored,
    propagator_single_exp,
    single_exp_factors,
    split_forward,
    split_inverse,
)

__version__ = "0.1.0"
