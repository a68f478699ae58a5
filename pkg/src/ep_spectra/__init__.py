"""Spectral tools for the Euler-Poincare equations on the periodic box.

Fourier grids and fields, Littlewood-Paley blocks with Besov and
Triebel-Lizorkin norms, the nonlocal transport form of the equations, an RK4
integrator with a Picard scheme, and the counterexample experiments built on
top of them.
"""
from .ep_dynamics import (
    RhsKernel,
    convection,
    ep_rhs,
    momentum_residual,
    p_op,
    q_op,
    r_op,
    transposed_gradient,
    u0_functional,
)
from .evolution import (
    BlowupDetected,
    CFLViolation,
    SolverConfig,
    Trajectory,
    cauchy_diagnostic,
    grad_linf,
    h1_energy,
    picard_solve,
    rk4_step,
    solve,
)
from .experiments import (
    BumpProfile,
    ExperimentReport,
    continuous_dependence_experiment,
    counterexample_grid,
    counterexample_pair,
    make_bump,
    make_fn,
    make_gn,
    nonuniform_experiment,
    picard_experiment,
    power_law_data,
    prop31_check,
    rl_lower_bound,
    smooth_data,
)
from .field_io import read_field, write_field
from .littlewood_paley import (
    DyadicPartition,
    NormKind,
    SpaceParams,
    besov_norm,
    block_norms,
    build_partition,
    dyadic_block,
    embedding_check,
    low_pass,
    spectrum_csv,
    tl_norm,
    tl_seminorm,
)
from .spectral_core import (
    PeriodicGrid,
    ScalarField,
    VectorField,
    dealias,
    divergence,
    gradient,
    helmholtz,
    helmholtz_inverse,
    jacobian,
    laplacian,
    lp_norm,
    spectral_derivative,
    to_physical,
    to_spectral,
)

__version__ = "0.1.0"
