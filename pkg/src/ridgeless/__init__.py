"""Kernel ridgeless regression on uniform grids of the torus.

The kernel matrix of a shift-invariant kernel on an N-point grid is
block-circulant, so the interpolant and its expected squared error have exact
expressions in terms of aliased Fourier coefficients. This package computes
those expressions, checks them against brute-force solvers, and certifies the
spectral conditions under which the error stays bounded away from zero.
"""
from ._accel import BACKEND
from .assumptions import AssumptionReport, Verdict, check_head, check_scale, check_tail, lower_bounds
from .errors import (
    DegenerateClassError,
    NonConvergenceError,
    ProfileError,
    RidgelessError,
    SingularKernelError,
    SolverError,
)
from .model import (
    EigenStructure,
    Grid,
    ProjectionResult,
    TargetSpec,
    battery_target,
    eigenstructure,
    empirical_eigenfunction,
    evaluate_on_grid,
    kernel_matrix,
    project_target,
    target_battery,
)
from .mse import MseReport, approximation_error, full_mse, noise_free_error, noisy_error
from .spectra import (
    Family,
    HopStats,
    KernelSpec,
    Spectrum,
    build_spectrum,
    closed_form_coeff,
    hop_stats,
    load_profile,
    quadrature_coeff,
)

__version__ = "0.1.0"
