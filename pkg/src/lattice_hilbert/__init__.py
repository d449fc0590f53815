"""Centered discrete Hilbert transform on the integer lattice, three ways.

The package computes the transform by exact kernel convolution, by Fourier
multiplier, and by a jump-diffusion Monte Carlo walk in the half space, and
cross-verifies the three routes against each other and against the operator
algebra they all must satisfy.
"""

from .poisson import (
    ROTATION_MATRIX,
    HarmonicExtension,
    YQuadrature,
    cauchy_riemann_residuals,
    embed_window_in_torus,
    extend,
    harmonicity_residuals,
    hilbert_weak_pairing,
    littlewood_paley_pairing,
)
from .signals import LatticeSignal, inner, load_signal, write_signal
from .stochastic import (
    JUMP_RATE,
    McEstimate,
    PathRecord,
    WalkConfig,
    covariation_formula_check,
    ito_residual_study,
    orthogonality_stat,
    pairing_mc,
    run_monte_carlo,
    simulate_path,
)
from .transforms import (
    DERIV_CENTERED,
    DERIV_MINUS,
    DERIV_PLUS,
    H_CENTERED,
    H_MINUS,
    H_NAIVE,
    H_PLUS,
    LAPLACIAN,
    SHIFT_MINUS,
    SHIFT_PLUS,
    SQRT_NEG_LAPLACIAN,
    OperatorSymbol,
    SpectralGrid,
    apply_kernel,
    apply_spectral_torus,
    apply_spectral_window,
    centered_kernel,
    discrete_derivative,
    eval_multiplier,
    hilbert_kernel,
    identity_suite,
    multiplier_kernel_consistency,
    naive_contrast,
    poisson_factor,
    shift,
)

__version__ = "0.1.0"
