"""Propagators for one-dimensional Schroedinger equations with quadratic Hamiltonians

    i psi_t = -a psi_xx + b x^2 psi - i (c x psi_x + d psi) - f x psi + i g psi_x

with time-dependent real coefficients, built from the characteristic function
and applied to gridded wavefunctions; plus a Picard solver for the nonlinear
equation in Duhamel form.
"""
__version__ = "0.1.0"

from .characteristic import (CharacteristicSolution, solve_characteristic,
                             solve_riccati_system, tau_sigma)
from .coefficients import (MODEL_NAMES, REGISTRY, CoefficientSet, first_root, get_model,
                           validity_interval)
from .errors import (CoincidentGammaError, DomainTruncationWarning, QuadPropError,
                     SingularMuError, UnderResolvedPhaseError, UnknownModelError)
from .evolution import (WaveFunction, addition_property_check, apply_composed, apply_forward,
                        apply_inverse, gaussian, pde_residual, supnorm_bound)
from .kernels import (KernelSpec, QuadraticKernel, asymptotic_kernel, gaussian_integral,
                      green_composed, green_forward, green_inverse, kernel_spec)
from .nonlinear import (NonlinearTerm, PicardResult, duhamel_rhs, inverse_nonlinear_check,
                        picard_solve)
from .phases import PhaseCoefficients, PhaseSolver, compute_phases, special_phases
from .propagator import Propagator, propagator_for

__all__ = [
    "CharacteristicSolution", "CoefficientSet", "CoincidentGammaError",
    "DomainTruncationWarning", "KernelSpec", "MODEL_NAMES", "NonlinearTerm",
    "PhaseCoefficients", "PhaseSolver", "PicardResult", "Propagator", "QuadPropError",
    "QuadraticKernel", "REGISTRY", "SingularMuError", "UnderResolvedPhaseError",
    "UnknownModelError", "WaveFunction", "addition_property_check", "apply_composed",
    "apply_forward", "apply_inverse", "asymptotic_kernel", "compute_phases", "duhamel_rhs",
    "first_root", "gaussian", "gaussian_integral", "get_model", "green_composed",
    "green_forward", "green_inverse", "inverse_nonlinear_check", "kernel_spec",
    "pde_residual", "picard_solve", "propagator_for", "solve_characteristic",
    "solve_riccati_system", "special_phases", "supnorm_bound", "tau_sigma",
    "validity_interval",
]
