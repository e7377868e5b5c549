"""Characteristic equation and the Riccati-type system for the phase sextet.

Two independent routes to the propagator ingredients:

* the linear second-order characteristic equation

      mu'' - tau(t) mu' + 4 sigma(t) mu = 0,   mu(0) = 0,  mu'(0) = 2 a(0),

  whose solution feeds the explicit phase formulas in :mod:`quadprop.phases`;
* direct integration of the six coupled first-order equations for
  ``(alpha, beta, gamma, delta, epsilon, kappa)``, seeded at ``t0 > 0``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .coefficients import coefficient_zero
from .errors import BlowUpError, SingularCoefficientError, SolverError
from .phases import PhaseCoefficients

RTOL = 1e-10
ATOL = 1e-10
BLOW_UP = 1e12
# cubic Hermite dense output errs like h**4 / 384 * max|mu''''|
MAX_STEP = 0.01


def tau_sigma(coeffs, t):
    """Return ``(tau(t), sigma(t))``.

    ``sigma`` uses the expanded form ``ab - cd + d^2 + (d a'/a - d')/2`` so
    that ``d == 0`` needs no special case.
    """
    a, b, c, d, _, _ = coeffs.evaluate(t)
    if np.any(np.asarray(a) == 0.0):
        raise SingularCoefficientError(f"{coeffs.name}: a(t) = 0 at t = {t}")
    da = coeffs.a_prime(t)
    dd = coeffs.d_prime(t)
    tau = da / a - 2 * c + 4 * d
    sigma = a * b - c * d + d * d + 0.5 * (d * da / a - dd)
    return tau, sigma


@dataclass(frozen=True)
class CharacteristicSolution:
    """mu and mu' on ``[0, t_max]``; ``provenance`` is 'closed-form' or 'numeric'."""
    coeffs: object
    mu: object
    mu_prime: object
    t_max: float
    provenance: str

    def tau(self, t):
        return tau_sigma(self.coeffs, t)[0]

    def sigma(self, t):
        return tau_sigma(self.coeffs, t)[1]

    def mu_second(self, t):
        tau, sigma = tau_sigma(self.coeffs, t)
        return tau * self.mu_prime(t) - 4 * sigma * self.mu(t)

    def residual(self, t):
        """``mu'' - tau mu' + 4 sigma mu`` with mu'' differentiated from mu'."""
        tau, sigma = tau_sigma(self.coeffs, t)
        if self.provenance == "closed-form":
            ddmu = self.coeffs.closed_mu.derivative().derivative()(t)
        else:
            ddmu = self.mu_prime.derivative()(t)
        return ddmu - tau * self.mu_prime(t) + 4 * sigma * self.mu(t)


def _characteristic_rhs(coeffs):
    def rhs(t, y):
        tau, sigma = tau_sigma(coeffs, t)
        return (y[1], tau * y[1] - 4 * sigma * y[0])
    return rhs


def solve_characteristic(coeffs, t_max, method="auto"):
    """Characteristic function on ``[0, t_max]``.

    ``method='auto'`` returns the registered closed form when the model has
    one and integrates numerically otherwise; ``'numeric'`` always integrates
    (adaptive Dormand-Prince 5(4), cubic Hermite dense output).
    """
    if method not in ("auto", "numeric", "closed"):
        raise ValueError(f"unknown method {method!r}")
    t_max = float(t_max)
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    t_zero = coefficient_zero(coeffs, t_max)
    if t_zero is not None:
        raise SingularCoefficientError(
            f"{coeffs.name}: a(t) vanishes at t = {t_zero:.12g} inside [0, {t_max}]")

    if method != "numeric" and coeffs.closed_mu is not None:
        return CharacteristicSolution(coeffs, coeffs.closed_mu, coeffs.closed_mu.derivative(),
                                      t_max, "closed-form")
    if method == "closed":
        raise ValueError(f"{coeffs.name} has no closed-form characteristic function")

    rhs = _characteristic_rhs(coeffs)
    sol = solve_ivp(rhs, (0.0, t_max), (0.0, 2.0 * coeffs.a(0.0)), method="RK45",
                    rtol=RTOL, atol=ATOL, max_step=MAX_STEP)
    if sol.status != 0:
        raise SolverError(f"characteristic equation for {coeffs.name}: {sol.message}")
    ts = sol.t
    mu, dmu = sol.y
    tau, sigma = tau_sigma(coeffs, ts)
    ddmu = tau * dmu - 4 * sigma * mu
    mu_fn = CubicHermiteSpline(ts, mu, dmu, extrapolate=False)
    dmu_fn = CubicHermiteSpline(ts, dmu, ddmu, extrapolate=False)
    return CharacteristicSolution(coeffs, _Dense(mu_fn), _Dense(dmu_fn), t_max, "numeric")


class _Dense:
    """Scalar-friendly wrapper around a scipy piecewise polynomial."""

    def __init__(self, poly):
        self.poly = poly

    def __call__(self, t):
        out = self.poly(t)
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self):
        return _Dense(self.poly.derivative())


# ---------------------------------------------------------------------------
# the six coupled first-order equations

def riccati_rhs(coeffs):
    def rhs(t, y):
        alpha, beta, gamma, delta, eps, kappa = y
        a, b, c, d, f, g = coeffs.evaluate(t)
        drift = c + 4 * a * alpha
        return (
            -b - 2 * c * alpha - 4 * a * alpha * alpha,
            -drift * beta,
            -a * beta * beta,
            -drift * delta + f + 2 * alpha * g,
            (g - 2 * a * delta) * beta,
            g * delta - a * delta * delta,
        )
    return rhs


@dataclass(frozen=True)
class RiccatiState:
    """Sextet trajectories from direct integration on ``[t0, t_max]``."""
    coeffs: object
    t0: float
    t_max: float
    _sol: object

    def __call__(self, t):
        """Array of shape (6,) or (6, len(t))."""
        if np.any(np.asarray(t) < self.t0 - 1e-14) or np.any(np.asarray(t) > self.t_max + 1e-14):
            raise ValueError(f"t outside [{self.t0}, {self.t_max}]")
        return self._sol(t)

    def at(self, t):
        return PhaseCoefficients(float(t), *(float(v) for v in self._sol(t)))

    def residuals(self, t, step=1e-5):
        """Residuals of the gamma and kappa equations (central differences)."""
        lo, hi = max(t - step, self.t0), min(t + step, self.t_max)
        dy = (self._sol(hi) - self._sol(lo)) / (hi - lo)
        alpha, beta, gamma, delta, eps, kappa = self._sol(t)
        a, b, c, d, f, g = self.coeffs.evaluate(t)
        return dy[2] + a * beta ** 2, dy[5] - g * delta + a * delta ** 2


def solve_riccati_system(coeffs, phases_at_t0, t0, t_max):
    """Integrate the sextet equations from ``t0`` (> 0) to ``t_max``."""
    if not 0 < t0 < t_max:
        raise ValueError("need 0 < t0 < t_max")
    y0 = np.asarray(phases_at_t0.as_tuple() if hasattr(phases_at_t0, "as_tuple")
                    else phases_at_t0, dtype=float)
    if y0.shape != (6,) or not np.all(np.isfinite(y0)):
        raise ValueError("initial sextet must be six finite numbers")

    def blow_up(t, y):
        return BLOW_UP - np.max(np.abs(y))
    blow_up.terminal = True

    sol = solve_ivp(riccati_rhs(coeffs), (t0, t_max), y0, method="RK45", rtol=RTOL,
                    atol=ATOL, dense_output=True, events=blow_up)
    if sol.status == 1:
        raise BlowUpError(f"{coeffs.name}: sextet exceeded {BLOW_UP:g} at t = {sol.t[-1]:.6g}")
    if sol.status != 0:
        raise SolverError(f"sextet system for {coeffs.name}: {sol.message}")
    return RiccatiState(coeffs, float(t0), float(t_max), sol.sol)
