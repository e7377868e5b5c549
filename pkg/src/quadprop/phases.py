"""The quadratic phase

    S(x, y, t) = alpha x^2 + beta x y + gamma y^2 + delta x + epsilon y + kappa

and its six coefficients as explicit integrals of the characteristic function.

Notation used in the code: ``W(t) = exp(-int_0^t (c - 2d))`` and
``forcing = f - d g / a``.
"""
import threading
import warnings
from dataclasses import dataclass, astuple

import numpy as np
import sympy as sp
from scipy.integrate import IntegrationWarning, cumulative_simpson, quad
from scipy.interpolate import CubicSpline

from ._expr import as_function
from .errors import (OutOfRangeError, QuadratureError, SingularIntegrandError,
                     SingularMuError)

MU_EPS = 1e-12
DENSE_NODES = 2001
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-12


@dataclass(frozen=True)
class PhaseCoefficients:
    t: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    epsilon: float
    kappa: float

    def as_tuple(self):
        """``(alpha, beta, gamma, delta, epsilon, kappa)``"""
        return astuple(self)[1:]

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("t", "alpha", "beta", "gamma", "delta", "epsilon", "kappa")}


def eval_S(phases, x, y):
    """Value of the quadratic phase at ``(x, y)``; broadcasts over arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = phases
    out = (p.alpha * x * x + p.beta * x * y + p.gamma * y * y
           + p.delta * x + p.epsilon * y + p.kappa)
    return float(out) if out.ndim == 0 else out


def _quad(fn, lo, hi, what):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(fn, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        except IntegrationWarning as exc:
            raise QuadratureError(f"{what} on [{lo}, {hi}]: {exc}") from None
    if not np.isfinite(value):
        raise QuadratureError(f"{what} on [{lo}, {hi}] is not finite")
    return value


def _is_identically_zero(expr):
    return expr is not None and sp.simplify(expr) == 0


class PhaseSolver:
    """Evaluates the explicit phase integrals for one model.

    Inner antiderivatives (the integral inside ``W`` and the one defining
    ``mu * delta``) are tabulated once on ``nodes`` points with cumulative
    Simpson and interpolated; the outer integrals use adaptive quadrature.
    Results are cached per time (rounded to 1e-12); the cache is guarded by
    a lock so one solver can be shared between threads.
    """

    def __init__(self, coeffs, char, nodes=DENSE_NODES):
        from .characteristic import tau_sigma
        from .coefficients import first_root

        self.coeffs = coeffs
        self.char = char
        self.t_max = char.t_max
        self._tau_sigma = tau_sigma
        co = coeffs
        self.unit_weight = (co.c.expr is not None and co.d.expr is not None
                            and _is_identically_zero(co.c.expr - 2 * co.d.expr))
        self.unforced = co.f.is_zero and co.g.is_zero

        grid = np.linspace(0.0, self.t_max, nodes)
        self.grid = grid
        dmu = np.asarray(char.mu_prime(grid), dtype=float)
        self.mu_prime_zero = first_root(char.mu_prime, self.t_max)

        if self.unit_weight:
            self._C = None
        else:
            vals = co.c(grid) - 2 * co.d(grid)
            self._C = CubicSpline(grid, cumulative_simpson(vals, x=grid, initial=0.0))
        if self.unforced:
            self._I = None
        else:
            a, _, _, d, f, g = co.evaluate(grid)
            integrand = ((f - d * g / a) * char.mu(grid) + g * dmu / (2 * a)) / self._W(grid)
            self._I = CubicSpline(grid, cumulative_simpson(integrand, x=grid, initial=0.0))

        self._lock = threading.Lock()
        self._cache = {}
        self._weights = {}

    def _W(self, tau):
        if self._C is None:
            return np.ones_like(np.asarray(tau, dtype=float)) if np.ndim(tau) else 1.0
        return np.exp(-self._C(tau))

    def weight(self, t):
        """``W(t) = exp(-int_0^t (c - 2d))`` by adaptive quadrature, cached."""
        if self.unit_weight or t == 0.0:
            return 1.0
        key = round(float(t), 12)
        with self._lock:
            if key in self._weights:
                return self._weights[key]
        co = self.coeffs
        value = float(np.exp(-_quad(lambda s: co.c(s) - 2 * co.d(s), 0.0, t, "weight integral")))
        with self._lock:
            self._weights[key] = value
        return value

    def _check_time(self, t):
        if not 0.0 < t <= self.t_max * (1 + 1e-12):
            raise OutOfRangeError(f"t = {t} outside (0, {self.t_max}] for {self.coeffs.name}")
        mu = self.char.mu(t)
        if not abs(mu) >= MU_EPS:
            raise SingularMuError(f"{self.coeffs.name}: characteristic function "
                                  f"mu({t}) = {mu:.3g} is numerically zero")
        if self.mu_prime_zero is not None and self.mu_prime_zero <= t:
            raise SingularIntegrandError(
                f"{self.coeffs.name}: mu' vanishes near t = {self.mu_prime_zero:.6g} "
                f"inside (0, {t}]; the phase integrals divide by mu'")
        return mu

    def __call__(self, t):
        t = float(t)
        key = round(t, 12)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = self._compute(t)
        with self._lock:
            self._cache.setdefault(key, value)
        return value

    def _compute(self, t):
        mu = self._check_time(t)
        co, char = self.coeffs, self.char
        a, b, c, d, f, g = co.evaluate(t)
        dmu = char.mu_prime(t)
        W = self.weight(t)
        sigma_of = lambda s: self._tau_sigma(co, s)[1]  # noqa: E731

        def k_sigma(s):
            return co.a(s) * sigma_of(s) / char.mu_prime(s) ** 2

        alpha = dmu / (4 * a * mu) - d / (2 * a)
        beta = -W / mu
        gamma = (a * W * W / (mu * dmu)
                 - 4 * _quad(lambda s: k_sigma(s) * self._W(s) ** 2, 0.0, t, "gamma integral"))
        if self.unforced:
            return PhaseCoefficients(t, alpha, beta, gamma, 0.0, 0.0, 0.0)

        def forcing(s):
            return co.f(s) - co.d(s) * co.g(s) / co.a(s)

        def delta_integrand(s):
            a_s = co.a(s)
            return (forcing(s) * char.mu(s) + co.g(s) * char.mu_prime(s) / (2 * a_s)) / self._W(s)

        def mu_delta(s):
            return self._W(s) * self._I(s)

        delta = W / mu * _quad(delta_integrand, 0.0, t, "delta integral")
        eps = (-2 * a / dmu * delta * W
               + 8 * _quad(lambda s: k_sigma(s) * self._W(s) * mu_delta(s), 0.0, t, "epsilon integral")
               + 2 * _quad(lambda s: co.a(s) / char.mu_prime(s) * self._W(s) * forcing(s),
                           0.0, t, "epsilon forcing integral"))
        kappa = (a * mu / dmu * delta ** 2
                 - 4 * _quad(lambda s: k_sigma(s) * mu_delta(s) ** 2, 0.0, t, "kappa integral")
                 - 2 * _quad(lambda s: co.a(s) / char.mu_prime(s) * mu_delta(s) * forcing(s),
                             0.0, t, "kappa forcing integral"))
        return PhaseCoefficients(t, alpha, beta, gamma, delta, eps, kappa)


def compute_phases(coeffs, char, t, solver=None):
    """Phase sextet at ``t`` from the explicit integral formulas.

    Pass a prebuilt :class:`PhaseSolver` to reuse its tables and cache.
    """
    solver = solver if solver is not None else PhaseSolver(coeffs, char)
    return solver(t)


def closed_phases(coeffs, t):
    """The registry's closed-form sextet at ``t``."""
    if coeffs.closed_phases is None:
        raise ValueError(f"{coeffs.name} has no closed-form phases")
    return PhaseCoefficients(float(t), *(float(v) for v in coeffs.closed_phases(t)))


# ---------------------------------------------------------------------------
# model-specific formulas, used as an independent oracle

def _oracle_quad(fn, lo, hi):
    return _quad(fn, lo, hi, "model-specific phase integral")


def _uniform_field_phases(t, f, g):
    def delta(s):
        return _oracle_quad(lambda r: f(r) * r + g(r), 0.0, s) / s

    d_t = delta(t)
    eps = -d_t + _oracle_quad(f, 0.0, t)
    # the integrand carries delta at the inner time, not at t
    kappa = 0.5 * t * d_t ** 2 - _oracle_quad(lambda r: r * delta(r) * f(r), 0.0, t)
    return (0.5 / t, -1.0 / t, 0.5 / t, d_t, eps, kappa)


def _forced_oscillator_phases(t, f, g):
    if t >= np.pi / 2:
        raise OutOfRangeError(f"forced-oscillator formulas need t < pi/2 (cos t = 0), got {t}")

    def delta(s):
        return _oracle_quad(lambda r: f(r) * np.sin(r) + g(r) * np.cos(r), 0.0, s) / np.sin(s)

    d_t = delta(t)
    eps = (-d_t / np.cos(t)
           + _oracle_quad(lambda r: np.sin(r) * delta(r) / np.cos(r) ** 2, 0.0, t)
           + _oracle_quad(lambda r: f(r) / np.cos(r), 0.0, t))
    kappa = (0.5 * np.tan(t) * d_t ** 2
             - 0.5 * _oracle_quad(lambda r: np.tan(r) ** 2 * delta(r) ** 2, 0.0, t)
             - _oracle_quad(lambda r: np.tan(r) * delta(r) * f(r), 0.0, t))
    s = np.sin(t)
    return (0.5 * np.cos(t) / s, -1.0 / s, 0.5 * np.cos(t) / s, d_t, eps, kappa)


SPECIAL_MODELS = {
    "uniform_field": _uniform_field_phases,
    "forced_oscillator": _forced_oscillator_phases,
}


def special_phases(model, t, aux=None):
    """Sextet from the closed formulas of the uniform-field or forced-oscillator model.

    ``aux`` holds the forcing functions ``f`` and ``g`` (expressions,
    callables or a :class:`~quadprop.coefficients.CoefficientSet`).
    """
    if model not in SPECIAL_MODELS:
        raise ValueError(f"special_phases supports {sorted(SPECIAL_MODELS)}, got {model!r}")
    t = float(t)
    if t <= 0:
        raise OutOfRangeError("t must be positive")
    aux = aux if aux is not None else {}
    if hasattr(aux, "f") and hasattr(aux, "g"):
        f, g = aux.f, aux.g
    else:
        f, g = as_function(aux.get("f", "0")), as_function(aux.get("g", "0"))
    if getattr(f, "is_zero", False) and getattr(g, "is_zero", False):
        base = SPECIAL_MODELS[model](t, lambda r: 0.0, lambda r: 0.0)
        return PhaseCoefficients(t, *base[:3], 0.0, 0.0, 0.0)
    return PhaseCoefficients(t, *(float(v) for v in SPECIAL_MODELS[model](t, f, g)))
