"""Time-dependent coefficients of the quadratic Hamiltonian

    i psi_t = -a psi_xx + b x^2 psi - i (c x psi_x + d psi) - f x psi + i g psi_x

and a registry of the named exactly solvable models.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._expr import as_function
from .errors import SingularCoefficientError, UnknownModelError

T_CAP = 10.0
COEFFICIENT_NAMES = ("a", "b", "c", "d", "f", "g")


@dataclass(eq=False)
class CoefficientSet:
    """The six real coefficient functions plus optional closed forms.

    ``closed_mu`` is an exact characteristic function (``mu(0) = 0``,
    ``mu'(0) = 2 a(0)``); ``closed_phases`` maps ``t`` to the exact sextet
    ``(alpha, beta, gamma, delta, epsilon, kappa)``.
    """
    name: str
    a: object
    b: object
    c: object
    d: object
    f: object
    g: object
    closed_mu: object = None
    closed_phases: object = None
    t_cap: float = T_CAP
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in COEFFICIENT_NAMES:
            setattr(self, key, as_function(getattr(self, key)))
        if self.closed_mu is not None:
            self.closed_mu = as_function(self.closed_mu)
        self.a_prime = self.a.derivative()
        self.d_prime = self.d.derivative()

    @classmethod
    def from_expressions(cls, name="custom", *, mu=None, t_cap=T_CAP, **exprs):
        """Build from expression strings; missing coefficients default to 0."""
        unknown = set(exprs) - set(COEFFICIENT_NAMES)
        if unknown:
            raise TypeError(f"unknown coefficient(s): {sorted(unknown)}")
        values = {k: exprs.get(k, "0") for k in COEFFICIENT_NAMES}
        return cls(name, closed_mu=mu, t_cap=t_cap, **values)

    def evaluate(self, t):
        """Return ``(a, b, c, d, f, g)`` at ``t``."""
        return tuple(getattr(self, k)(t) for k in COEFFICIENT_NAMES)

    def describe(self):
        out = {k: getattr(self, k).text for k in COEFFICIENT_NAMES}
        out["name"] = self.name
        if self.closed_mu is not None:
            out["mu"] = self.closed_mu.text
        if self.params:
            out["params"] = dict(self.params)
        return out

    def __repr__(self):
        return f"CoefficientSet({self.name!r})"


# ---------------------------------------------------------------------------
# registered models

def _free_phases(t):
    return (0.5 / t, -1.0 / t, 0.5 / t, 0.0, 0.0, 0.0)


def _free_particle():
    return CoefficientSet("free_particle", a="1/2", b="0", c="0", d="0", f="0", g="0",
                          closed_mu="t", closed_phases=_free_phases)


def _uniform_field(f="1", g="0"):
    coeffs = CoefficientSet("uniform_field", a="1/2", b="0", c="0", d="0", f=f, g=g,
                            closed_mu="t", params={"f": str(f), "g": str(g)})
    if coeffs.f.is_constant and coeffs.g.is_zero:
        f0 = coeffs.f(0.0)

        def phases(t):
            return (0.5 / t, -1.0 / t, 0.5 / t, 0.5 * f0 * t, 0.5 * f0 * t, -f0 * f0 * t ** 3 / 24.0)
        coeffs.closed_phases = phases
    return coeffs


def _forced_oscillator(f="0", g="0"):
    coeffs = CoefficientSet("forced_oscillator", a="1/2", b="1/2", c="0", d="0", f=f, g=g,
                            closed_mu="sin(t)", params={"f": str(f), "g": str(g)})
    if coeffs.f.is_zero and coeffs.g.is_zero:
        def phases(t):
            s, c = np.sin(t), np.cos(t)
            return (0.5 * c / s, -1.0 / s, 0.5 * c / s, 0.0, 0.0, 0.0)
        coeffs.closed_phases = phases
    return coeffs


def _modified_phases(t):
    s, c, sh, ch = np.sin(t), np.cos(t), np.sinh(t), np.cosh(t)
    mu = c * sh + s * ch
    return ((c * ch - s * sh) / (2 * mu), -1.0 / mu, (c * ch + s * sh) / (2 * mu), 0.0, 0.0, 0.0)


def _modified_oscillator():
    return CoefficientSet("modified_oscillator", a="cos(t)**2", b="sin(t)**2",
                          c="sin(2*t)", d="sin(2*t)/2", f="0", g="0",
                          closed_mu="cos(t)*sinh(t) + sin(t)*cosh(t)",
                          closed_phases=_modified_phases)


class ModelRegistry:
    """Named model factories; parameters are passed through to the factory."""

    def __init__(self):
        self._factories = {}

    def register(self, name, factory):
        self._factories[name] = factory

    def names(self):
        return sorted(self._factories)

    def __contains__(self, name):
        return name in self._factories

    def get(self, name, **params):
        try:
            factory = self._factories[name]
        except KeyError:
            raise UnknownModelError(name, self.names()) from None
        return factory(**params)


REGISTRY = ModelRegistry()
REGISTRY.register("free_particle", _free_particle)
REGISTRY.register("uniform_field", _uniform_field)
REGISTRY.register("forced_oscillator", _forced_oscillator)
REGISTRY.register("modified_oscillator", _modified_oscillator)

MODEL_NAMES = ("free_particle", "uniform_field", "forced_oscillator", "modified_oscillator")


def get_model(name, **params):
    """Return the registered :class:`CoefficientSet` called ``name``.

    >>> get_model("free_particle").a(0.3)
    0.5
    """
    return REGISTRY.get(name, **params)


# ---------------------------------------------------------------------------
# validity interval

def first_root(fn, t_max, samples=4001, dfn=None, touch_tol=1e-10):
    """Smallest root of ``fn`` in ``(0, t_max]`` or ``None``.

    Sign changes are refined with Brent's method. If ``dfn`` (the derivative)
    is given, double roots such as ``cos(t)**2`` are found as sign changes of
    ``dfn`` where ``|fn|`` drops below ``touch_tol`` times its scale.
    """
    ts = np.linspace(0.0, t_max, samples)[1:]
    vals = np.asarray(fn(ts), dtype=float)
    roots = []
    exact = np.flatnonzero(vals == 0.0)
    if exact.size:
        roots.append(ts[exact[0]])
    flips = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    if flips.size:
        i = flips[0]
        roots.append(brentq(fn, ts[i], ts[i + 1], xtol=1e-15, rtol=1e-15))
    if dfn is not None:
        scale = max(np.max(np.abs(vals)), 1e-300)
        dvals = np.asarray(dfn(ts), dtype=float)
        for i in np.flatnonzero(np.sign(dvals[:-1]) * np.sign(dvals[1:]) < 0):
            tm = brentq(dfn, ts[i], ts[i + 1], xtol=1e-15, rtol=1e-15)
            if abs(fn(tm)) <= touch_tol * scale:
                roots.append(tm)
                break
    return min(roots) if roots else None


def coefficient_zero(coeffs, t_max=None):
    """First zero of ``a(t)`` in ``(0, t_max]`` or ``None``."""
    t_max = coeffs.t_cap if t_max is None else t_max
    if coeffs.a(0.0) == 0.0:
        raise SingularCoefficientError(f"{coeffs.name}: a(0) = 0")
    return first_root(coeffs.a, t_max, dfn=coeffs.a_prime)


def validity_interval(coeffs, t_cap=None):
    """Return ``(0.0, t_max)``: the range where a(t) != 0 and mu(t) != 0 for t > 0.

    ``t_max`` is the first of: a zero of ``a``, the first positive zero of the
    characteristic function, or ``t_cap`` (default ``coeffs.t_cap``). When the
    model has no closed-form phases the quadrature formulas also need
    ``mu'(t) != 0``, so the first zero of ``mu'`` truncates as well.
    """
    from .characteristic import solve_characteristic

    t_cap = coeffs.t_cap if t_cap is None else float(t_cap)
    stops = [t_cap]
    t_a = coefficient_zero(coeffs, t_cap)
    if t_a is not None:
        stops.append(t_a)
    horizon = min(stops)
    # a numeric solve must stop short of a zero of a(t)
    solve_to = horizon if t_a is None or t_a > horizon else horizon * (1 - 1e-6)
    char = solve_characteristic(coeffs, solve_to)
    t_mu = first_root(char.mu, solve_to)
    if t_mu is not None:
        stops.append(t_mu)
    if coeffs.closed_phases is None:
        t_dmu = first_root(char.mu_prime, solve_to)
        if t_dmu is not None:
            stops.append(t_dmu)
    return 0.0, float(min(stops))
