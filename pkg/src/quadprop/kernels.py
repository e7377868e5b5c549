"""Forward, inverse and composed propagators, written as ``A exp(i Q(x, y))``.

Every kernel here has a constant complex amplitude ``A`` and a real quadratic
phase ``Q = pxx x^2 + pxy x y + pyy y^2 + px x + py y + p0``. Operator
application in :mod:`quadprop.evolution` works only with that form.
"""
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentGammaError, SingularMuError

MU_EPS = 1e-12
GAMMA_EPS = 1e-12
KINDS = ("forward", "inverse", "composed")


def _inv_sqrt(z):
    """``1 / sqrt(z)`` on the principal branch."""
    return 1.0 / np.sqrt(complex(z))


def _out(value):
    return complex(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class QuadraticKernel:
    """``amplitude * exp(i (pxx x^2 + pxy x y + pyy y^2 + px x + py y + p0))``."""
    amplitude: complex
    pxx: float
    pxy: float
    pyy: float
    px: float
    py: float
    p0: float

    def phase(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (self.pxx * x * x + self.pxy * x * y + self.pyy * y * y
                + self.px * x + self.py * y + self.p0)

    def __call__(self, x, y):
        return _out(self.amplitude * np.exp(1j * self.phase(x, y)))

    def phase_slope_y(self, x, y):
        """``dQ/dy``, the local frequency seen by the quadrature over ``y``."""
        return self.pxy * np.asarray(x) + 2 * self.pyy * np.asarray(y) + self.py

    def max_phase_slope(self, x_range, y_range):
        """Max of ``|dQ/dy|`` over the rectangle (attained at a corner)."""
        xs, ys = np.meshgrid(x_range, y_range)
        return float(np.max(np.abs(self.phase_slope_y(xs, ys))))


@dataclass(frozen=True)
class KernelSpec:
    """Everything a kernel needs at one or two times.

    ``weight_*`` is ``W = exp(-int_0^t (c - 2d))``. For the composed kind,
    ``t`` is the later time and ``s`` the earlier one.
    """
    kind: str
    t: float
    s: float
    phases_t: object
    phases_s: object
    mu_t: float
    mu_s: float
    weight_t: float
    weight_s: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name, mu in (("t", self.mu_t), ("s", self.mu_s)):
            if mu is not None and not abs(mu) > MU_EPS:
                raise SingularMuError(f"|mu({name})| = {abs(mu):.3g} <= {MU_EPS:g}")
        if self.kind == "composed":
            if not self.s < self.t:
                raise ValueError(f"composed kernel needs s < t, got t={self.t}, s={self.s}")
            if not abs(self.delta_gamma) > GAMMA_EPS:
                raise CoincidentGammaError(
                    f"gamma(t) - gamma(s) = {self.delta_gamma:.3g} at t={self.t}, s={self.s}")

    @property
    def delta_gamma(self):
        return self.phases_t.gamma - self.phases_s.gamma

    def quadratic(self):
        """The kernel as a :class:`QuadraticKernel`."""
        return {"forward": _forward_form, "inverse": _inverse_form,
                "composed": _composed_form}[self.kind](self)


def _forward_form(spec):
    p = spec.phases_t
    amp = _inv_sqrt(2j * np.pi * spec.mu_t)
    return QuadraticKernel(amp, p.alpha, p.beta, p.gamma, p.delta, p.epsilon, p.kappa)


def _inverse_form(spec):
    # conj(G(y, x)) W: swap the roles of x and y and negate the phase
    p = spec.phases_t
    amp = np.conj(_inv_sqrt(2j * np.pi * spec.mu_t)) * spec.weight_t
    return QuadraticKernel(amp, -p.gamma, -p.beta, -p.alpha, -p.epsilon, -p.delta, -p.kappa)


def _composed_form(spec):
    pt, ps = spec.phases_t, spec.phases_s
    dg = spec.delta_gamma
    de = pt.epsilon - ps.epsilon
    dk = pt.kappa - ps.kappa
    amp = _inv_sqrt(4j * np.pi * spec.mu_t * spec.mu_s * -dg) * spec.weight_s
    return QuadraticKernel(
        amp,
        pxx=pt.alpha - pt.beta ** 2 / (4 * dg),
        pxy=pt.beta * ps.beta / (2 * dg),
        pyy=-ps.alpha - ps.beta ** 2 / (4 * dg),
        px=pt.delta - de * pt.beta / (2 * dg),
        py=de * ps.beta / (2 * dg) - ps.delta,
        p0=dk - de * de / (4 * dg),
    )


def _require(spec, kind):
    if spec.kind != kind:
        raise ValueError(f"expected a {kind} kernel spec, got {spec.kind!r}")


def green_forward(spec, x, y):
    """``exp(i S(x, y, t)) / sqrt(2 pi i mu(t))``, principal branch.

    Broadcasts over ``x`` and ``y``.
    """
    _require(spec, "forward")
    return spec.quadratic()(x, y)


def green_inverse(spec, x, y):
    """``conj(G(y, x, t)) * W(t)``."""
    _require(spec, "inverse")
    return spec.quadratic()(x, y)


def green_composed(spec, x, y):
    """Kernel of ``U(t) U^{-1}(s)`` in the regrouped closed form."""
    _require(spec, "composed")
    return spec.quadratic()(x, y)


def green_composed_expanded(spec, x, y):
    """The same kernel before regrouping: a Gaussian-integral factor times the
    unreduced phase. Kept as an independent check on :func:`green_composed`."""
    _require(spec, "composed")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pt, ps = spec.phases_t, spec.phases_s
    dg = spec.delta_gamma
    amp = _inv_sqrt(4j * np.pi * spec.mu_t * spec.mu_s * -dg) * spec.weight_s
    outer = (pt.alpha * x * x - ps.alpha * y * y + pt.delta * x - ps.delta * y
             + pt.kappa - ps.kappa)
    lin = pt.beta * x - ps.beta * y + pt.epsilon - ps.epsilon
    return _out(amp * np.exp(1j * outer) * np.exp(lin * lin / (4j * dg)))


def gaussian_integral(a_coef, b_coef):
    """``int exp(i (a z^2 + 2 b z)) dz = sqrt(pi i / a) exp(-i b^2 / a)``.

    >>> abs(gaussian_integral(1.0, 0.0) - np.sqrt(np.pi * 1j)) < 1e-15
    True
    """
    if a_coef == 0:
        raise ZeroDivisionError("gaussian_integral needs a nonzero quadratic coefficient")
    return complex(np.sqrt(np.pi * 1j / a_coef) * np.exp(-1j * b_coef ** 2 / a_coef))


def asymptotic_quadratic(coeffs, t):
    """Leading small-time kernel as a :class:`QuadraticKernel`."""
    a0, g0 = coeffs.a(0.0), coeffs.g(0.0)
    k = 1.0 / (4 * a0 * t)
    drift = g0 / (2 * a0)
    return QuadraticKernel(_inv_sqrt(4j * np.pi * a0 * t), k, -2 * k, k, drift, -drift, 0.0)


def asymptotic_kernel(coeffs, x, y, t):
    """``exp(i (x-y)^2 / (4 a0 t) + i g0 (x-y) / (2 a0)) / sqrt(4 pi i a0 t)``."""
    return asymptotic_quadratic(coeffs, t)(x, y)


def kernel_spec(coeffs, kind, t, s=None, route="auto"):
    """Build a :class:`KernelSpec` for a model (phases are cached per model)."""
    from .propagator import propagator_for

    prop = propagator_for(coeffs, route=route)
    if kind == "forward":
        return prop.forward(t)
    if kind == "inverse":
        return prop.inverse(t)
    if kind == "composed":
        if s is None:
            raise ValueError("composed kernel needs s")
        return prop.composed(t, s)
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
