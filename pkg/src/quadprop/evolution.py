"""Gridded wavefunctions and discrete application of the propagators.

An operator with kernel ``K(x, y) = A exp(i Q(x, y))`` acts on a wavefunction
sampled on a uniform odd-sized grid through composite Simpson weights,

    out_j = sum_k w_k K(x_j, y_k) psi_k.

Separable parts of ``Q`` are pulled out of the sum, leaving the bilinear
term ``exp(i pxy x_j y_k)``. That sum is evaluated term by term (numba or
numpy) or, on large grids, exactly through an FFT chirp convolution.
"""
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import DomainTruncationWarning, NaNDetectedError, UnderResolvedPhaseError
from .kernels import kernel_spec
from .propagator import propagator_for

PHASE_STEP_MAX = math.pi / 4
TRUNCATION_TOL = 1e-10
FFT_THRESHOLD = 4097
DEFAULT_DOMAIN = (-10.0, 10.0)
DEFAULT_N = 2001
METHODS = ("auto", "direct", "fft")


def simpson_weights(n, h):
    """Composite Simpson weights ``h/3 * [1, 4, 2, 4, ..., 2, 4, 1]``."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Simpson weights need an odd n >= 3, got {n}")
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex samples on ``n`` uniform nodes spanning ``[x_min, x_max]``."""
    x_min: float
    x_max: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        n = values.size
        if n < 3 or n % 2 == 0:
            raise ValueError(f"grid size must be odd and >= 3, got {n}")
        if not self.x_max > self.x_min:
            raise ValueError(f"need x_max > x_min, got [{self.x_min}, {self.x_max}]")
        if not np.all(np.isfinite(values)):
            raise NaNDetectedError("wavefunction values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, fn, x_min=DEFAULT_DOMAIN[0], x_max=DEFAULT_DOMAIN[1], n=DEFAULT_N):
        x = np.linspace(x_min, x_max, n)
        return cls(x_min, x_max, np.broadcast_to(fn(x), x.shape))

    @classmethod
    def zeros(cls, x_min=DEFAULT_DOMAIN[0], x_max=DEFAULT_DOMAIN[1], n=DEFAULT_N):
        return cls(x_min, x_max, np.zeros(n, dtype=complex))

    def with_values(self, values):
        return WaveFunction(self.x_min, self.x_max, values)

    @property
    def n(self):
        return self.values.size

    @property
    def h(self):
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def weights(self):
        return simpson_weights(self.n, self.h)

    def same_grid(self, other):
        return (self.x_min, self.x_max, self.n) == (other.x_min, other.x_max, other.n)

    # norms -----------------------------------------------------------------
    def norm_l1(self):
        return _accel.simpson_abs_sum(self.values, self.weights)

    def norm_l2(self):
        return float(np.sqrt(np.dot(self.weights, np.abs(self.values) ** 2)))

    def norm_sup(self):
        return float(np.max(np.abs(self.values)))

    def boundary_ratio(self):
        """``max(|psi| at the two ends) / max|psi|`` (0 for the zero function)."""
        peak = self.norm_sup()
        if peak == 0.0:
            return 0.0
        return float(max(abs(self.values[0]), abs(self.values[-1])) / peak)

    # serialisation ------------------------------------------------------------
    def to_csv(self, path=None, include_abs=False):
        """Columns ``x,re,im`` (plus ``abs``) with 17 significant digits; returns the text."""
        buf = io.StringIO()
        cols = [self.x, self.values.real, self.values.imag]
        header = "x,re,im"
        if include_abs:
            cols.append(np.abs(self.values))
            header += ",abs"
        np.savetxt(buf, np.column_stack(cols), fmt="%.17g", delimiter=",", header=header,
                   comments="")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source):
        """Read :meth:`to_csv` output from a path or the text itself (extra columns ignored)."""
        text = source if "\n" in str(source) else open(source).read()
        data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
        return cls(data[0, 0], data[-1, 0], data[:, 1] + 1j * data[:, 2])

    def to_dict(self):
        return {"x_min": self.x_min, "x_max": self.x_max, "n": self.n,
                "re": self.values.real.tolist(), "im": self.values.imag.tolist()}

    @classmethod
    def from_dict(cls, data):
        values = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
        if "n" in data and data["n"] != values.size:
            raise ValueError(f"snapshot says n={data['n']} but holds {values.size} values")
        return cls(data["x_min"], data["x_max"], values)

    def to_json(self, path=None):
        text = json.dumps(self.to_dict())
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, source):
        text = source if str(source).lstrip().startswith("{") else open(source).read()
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"WaveFunction([{self.x_min}, {self.x_max}], n={self.n})"


def gaussian(x_min=DEFAULT_DOMAIN[0], x_max=DEFAULT_DOMAIN[1], n=DEFAULT_N,
             width=1.0, center=0.0, momentum=0.0, normalized=False):
    """``exp(-(x-center)^2 / (2 width^2) + i momentum x)``, optionally L2-normalised."""
    def fn(x):
        return np.exp(-(x - center) ** 2 / (2 * width ** 2) + 1j * momentum * x)
    psi = WaveFunction.from_function(fn, x_min, x_max, n)
    if normalized:
        psi = psi.with_values(psi.values / (np.pi * width ** 2) ** 0.25)
    return psi


# ---------------------------------------------------------------------------
# operator application

@dataclass(frozen=True, eq=False)
class OperatorApplication:
    spec: object
    source: WaveFunction
    rule: str
    result: WaveFunction


def required_points(kernel, x_min, x_max, max_step=PHASE_STEP_MAX):
    """Smallest odd ``n`` with ``h * max|dQ/dy| <= max_step`` on the square grid."""
    slope = kernel.max_phase_slope((x_min, x_max), (x_min, x_max))
    if slope == 0.0:
        return 3
    n = math.ceil((x_max - x_min) * slope / max_step) + 1
    return max(3, n + (n % 2 == 0))


def check_resolution(kernel, psi, max_step=PHASE_STEP_MAX):
    """Raise :class:`UnderResolvedPhaseError` if the kernel aliases on ``psi``'s grid."""
    slope = kernel.max_phase_slope((psi.x_min, psi.x_max), (psi.x_min, psi.x_max))
    if psi.h * slope > max_step:
        n_req = required_points(kernel, psi.x_min, psi.x_max, max_step)
        raise UnderResolvedPhaseError(
            f"grid step {psi.h:.3g} times kernel phase slope {slope:.3g} exceeds "
            f"{max_step:.3g}; use n >= {n_req}", n_req)


def warn_truncation(psi, tol=TRUNCATION_TOL, what="input"):
    ratio = psi.boundary_ratio()
    if ratio > tol:
        warnings.warn(f"{what} is {ratio:.2g} of its peak at the grid ends; "
                      f"the infinite-line integral is truncated", DomainTruncationWarning,
                      stacklevel=3)


def apply_kernel(kernel, psi, method="auto", check=True):
    """Values of ``sum_k w_k K(x_j, y_k) psi_k`` on ``psi``'s own grid."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if check:
        check_resolution(kernel, psi)
    x = psi.x
    g = psi.weights * psi.values * np.exp(1j * (kernel.pyy * x * x + kernel.py * x))
    if method == "auto":
        method = "fft" if psi.n > FFT_THRESHOLD else "direct"
    if method == "fft":
        acc = _accel.chirp_sum(psi.x_min, psi.h, kernel.pxy, g)
    else:
        acc = _accel.bilinear_sum(x, x, kernel.pxy, g)
    out = kernel.amplitude * np.exp(1j * (kernel.pxx * x * x + kernel.px * x + kernel.p0)) * acc
    if not np.all(np.isfinite(out)):
        raise NaNDetectedError("operator application produced non-finite values")
    return out


def apply_spec(spec, psi, method="auto", check=True):
    """Apply the kernel described by ``spec``; returns an :class:`OperatorApplication`."""
    if check:
        warn_truncation(psi)
    values = apply_kernel(spec.quadratic(), psi, method=method, check=check)
    rule = f"simpson/{method}"
    return OperatorApplication(spec, psi, rule, psi.with_values(values))


def apply_forward(psi0, coeffs, t, method="auto", route="auto"):
    """``psi(x, t) = int G(x, y, t) psi0(y) dy`` on ``psi0``'s grid."""
    return apply_spec(kernel_spec(coeffs, "forward", t, route=route), psi0, method).result


def apply_inverse(psi_t, coeffs, t, method="auto", route="auto"):
    """``psi(x, 0) = int H(x, y, t) psi_t(y) dy``."""
    return apply_spec(kernel_spec(coeffs, "inverse", t, route=route), psi_t, method).result


def apply_composed(psi_s, coeffs, t, s, method="auto", route="auto"):
    """``U(t) U^{-1}(s) psi_s`` through the closed-form composed kernel."""
    return apply_spec(kernel_spec(coeffs, "composed", t, s, route=route), psi_s, method).result


# ---------------------------------------------------------------------------
# estimates

def supnorm_bound(coeffs, psi, t, s, route="auto"):
    """Upper bound on ``||U(t, s) psi||_inf`` from the kernel modulus and ``||psi||_1``."""
    spec = kernel_spec(coeffs, "composed", t, s, route=route)
    scale = abs(spec.mu_t * spec.mu_s * spec.delta_gamma)
    return float(spec.weight_s * psi.norm_l1() / math.sqrt(4 * math.pi * scale))


def chi(coeffs, t, route="auto"):
    """The only admissible factor in the addition identity: ``W(t)^2 a(t) / (2 a(0))``."""
    prop = propagator_for(coeffs, route=route)
    return 0.5 * prop.weight(t) ** 2 * coeffs.a(t) / coeffs.a(0.0)


def addition_property_check(coeffs, t, s, route="auto"):
    """Return ``(mu(t) mu(s) (gamma(s) - gamma(t)), chi((t+s)/2) mu(t-s))``."""
    if not 0 < s < t:
        raise ValueError(f"need 0 < s < t, got t={t}, s={s}")
    prop = propagator_for(coeffs, route=route)
    gt, gs = prop.phases(t).gamma, prop.phases(s).gamma
    lhs = prop.mu(t) * prop.mu(s) * (gs - gt)
    rhs = chi(coeffs, 0.5 * (t + s), route) * prop.mu(t - s)
    return float(lhs), float(rhs)


# ---------------------------------------------------------------------------
# the differential equation, for residual checks

def hamiltonian_apply(coeffs, psi, t, stride=1):
    """``H(t) psi`` at interior nodes by centred differences with spacing ``stride*h``.

    Returns ``(x_interior, values)``.
    """
    v = psi.values
    x = psi.x
    k = int(stride)
    h = k * psi.h
    xi = x[k:-k]
    mid = v[k:-k]
    d1 = (v[2 * k:] - v[:-2 * k]) / (2 * h)
    d2 = (v[2 * k:] - 2 * mid + v[:-2 * k]) / (h * h)
    a, b, c, d, f, g = coeffs.evaluate(t)
    out = (-a * d2 + b * xi * xi * mid - 1j * (c * xi * d1 + d * mid)
           - f * xi * mid + 1j * g * d1)
    return xi, out


def pde_residual(coeffs, psi0, t, dt=1e-4, stride=1, margin=0.0, evolve=None):
    """Sup norm of ``i psi_t - H psi`` for ``psi = U(.) psi0`` at time ``t``.

    ``evolve(time)`` returns the wavefunction at ``time`` (default: apply the
    forward propagator to ``psi0``). ``margin`` drops that much of the domain
    at each end.
    """
    if evolve is None:
        def evolve(time):
            return apply_forward(psi0, coeffs, time)
    plus, here, minus = evolve(t + dt), evolve(t), evolve(t - dt)
    dpsi = (plus.values - minus.values) / (2 * dt)
    xi, hpsi = hamiltonian_apply(coeffs, here, t, stride)
    k = int(stride)
    resid = np.abs(1j * dpsi[k:-k] - hpsi)
    keep = (xi >= here.x_min + margin) & (xi <= here.x_max - margin)
    return float(np.max(resid[keep]))
