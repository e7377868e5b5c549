"""Operator-level and limit checks of the propagator identities.

Identities that hold only in the distributional sense are exercised on
smooth Gaussians of widths 0.5, 1 and 2. Each check returns a
:class:`CheckReport`; :func:`run_battery` runs the set over several models.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import MODEL_NAMES, get_model
from .evolution import (WaveFunction, addition_property_check, apply_kernel, chi,
                        required_points)
from .kernels import asymptotic_quadratic, kernel_spec
from .propagator import propagator_for

WIDTHS = (0.5, 1.0, 2.0)
ASYMPTOTIC_TIMES = (1e-1, 1e-2, 1e-3)
# deviations below this are rounding noise and do not break monotonicity
MONOTONE_FLOOR = 1e-10
ADDITION_MODELS = ("free_particle", "uniform_field", "forced_oscillator")

THRESHOLDS = {
    "orthogonality": 1e-4,
    "orthogonality_small_t": 1e-3,
    "addition": 1e-10,
    "chi_formula": 1e-5,
    "asymptotics": 0.0,
}


@dataclass
class CheckReport:
    """One measured quantity against its threshold; ``passed`` iff measured <= threshold."""
    name: str
    model: str
    params: dict
    measured: float
    threshold: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.measured <= self.threshold)

    def to_dict(self):
        return {"name": self.name, "model": self.model, "params": self.params,
                "measured": self.measured, "threshold": self.threshold,
                "passed": self.passed, "details": self.details}


# ---------------------------------------------------------------------------
# grids and the brute-force oracle

def auto_grid_size(kernels, x_min, x_max, n_min=2001):
    """Odd ``n >= n_min`` that resolves every kernel in ``kernels``."""
    n = max([n_min] + [required_points(k, x_min, x_max) for k in kernels])
    return n + (n % 2 == 0)


def probe_gaussians(x_min, x_max, n, widths=WIDTHS):
    x = np.linspace(x_min, x_max, n)
    return [WaveFunction(x_min, x_max, np.exp(-x * x / (2 * w * w))) for w in widths]


def smooth_window(z, lo, hi, ramp):
    """1 on ``[lo + ramp, hi - ramp]``, 0 outside ``[lo, hi]``, C-infinity in between."""
    def step(u):
        # smooth 0 -> 1 transition on [0, 1]
        u = np.clip(u, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            f = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
            g = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1 - u, 1.0)), 0.0)
        return f / (f + g)
    z = np.asarray(z, dtype=float)
    return step((z - lo) / ramp) * step((hi - z) / ramp)


def damped_quadrature(fn, lo, hi, n, ramp_fraction=0.2):
    """Simpson integral of ``fn(z) * window(z)`` on ``n`` nodes.

    The smooth window switches off the oscillatory tails of a non-absolutely
    convergent integral; this is the brute-force oracle for closed forms.
    """
    if n % 2 == 0:
        n += 1
    z = np.linspace(lo, hi, n)
    h = z[1] - z[0]
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    vals = fn(z) * smooth_window(z, lo, hi, ramp_fraction * (hi - lo) / 2)
    return complex(np.dot(w, vals) * h / 3)


def brute_force_composed(coeffs, x, y, t, s, z_max=60.0, h=1e-3):
    """``int G(x, z, t) H(z, y, s) dz`` by damped quadrature, for scalars ``x, y``."""
    fwd = kernel_spec(coeffs, "forward", t).quadratic()
    inv = kernel_spec(coeffs, "inverse", s).quadratic()
    n = int(round(2 * z_max / h)) + 1
    return damped_quadrature(lambda z: fwd(x, z) * inv(z, y), -z_max, z_max, n)


# ---------------------------------------------------------------------------
# checks

def check_orthogonality(coeffs, t, x_min=-16.0, x_max=16.0, widths=WIDTHS, threshold=None,
                        route="auto"):
    """``U(t) U^{-1}(t) phi = phi`` and ``U^{-1}(t) U(t) phi = phi`` on Gaussians."""
    if threshold is None:
        threshold = THRESHOLDS["orthogonality" if t >= 1e-2 else "orthogonality_small_t"]
    fwd = kernel_spec(coeffs, "forward", t, route=route).quadratic()
    inv = kernel_spec(coeffs, "inverse", t, route=route).quadratic()
    n = auto_grid_size([fwd, inv], x_min, x_max)
    devs = []
    for phi in probe_gaussians(x_min, x_max, n, widths):
        a = apply_kernel(inv, phi.with_values(apply_kernel(fwd, phi)))
        b = apply_kernel(fwd, phi.with_values(apply_kernel(inv, phi)))
        devs.append(max(np.max(np.abs(a - phi.values)), np.max(np.abs(b - phi.values))))
    return CheckReport("orthogonality", coeffs.name,
                       {"t": t, "x_min": x_min, "x_max": x_max, "n": n, "widths": list(widths)},
                       float(max(devs)), threshold, {"per_width": [float(d) for d in devs]})


def kernel_deviation(coeffs, t, box=1.0, points=41, route="auto"):
    """``max |G / G_asym - 1|`` over ``|x|, |y| <= box``."""
    g = np.linspace(-box, box, points)
    x, y = np.meshgrid(g, g, indexing="ij")
    exact = kernel_spec(coeffs, "forward", t, route=route).quadratic()(x, y)
    approx = asymptotic_quadratic(coeffs, t)(x, y)
    return float(np.max(np.abs(exact / approx - 1.0)))


def is_monotone(values, floor=MONOTONE_FLOOR):
    """Non-increasing, treating anything below ``floor`` as equal to it."""
    v = np.maximum(np.asarray(values, dtype=float), floor)
    return bool(np.all(np.diff(v) <= 0.0))


def check_asymptotics(coeffs, times=ASYMPTOTIC_TIMES, x_min=-8.0, x_max=8.0, route="auto"):
    """Exact vs small-time kernel as ``t`` shrinks.

    ``measured`` counts monotonicity breaks in the kernel deviation and in the
    operator-level deviation ``||U(t) phi - U_asym(t) phi||_inf``; it passes at 0.
    ``||U(t) phi - phi||_inf`` is reported as well.
    """
    times = sorted(times, reverse=True)
    kern, oper, drift = [], [], []
    for t in times:
        kern.append(kernel_deviation(coeffs, t, route=route))
        exact = kernel_spec(coeffs, "forward", t, route=route).quadratic()
        approx = asymptotic_quadratic(coeffs, t)
        n = auto_grid_size([exact, approx], x_min, x_max)
        phi = probe_gaussians(x_min, x_max, n, (1.0,))[0]
        u = apply_kernel(exact, phi)
        oper.append(float(np.max(np.abs(u - apply_kernel(approx, phi)))))
        drift.append(float(np.max(np.abs(u - phi.values))))
    breaks = (not is_monotone(kern)) + (not is_monotone(oper))
    return CheckReport("asymptotics", coeffs.name, {"times": times}, float(breaks),
                       THRESHOLDS["asymptotics"],
                       {"kernel_deviation": kern, "operator_deviation": oper,
                        "identity_deviation": drift,
                        "identity_expected": bool(coeffs.g(0.0) == 0.0)})


def check_addition(coeffs, pairs, threshold=None, route="auto"):
    """``|mu(t) mu(s) (gamma(s) - gamma(t)) - chi((t+s)/2) mu(t-s)|`` over ``pairs``.

    Asserted (threshold 1e-10) for the models where the identity is known to
    hold; reported with an infinite threshold otherwise.
    """
    asserted = coeffs.name in ADDITION_MODELS
    if threshold is None:
        threshold = THRESHOLDS["addition"] if asserted else math.inf
    rows = []
    for t, s in pairs:
        if t == s:
            rows.append((t, s, 0.0, 0.0))
            continue
        lhs, rhs = addition_property_check(coeffs, t, s, route=route)
        rows.append((t, s, lhs, rhs))
    worst = max(abs(lhs - rhs) for _, _, lhs, rhs in rows)
    return CheckReport("addition", coeffs.name, {"pairs": [list(p) for p in pairs]},
                       float(worst), threshold,
                       {"asserted": asserted,
                        "rows": [{"t": t, "s": s, "lhs": lhs, "rhs": rhs}
                                 for t, s, lhs, rhs in rows]})


def gamma_rate(coeffs, t, step=1e-4, route="auto"):
    """``d gamma / dt`` by the fourth-order central difference."""
    prop = propagator_for(coeffs, route=route)
    step = min(step, 0.25 * t, 0.25 * (prop.t_valid - t))
    g = [prop.phases(t + k * step).gamma for k in (-2, -1, 1, 2)]
    return (g[0] - 8 * g[1] + 8 * g[2] - g[3]) / (12 * step)


def check_chi_formula(coeffs, t, threshold=None, route="auto"):
    """Residuals of ``gamma' + W^2 a / mu^2 = 0`` and of ``gamma' + 2 a(0) chi / mu^2 = 0``."""
    threshold = THRESHOLDS["chi_formula"] if threshold is None else threshold
    prop = propagator_for(coeffs, route=route)
    rate = gamma_rate(coeffs, t, route=route)
    mu2 = prop.mu(t) ** 2
    weight_form = rate + prop.weight(t) ** 2 * coeffs.a(t) / mu2
    chi_t = chi(coeffs, t, route)
    chi_form = rate + 2 * coeffs.a(0.0) * chi_t / mu2
    measured = max(abs(weight_form), abs(chi_form))
    return CheckReport("chi_formula", coeffs.name, {"t": t}, float(measured), threshold,
                       {"chi": float(chi_t), "gamma_rate": float(rate),
                        "weight_residual": float(weight_form), "chi_residual": float(chi_form)})


# ---------------------------------------------------------------------------
# battery

def run_battery(models=MODEL_NAMES, route="auto"):
    """All checks at default parameters for each model; returns a list of reports.

    ``models`` holds registry names or :class:`CoefficientSet` objects.
    """
    reports = []
    for model in models:
        coeffs = get_model(model) if isinstance(model, str) else model
        t_valid = propagator_for(coeffs, route=route).t_valid
        t_mid = min(0.5, 0.5 * t_valid)
        reports.append(check_orthogonality(coeffs, t_mid, route=route))
        reports.append(check_orthogonality(coeffs, 1e-3, route=route))
        reports.append(check_asymptotics(coeffs, route=route))
        pairs = [(t, s) for t, s in ((1.0, 0.4), (0.8, 0.3), (0.5, 0.5)) if t < t_valid]
        reports.append(check_addition(coeffs, pairs, route=route))
        reports.append(check_chi_formula(coeffs, t_mid, route=route))
    return reports


def reports_to_json(reports, path=None):
    text = json.dumps([r.to_dict() for r in reports], indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def format_table(reports):
    rows = [("check", "model", "measured", "threshold", "status")]
    for r in reports:
        rows.append((r.name, r.model, f"{r.measured:.3e}", f"{r.threshold:.1e}",
                     "pass" if r.passed else "FAIL"))
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows)
