"""Picard iteration of the Duhamel integral equation

    psi(t) = U(t) chi - i int_0^t U(t) U^{-1}(s) F(s, psi(s)) ds

for ``(i d/dt - H(t)) psi = F(t, x, psi)``.

The time integral uses ``n_t`` uniform nodes on ``[0, t]``. At a node ``s_i``
the rule over ``[0, s_i]`` is trapezoid (1 interval), Simpson (2), 3/8 (3),
composite Simpson (even counts) or composite Simpson plus a closing 3/8 panel
(odd counts >= 5). The composed kernel is singular at ``s = 0`` and
``s = t``; those endpoints use their exact limits ``U(t)`` and the identity.
"""
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from ._expr import as_function, parse
from .errors import HistoryGapError, NaNDetectedError, UnderResolvedPhaseError
from .evolution import (DEFAULT_DOMAIN, WaveFunction, apply_kernel, hamiltonian_apply,
                        required_points, warn_truncation)
from .kernels import kernel_spec

DEFAULT_NODES = 33
SCHEMES = ("composed", "factored")


# ---------------------------------------------------------------------------
# the nonlinearity

@dataclass(frozen=True, eq=False)
class NonlinearTerm:
    """``F = h(t) |psi|^(2 nu) psi`` (kind ``'power'``) or ``F = source(t, x)``
    (kind ``'forced'``).

    Build with :meth:`power` or :meth:`forced` rather than directly.
    """
    kind: str
    coupling: object = None
    nu: float = 1.0
    source: object = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("power", "forced"):
            raise ValueError(f"kind must be 'power' or 'forced', got {self.kind!r}")
        if self.kind == "power" and not 0 < self.nu <= 1:
            raise ValueError(f"exponent nu must satisfy 0 < nu <= 1, got {self.nu}")
        if self.kind == "forced" and self.source is None:
            raise ValueError("forced kind needs a source")

    @classmethod
    def power(cls, lam=None, nu=1.0, h=None):
        """``lam |psi|^(2 nu) psi``, or ``h(t) |psi|^(2 nu) psi`` when ``h`` is given."""
        if (lam is None) == (h is None):
            raise ValueError("give exactly one of lam and h")
        if h is not None:
            fn = as_function(h)
            return cls("power", fn, float(nu), label=f"h(t)={fn.text}, nu={nu}")
        return cls("power", float(lam), float(nu), label=f"lambda={lam}, nu={nu}")

    @classmethod
    def forced(cls, source):
        """``source(t, x)`` is a callable or an expression (or a pair of
        expressions for the real and imaginary parts) in ``t`` and ``x``."""
        if isinstance(source, (str, tuple, list)):
            source = _expression_source(source)
        return cls("forced", source=source, label="forced")

    @property
    def is_zero(self):
        if self.kind == "forced":
            return False
        if isinstance(self.coupling, float):
            return self.coupling == 0.0
        return self.coupling.is_zero

    def strength(self, t):
        return self.coupling if isinstance(self.coupling, float) else self.coupling(t)

    def __call__(self, t, x, psi):
        """``F(t, x, psi)`` as a complex array."""
        if self.kind == "forced":
            return np.broadcast_to(np.asarray(self.source(t, x), dtype=complex), np.shape(x))
        psi = np.asarray(psi, dtype=complex)
        if self.nu == 1.0:
            mod = psi.real ** 2 + psi.imag ** 2
        else:
            # |psi|^(2 nu) -> 0 at psi = 0 (continuous extension)
            mod = np.abs(psi) ** (2 * self.nu)
        return self.strength(t) * mod * psi

    def describe(self):
        out = {"kind": self.kind, "label": self.label}
        if self.kind == "power":
            out["nu"] = self.nu
            if isinstance(self.coupling, float):
                out["lambda"] = self.coupling
            else:
                out["h"] = self.coupling.text
        return out


def _expression_source(source):
    parts = [source] if isinstance(source, str) else list(source)
    if len(parts) not in (1, 2):
        raise ValueError("forced source takes one expression or a (re, im) pair")
    t, x = sp.Symbol("t", real=True), sp.Symbol("x", real=True)
    fns = [sp.lambdify((t, x), parse(p, ("t", "x")), modules="numpy") for p in parts]

    def fn(s, xs):
        re = fns[0](s, xs)
        im = fns[1](s, xs) if len(fns) == 2 else 0.0
        return np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)
    return fn


# ---------------------------------------------------------------------------
# time quadrature

def time_weights(m, ds):
    """Weights for ``m`` uniform intervals of width ``ds`` (``m + 1`` nodes)."""
    if m < 1:
        raise ValueError("need at least one interval")
    w = np.zeros(m + 1)
    if m == 1:
        w[:] = 0.5
    elif m == 3:
        w[:] = (3 / 8, 9 / 8, 9 / 8, 3 / 8)
    else:
        simp = m if m % 2 == 0 else m - 3
        w[:simp + 1:2] += 2 / 3
        w[1:simp:2] += 4 / 3
        w[0] -= 1 / 3
        w[simp] -= 1 / 3
        if simp < m:
            w[simp:] += (3 / 8, 9 / 8, 9 / 8, 3 / 8)
    return w * ds


# ---------------------------------------------------------------------------
# history and results

@dataclass(frozen=True, eq=False)
class History:
    """Wavefunctions at uniform time nodes ``0 = s_0 < ... < s_m``."""
    times: np.ndarray
    states: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size != len(self.states):
            raise ValueError("times and states must have the same length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", tuple(self.states))

    def index(self, t):
        hits = np.flatnonzero(np.isclose(self.times, t, rtol=1e-12, atol=1e-14))
        if hits.size == 0:
            raise HistoryGapError(f"no history node at t = {t}")
        return int(hits[0])

    def check_nodes(self, upto):
        """Uniform nodes starting at 0 up to index ``upto``."""
        ts = self.times[:upto + 1]
        if ts.size < 2 or ts[0] != 0.0:
            raise HistoryGapError("history must start at s = 0 and contain at least two nodes")
        steps = np.diff(ts)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise HistoryGapError("history nodes are not uniformly spaced")
        return float(steps[0])


@dataclass(eq=False)
class PicardResult:
    psi: WaveFunction
    iterations: int
    differences: list
    converged: bool
    history: History
    log: list = field(default_factory=list)
    t: float = 0.0

    def to_json(self, path=None):
        text = json.dumps({"t": self.t, "iterations": self.iterations,
                           "converged": self.converged, "log": self.log}, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


# ---------------------------------------------------------------------------
# Duhamel operator

class _DuhamelPlan:
    """Kernels needed for one set of time nodes, resolved once per solve."""

    def __init__(self, coeffs, times, scheme, route="auto"):
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        self.coeffs = coeffs
        self.times = np.asarray(times, dtype=float)
        self.scheme = scheme
        m = self.times.size - 1
        self.ds = self.times[1] - self.times[0]
        self.weights = [None] + [time_weights(i, self.ds) for i in range(1, m + 1)]
        self.forward = [None] + [kernel_spec(coeffs, "forward", s, route=route).quadratic()
                                 for s in self.times[1:]]
        if scheme == "factored":
            self.inverse = [None] + [kernel_spec(coeffs, "inverse", s, route=route).quadratic()
                                     for s in self.times[1:]]
            self.composed = None
        else:
            self.composed = {(i, j): kernel_spec(coeffs, "composed", self.times[i], self.times[j],
                                                 route=route).quadratic()
                             for i in range(2, m + 1) for j in range(1, i)}

    def kernels(self):
        yield from (k for k in self.forward if k is not None)
        if self.scheme == "factored":
            yield from (k for k in self.inverse if k is not None)
        else:
            yield from self.composed.values()

    def grid_size(self, x_min, x_max):
        return max(required_points(k, x_min, x_max) for k in self.kernels())


def _apply(kernel, psi, values):
    return apply_kernel(kernel, psi.with_values(values), check=False)


def _integrals(plan, template, sources, nodes, workers=1):
    """``int_0^{s_i} U(s_i) U^{-1}(s) F ds`` at each requested node index ``i``."""
    if plan.scheme == "factored":
        pulled = [sources[0]] + [_apply(plan.inverse[j], template, sources[j])
                                 for j in range(1, len(sources))]

        def one(i):
            w = plan.weights[i]
            inner = np.tensordot(w, np.asarray(pulled[:i + 1]), axes=1)
            return _apply(plan.forward[i], template, inner)
    else:
        def one(i):
            w = plan.weights[i]
            acc = w[0] * _apply(plan.forward[i], template, sources[0])
            for j in range(1, i):
                acc += w[j] * _apply(plan.composed[(i, j)], template, sources[j])
            return acc + w[i] * sources[i]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, nodes))
    return [one(i) for i in nodes]


def _sources(nl, history, x):
    out = []
    for s, state in zip(history.times, history.states):
        f = nl(s, x, state.values)
        if not np.all(np.isfinite(f)):
            raise NaNDetectedError(f"nonlinearity is not finite at s = {s}")
        out.append(np.asarray(f, dtype=complex))
    return out


def duhamel_rhs(chi, history, coeffs, nl, t, scheme="composed", route="auto"):
    """``U(t) chi - i int_0^t U(t, s) F(s, psi(s)) ds`` using ``history`` for ``psi(s)``.

    The history nodes from 0 up to ``t`` define the time quadrature.
    """
    i = history.index(t)
    history.check_nodes(i)
    if i == 0:
        raise HistoryGapError("t must be positive")
    part = History(history.times[:i + 1], history.states[:i + 1])
    plan = _DuhamelPlan(coeffs, part.times, scheme, route)
    lin = apply_kernel(plan.forward[i], chi)
    if nl.is_zero:
        return chi.with_values(lin)
    integral = _integrals(plan, chi, _sources(nl, part, chi.x), [i])[0]
    return chi.with_values(lin - 1j * integral)


def duhamel_grid_size(coeffs, t, x_min=DEFAULT_DOMAIN[0], x_max=DEFAULT_DOMAIN[1],
                      n_t=DEFAULT_NODES, scheme="composed", route="auto"):
    """Smallest odd spatial grid size that resolves every kernel of a solve."""
    plan = _DuhamelPlan(coeffs, np.linspace(0.0, t, n_t), scheme, route)
    return plan.grid_size(x_min, x_max)


def picard_solve(chi, coeffs, nl, t, tol=1e-8, max_iter=20, n_t=DEFAULT_NODES,
                 scheme="composed", route="auto", initial=None, workers=1):
    """Fixed-point iteration of the Duhamel equation on ``n_t`` time nodes.

    ``psi^(0)(s) = U(s) chi``; each sweep recomputes the whole history from
    the previous one. Stops when the sup-norm change at ``t`` drops below
    ``tol``. ``initial`` (a :class:`History` with ``n_t`` nodes) replaces the
    linear first guess, e.g. a solve at a nearby time.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    if n_t < 2:
        raise ValueError("need at least two time nodes")
    times = np.linspace(0.0, float(t), n_t)
    plan = _DuhamelPlan(coeffs, times, scheme, route)
    n_req = plan.grid_size(chi.x_min, chi.x_max)
    if chi.n < n_req:
        raise UnderResolvedPhaseError(
            f"Duhamel kernels on {n_t} time nodes need n >= {n_req} on "
            f"[{chi.x_min}, {chi.x_max}], got {chi.n}", n_req)
    warn_truncation(chi, what="initial data")

    linear = [chi.values] + [apply_kernel(k, chi, check=False) for k in plan.forward[1:]]
    if initial is not None:
        if len(initial.states) != n_t:
            raise ValueError(f"initial history has {len(initial.states)} nodes, need {n_t}")
        current = [chi.values] + [s.values for s in initial.states[1:]]
    else:
        current = list(linear)

    differences, log = [], []
    converged = False
    nodes = range(1, n_t)
    for k in range(1, max_iter + 1):
        hist = History(times, [chi.with_values(v) for v in current])
        if nl.is_zero:
            new = list(linear)
        else:
            ints = _integrals(plan, chi, _sources(nl, hist, chi.x), nodes, workers)
            new = [chi.values] + [linear[i] - 1j * ints[i - 1] for i in nodes]
        for v in new:
            if not np.all(np.isfinite(v)):
                raise NaNDetectedError(f"Picard iterate {k} is not finite")
        diff = float(np.max(np.abs(new[-1] - current[-1])))
        sweep = float(max(np.max(np.abs(a - b)) for a, b in zip(new, current)))
        differences.append(diff)
        log.append({"iteration": k, "sup_difference": diff, "residual": sweep})
        current = new
        if diff < tol:
            converged = True
            break

    history = History(times, [chi.with_values(v) for v in current])
    return PicardResult(history.states[-1], len(differences), differences, converged,
                        history, log, float(t))


# ---------------------------------------------------------------------------
# diagnostics

def inverse_nonlinear_check(psi_t, chi, coeffs, nl, t, history=None, route="auto"):
    """Sup distance from ``chi`` of ``U^{-1}(t) psi(t) + i int_0^t U^{-1}(s) F ds``.

    ``history`` (or ``psi_t.history`` for a :class:`PicardResult`) supplies
    ``psi(s)`` at the time nodes.
    """
    if isinstance(psi_t, PicardResult):
        history = history or psi_t.history
        psi_t = psi_t.psi
    if history is None:
        raise HistoryGapError("inverse check needs the solution history")
    i = history.index(t)
    ds = history.check_nodes(i)
    back = apply_kernel(kernel_spec(coeffs, "inverse", t, route=route).quadratic(), psi_t)
    if not nl.is_zero:
        part = History(history.times[:i + 1], history.states[:i + 1])
        sources = _sources(nl, part, chi.x)
        w = time_weights(i, ds)
        acc = w[0] * sources[0]
        for j in range(1, i + 1):
            kern = kernel_spec(coeffs, "inverse", part.times[j], route=route).quadratic()
            acc = acc + w[j] * apply_kernel(kern, chi.with_values(sources[j]))
        back = back + 1j * acc
    return float(np.max(np.abs(back - chi.values)))


def nonlinear_residual(coeffs, nl, chi, t, dt=1e-4, stride=1, margin=0.0, warm_start=True,
                       **solve_kw):
    """Sup norm of ``i psi_t - H psi - F`` from Picard solves at ``t`` and ``t +- dt``.

    Returns ``(residual, result_at_t)``.
    """
    centre = picard_solve(chi, coeffs, nl, t, **solve_kw)
    guess = centre.history if warm_start else None
    plus = picard_solve(chi, coeffs, nl, t + dt, initial=guess, **solve_kw)
    minus = picard_solve(chi, coeffs, nl, t - dt, initial=guess, **solve_kw)
    dpsi = (plus.psi.values - minus.psi.values) / (2 * dt)
    xi, hpsi = hamiltonian_apply(coeffs, centre.psi, t, stride)
    k = int(stride)
    f = nl(t, xi, centre.psi.values[k:-k])
    resid = np.abs(1j * dpsi[k:-k] - hpsi - f)
    keep = (xi >= chi.x_min + margin) & (xi <= chi.x_max - margin)
    return float(np.max(resid[keep])), centre


def mass_drift(result, chi):
    """``| ||psi(t)||_2 - ||chi||_2 |``."""
    return abs(result.psi.norm_l2() - chi.norm_l2())


__all__ = ["NonlinearTerm", "History", "PicardResult", "time_weights", "duhamel_rhs",
           "duhamel_grid_size", "picard_solve", "inverse_nonlinear_check",
           "nonlinear_residual", "mass_drift", "DEFAULT_NODES", "SCHEMES"]
