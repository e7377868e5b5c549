"""Per-model state shared by the kernel and evolution code."""
import threading
import weakref

from .characteristic import solve_characteristic
from .coefficients import coefficient_zero, validity_interval
from .errors import OutOfRangeError
from .phases import PhaseSolver, closed_phases

ROUTES = ("auto", "closed", "quadrature")


class Propagator:
    """Characteristic solution, phase sextets and weights for one model.

    Parameters
    ----------
    coeffs : CoefficientSet
    route : {'auto', 'closed', 'quadrature'}
        Where phase sextets come from. ``'auto'`` uses the registry's closed
        form when there is one and the integral formulas otherwise.
    characteristic : {'auto', 'numeric'}
        Passed to :func:`~quadprop.characteristic.solve_characteristic`.
    """

    def __init__(self, coeffs, route="auto", characteristic="auto"):
        if route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}")
        self.coeffs = coeffs
        _, self.t_valid = validity_interval(coeffs)
        solve_to = self.t_valid
        if coefficient_zero(coeffs, solve_to) is not None:
            solve_to *= 1 - 1e-9
        self.char = solve_characteristic(coeffs, solve_to, method=characteristic)
        if route == "closed" and coeffs.closed_phases is None:
            raise ValueError(f"{coeffs.name} has no closed-form phases")
        self.route = "closed" if route != "quadrature" and coeffs.closed_phases else "quadrature"
        self.solver = PhaseSolver(coeffs, self.char)
        # the integral formulas divide by mu'
        if self.route == "quadrature" and self.solver.mu_prime_zero is not None:
            self.t_valid = min(self.t_valid, self.solver.mu_prime_zero)

    def __repr__(self):
        return f"Propagator({self.coeffs.name!r}, route={self.route!r}, t_valid={self.t_valid:.6g})"

    def check_time(self, t):
        """Accept ``0 < t < t_valid``, and ``t == t_valid`` when that is only the cap."""
        t = float(t)
        capped = self.t_valid >= self.coeffs.t_cap
        if not 0.0 < t <= self.t_valid or (t == self.t_valid and not capped):
            raise OutOfRangeError(f"t = {t} outside the validity interval "
                                  f"(0, {self.t_valid:.12g}) of {self.coeffs.name}")
        return t

    def phases(self, t):
        t = self.check_time(t)
        if self.route == "closed":
            return closed_phases(self.coeffs, t)
        return self.solver(t)

    def mu(self, t):
        return self.char.mu(t)

    def weight(self, t):
        """``exp(-int_0^t (c - 2d))``."""
        return self.solver.weight(t)

    # kernel specs ---------------------------------------------------------
    def forward(self, t):
        from .kernels import KernelSpec
        p = self.phases(t)
        return KernelSpec("forward", p.t, None, p, None, self.mu(p.t), None, self.weight(p.t), None)

    def inverse(self, t):
        from .kernels import KernelSpec
        p = self.phases(t)
        return KernelSpec("inverse", p.t, None, p, None, self.mu(p.t), None, self.weight(p.t), None)

    def composed(self, t, s):
        from .kernels import KernelSpec
        if not s < t:
            raise ValueError(f"composed kernel needs s < t, got t={t}, s={s}")
        pt, ps = self.phases(t), self.phases(s)
        return KernelSpec("composed", pt.t, ps.t, pt, ps, self.mu(pt.t), self.mu(ps.t),
                          self.weight(pt.t), self.weight(ps.t))


_lock = threading.Lock()
_registry = weakref.WeakKeyDictionary()


def propagator_for(coeffs, route="auto"):
    """Shared :class:`Propagator` for ``coeffs`` (built once per route)."""
    if isinstance(coeffs, Propagator):
        return coeffs
    with _lock:
        per_model = _registry.setdefault(coeffs, {})
        prop = per_model.get(route)
    if prop is None:
        prop = Propagator(coeffs, route=route)
        with _lock:
            prop = per_model.setdefault(route, prop)
    return prop
