import json

import numpy as np
import pytest

from quadprop import apply_forward, gaussian, get_model
from quadprop.errors import HistoryGapError, UnderResolvedPhaseError
from quadprop.nonlinear import (History, NonlinearTerm, duhamel_grid_size, duhamel_rhs,
                                inverse_nonlinear_check, mass_drift, nonlinear_residual,
                                picard_solve, time_weights)

import oracles

N_T = 17
LO, HI = -7.0, 7.0


def grid_for(coeffs, t, dt=1e-4, n_t=N_T, normalized=False):
    n = max(duhamel_grid_size(coeffs, s, LO, HI, n_t=n_t) for s in (t - dt, t, t + dt))
    return gaussian(LO, HI, n, normalized=normalized)


def source(s, x):
    return np.exp(-x ** 2) * np.exp(1j * s)


# ---------------------------------------------------------------------------
# ingredients

@pytest.mark.parametrize("m", range(1, 10))
def test_time_weights_exactness(m):
    # trapezoid for one interval, cubic-exact rules otherwise
    s = np.linspace(0, 0.3, m + 1)
    w = time_weights(m, 0.3 / m)
    for deg in range(2 if m == 1 else 4):
        assert np.dot(w, s ** deg) == pytest.approx(0.3 ** (deg + 1) / (deg + 1), rel=1e-13)


def test_time_weights_reject_empty():
    with pytest.raises(ValueError):
        time_weights(0, 0.1)


@pytest.mark.parametrize("kw", [{"lam": 1.0, "nu": 0.0}, {"lam": 1.0, "nu": 1.5},
                                {}, {"lam": 1.0, "h": "t"}])
def test_power_term_validation(kw):
    with pytest.raises(ValueError):
        NonlinearTerm.power(**kw)


def test_forced_needs_source():
    with pytest.raises(ValueError):
        NonlinearTerm("forced")


def test_power_term_values():
    psi = np.array([0.0, 1 + 1j, -2.0])
    np.testing.assert_allclose(NonlinearTerm.power(0.5)(0.0, None, psi), 0.5 * np.abs(psi) ** 2 * psi)
    half = NonlinearTerm.power(1.0, nu=0.5)(0.0, None, psi)
    assert half[0] == 0 and half[2] == pytest.approx(-4.0)
    h = NonlinearTerm.power(h="cos(t)")
    assert h.strength(np.pi) == pytest.approx(-1.0)
    assert h.describe()["h"] == "cos(t)"


def test_zero_coupling_detected():
    assert NonlinearTerm.power(0.0).is_zero
    assert NonlinearTerm.power(h="0").is_zero
    assert not NonlinearTerm.forced(source).is_zero


def test_forced_expression_pair_matches_callable():
    nl = NonlinearTerm.forced(("exp(-x**2)*cos(t)", "exp(-x**2)*sin(t)"))
    x = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(nl(0.7, x, None), source(0.7, x), atol=1e-15)
    assert nl(0.7, x, None).shape == x.shape


def test_history_validation():
    psi = gaussian(n=11)
    with pytest.raises(ValueError):
        History([0.0, 0.1], [psi])
    hist = History([0.0, 0.1, 0.3], [psi] * 3)
    with pytest.raises(HistoryGapError):
        hist.index(0.2)
    with pytest.raises(HistoryGapError):
        hist.check_nodes(2)
    with pytest.raises(HistoryGapError):
        History([0.1, 0.2], [psi] * 2).check_nodes(1)
    assert hist.check_nodes(1) == pytest.approx(0.1)


def test_duhamel_rhs_rejects_t_zero(free):
    psi = gaussian(n=11)
    with pytest.raises(HistoryGapError):
        duhamel_rhs(psi, History([0.0, 0.1], [psi] * 2), free, NonlinearTerm.power(0.1), 0.0)


def test_picard_argument_checks(free):
    chi = gaussian(LO, HI, 5001)
    nl = NonlinearTerm.power(0.1)
    with pytest.raises(ValueError):
        picard_solve(chi, free, nl, 0.3, tol=0.0)
    with pytest.raises(ValueError):
        picard_solve(chi, free, nl, 0.3, max_iter=0)
    with pytest.raises(UnderResolvedPhaseError) as info:
        picard_solve(gaussian(LO, HI, 1001), free, nl, 0.3)
    assert info.value.suggested_n > 1001


# ---------------------------------------------------------------------------
# solves

def test_zero_coupling_is_linear_evolution(free):
    chi = grid_for(free, 0.3)
    res = picard_solve(chi, free, NonlinearTerm.power(0.0), 0.3, n_t=N_T)
    assert res.converged and res.iterations == 1
    np.testing.assert_array_equal(res.psi.values, apply_forward(chi, free, 0.3).values)
    rhs = duhamel_rhs(chi, res.history, free, NonlinearTerm.power(0.0), 0.3)
    np.testing.assert_array_equal(rhs.values, res.psi.values)
    assert inverse_nonlinear_check(res, chi, free, NonlinearTerm.power(0.0), 0.3) < 1e-4


def test_forced_source_solves_equation(free):
    nl = NonlinearTerm.forced(source)
    chi = grid_for(free, 0.4)
    res, centre = nonlinear_residual(free, nl, chi, 0.4, n_t=N_T)
    assert centre.converged and centre.iterations <= 2
    assert res < 1e-3
    assert inverse_nonlinear_check(centre, chi, free, nl, 0.4) < 1e-3


def test_small_coupling_scales_linearly(free):
    chi = grid_for(free, 0.3)
    lin = apply_forward(chi, free, 0.3).values
    c = [np.max(np.abs(picard_solve(chi, free, NonlinearTerm.power(lam), 0.3, n_t=N_T)
                       .psi.values - lin)) / lam for lam in (1e-2, 1e-3)]
    assert c[0] > 0
    assert abs(c[0] / c[1] - 1) < 0.2


@pytest.fixture(scope="module")
def cubic_free():
    free = get_model("free_particle")
    chi = grid_for(free, 0.3, normalized=True)
    nl = NonlinearTerm.power(0.1)
    res, centre = nonlinear_residual(free, nl, chi, 0.3, n_t=N_T)
    return free, chi, nl, res, centre


def test_cubic_free_particle(cubic_free):
    free, chi, nl, res, centre = cubic_free
    assert centre.converged and centre.iterations <= 20
    assert res < 1e-3
    assert mass_drift(centre, chi) < 1e-3
    assert inverse_nonlinear_check(centre, chi, free, nl, 0.3) < 1e-3


def test_result_invariants(cubic_free):
    centre = cubic_free[-1]
    assert len(centre.differences) == centre.iterations == len(centre.log)
    assert centre.differences[-1] < 1e-8
    assert [e["iteration"] for e in centre.log] == list(range(1, centre.iterations + 1))
    assert centre.history.times[-1] == 0.3 and len(centre.history.states) == N_T


def test_fixed_point(cubic_free):
    free, chi, nl, _, centre = cubic_free
    again = duhamel_rhs(chi, centre.history, free, nl, 0.3)
    assert np.max(np.abs(again.values - centre.psi.values)) < 2e-8


def test_iteration_log_json(cubic_free, tmp_path):
    centre = cubic_free[-1]
    path = tmp_path / "log.json"
    text = centre.to_json(path)
    data = json.loads(path.read_text())
    assert json.loads(text) == data
    assert set(data["log"][0]) == {"iteration", "sup_difference", "residual"}
    assert data["converged"] is True


def test_oscillator_ground_state(oscillator):
    n = max(duhamel_grid_size(oscillator, s, LO, HI, n_t=N_T) for s in (0.3 - 1e-4, 0.3 + 1e-4))
    x = np.linspace(LO, HI, n)
    chi = gaussian(LO, HI, n).with_values(oracles.ho_ground_state(x))
    nl = NonlinearTerm.power(0.05)
    res, centre = nonlinear_residual(oscillator, nl, chi, 0.3, n_t=N_T)
    assert centre.converged and res < 1e-3
    assert mass_drift(centre, chi) < 1e-3


def test_contraction_ratio_shrinks_with_coupling(free):
    chi = grid_for(free, 0.3)
    ratios = []
    for lam in (0.1, 0.01):
        d = picard_solve(chi, free, NonlinearTerm.power(lam), 0.3, n_t=N_T).differences
        ratios.append(d[2] / d[1])
    assert ratios[1] < ratios[0] < 1


def test_non_convergence_is_reported(free):
    chi = grid_for(free, 0.3)
    res = picard_solve(chi, free, NonlinearTerm.power(0.1), 0.3, n_t=N_T, max_iter=2)
    assert not res.converged and res.iterations == 2


def test_schemes_agree(free):
    chi = grid_for(free, 0.3)
    nl = NonlinearTerm.power(0.1)
    a = picard_solve(chi, free, nl, 0.3, n_t=N_T, scheme="composed")
    b = picard_solve(chi, free, nl, 0.3, n_t=N_T, scheme="factored", workers=2)
    assert np.max(np.abs(a.psi.values - b.psi.values)) < 1e-8


def test_warm_start_reaches_same_solution(free):
    chi = grid_for(free, 0.3)
    nl = NonlinearTerm.power(0.1)
    cold = picard_solve(chi, free, nl, 0.3, n_t=N_T)
    warm = picard_solve(chi, free, nl, 0.3, n_t=N_T, initial=cold.history)
    assert warm.iterations < cold.iterations
    assert np.max(np.abs(warm.psi.values - cold.psi.values)) < 1e-8
