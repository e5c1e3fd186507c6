# tests/test_solver.py
"""
Unit tests for the `solver` module.

### Functions:
- `test_zero_rhs_keeps_state_constant`:
    Zero row sums leave x_n = x_0 for every scheme and for F-ABM.
- `test_gl_linear_matches_unrolled_recursion`:
    D^alpha x = -x with G-L at h = 1 against the hand-written recursion.
- `test_linear_problem_needs_one_newton_iteration`:
    An exact Jacobian solves every linear step in one iteration.
- `test_cubic_first_step_matches_bracketing_root`:
    The Newton root of the first cubic step equals a bracketing solve.
- `test_cubic_trajectory_positive_and_decaying`:
    x' = -x^3 - x from x0 = 2 stays positive and drops below 0.1 by t = 100.
- `test_singular_iteration_matrix_uses_residual_direction`:
    A zero iteration matrix is counted and bypassed.
- `test_fixed_point_fallback`:
    A wrong Jacobian stalls damped Newton; the fixed-point fallback recovers.
- `test_history_dot`:
    Known part of a row applied to the stored history.
- `test_fabm_and_gl_agree_with_reference`:
    Both first-order methods approach E_alpha(-t^alpha) at h = 0.01.
- `test_observed_order_on_linear_problem`:
    Error at T = 1 against E_{1/2}(-1) over h = 2^-5..2^-9: order 1 for G-L
    and L1.
- `test_high_order_schemes_are_at_least_first_order`:
    BDF2 and QIA reach at least order 0.85 on the same problem.
- `test_fabm_overflow_truncates_trajectory`:
    A stiff explicit run stops with overflow(step).
- `test_fabm_blowup_threshold_brackets`:
    The threshold search returns a tight stable/unstable pair.
- `test_sparse_jacobian_subdiffusion_steps`:
    Sparse Newton solves on a small grid decrease the grid norm.
- `test_runs_are_deterministic`:
    Identical inputs give bit-identical trajectories.
- `test_config_validation_and_dispatch`:
    Step validation, `for_horizon` and the "fabm" dispatch.
- `test_every_implicit_scheme_completes_on_lorenz`:
    G-L, L1, BDF2 and QIA finish the default Lorenz run at h = 0.2.
- `test_stiff_lorenz_stability_gap`:
    F-ABM overflows where every implicit scheme stays bounded (slow).
"""

import sys
import pathlib

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import binom

# add src to sys.path
sys.path.append(str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from mod.mlf import ml_decay_reference
from mod.problems import (
    LorenzParams,
    linear_problem,
    lorenz_problem,
    scalar_cubic_problem,
    subdiffusion_initial,
    subdiffusion_problem,
)
from mod.solver import (
    Fallback,
    FOdeProblem,
    SolverConfig,
    StatusKind,
    StepContext,
    fabm_blowup_threshold,
    fabm_solve,
    fbdf_solve,
    history_dot,
    newton_inner,
    solve,
)
from mod.weights import SchemeKind


@pytest.fixture
def cubic():
    return scalar_cubic_problem()


@pytest.mark.parametrize("scheme", ["gl", "l1", "bdf2", "qia", "fabm"])
def test_zero_rhs_keeps_state_constant(scheme):
    """
    With f = 0 every step reproduces the initial state.
    """
    problem = linear_problem(np.zeros((2, 2)))
    x0 = np.array([1.5, -0.25])
    traj = solve(problem, scheme, 0.4, SolverConfig(h=0.1, n_steps=40), x0)
    assert traj.completed
    assert np.allclose(traj.states, x0, rtol=0, atol=1e-12), f"❌ {scheme} drifted from x0"


def test_gl_linear_matches_unrolled_recursion():
    """
    x_n = -(s_n x_0 + sum_{j=1}^{n-1} w_{n-j} x_j) / (w_0 + 1) with h = 1.
    """
    alpha, n_steps = 0.3, 50
    w = (-1.0) ** np.arange(n_steps + 1) * binom(alpha, np.arange(n_steps + 1))
    expected = np.empty(n_steps + 1)
    expected[0] = 1.0
    for n in range(1, n_steps + 1):
        start = -np.sum(w[:n])
        known = start * expected[0] + sum(w[n - j] * expected[j] for j in range(1, n))
        expected[n] = -known / (w[0] + 1.0)

    traj = fbdf_solve(linear_problem(-1.0), SchemeKind.GL, alpha, SolverConfig(h=1.0, n_steps=n_steps), [1.0])
    assert np.allclose(traj.states[:, 0], expected, rtol=1e-12, atol=0)


def test_linear_problem_needs_one_newton_iteration():
    """
    One Newton step with the exact Jacobian solves a linear step.
    """
    problem = linear_problem([[-1.0, 2.0], [-2.0, -1.0]])
    traj = fbdf_solve(problem, "l1", 0.7, SolverConfig(h=0.05, n_steps=30), [1.0, 1.0])
    assert traj.completed
    assert traj.diagnostics["newton_iterations"] == 30
    assert traj.diagnostics["damped_steps"] == 0


def test_cubic_first_step_matches_bracketing_root(cubic):
    """
    Step 1 of G-L solves x - 2 + h^alpha (x^3 + x) = 0.
    """
    alpha, h = 0.6, 0.1
    h_alpha = h**alpha
    root = brentq(lambda x: x - 2.0 + h_alpha * (x**3 + x), 0.0, 2.0, xtol=1e-15)
    traj = fbdf_solve(cubic, "gl", alpha, SolverConfig(h=h, n_steps=1), [2.0])
    assert traj.states[1, 0] == pytest.approx(root, abs=1e-12)
    assert traj.residuals[1] <= 1e-11


def test_cubic_trajectory_positive_and_decaying(cubic):
    """
    The cubic solution keeps its sign and decays algebraically.
    """
    traj = fbdf_solve(cubic, "gl", 0.6, SolverConfig.for_horizon(0.1, 100.0), [2.0])
    assert traj.completed
    assert np.all(traj.states[:, 0] > 0), "❌ G-L cubic trajectory changed sign"
    assert traj.states[-1, 0] < 0.1, f"❌ x(100) = {traj.states[-1, 0]}"


def test_singular_iteration_matrix_uses_residual_direction():
    """
    f = x - x^3 with omega_0 = h^alpha = 1: the matrix vanishes at x = 0.
    """
    problem = FOdeProblem(
        dimension=1,
        rhs=lambda t, x: x - x**3,
        jacobian=lambda t, x: np.array([[1.0 - 3.0 * x[0] ** 2]]),
    )
    ctx = StepContext(t=1.0, history=np.array([1.0]), omega0=1.0, h_alpha=1.0, guess=np.zeros(1))
    result = newton_inner(problem, ctx, SolverConfig(h=1.0, n_steps=1))
    assert result.singular >= 1
    assert result.converged
    assert result.x[0] == pytest.approx(-1.0, abs=1e-12)


def test_fixed_point_fallback():
    """
    A Jacobian of the wrong sign gives an ascent direction; only the
    fixed-point iteration reaches x = -1/1.1.
    """
    problem = FOdeProblem(
        dimension=1,
        rhs=lambda t, x: -x,
        jacobian=lambda t, x: np.array([[20.0]]),
    )
    ctx = StepContext(t=1.0, history=np.array([1.0]), omega0=1.0, h_alpha=0.1, guess=np.zeros(1))

    damped = newton_inner(problem, ctx, SolverConfig(h=1.0, n_steps=1))
    assert not damped.converged
    assert damped.damped_steps == 21

    config = SolverConfig(h=1.0, n_steps=1, fallback=Fallback.FIXED_POINT)
    recovered = newton_inner(problem, ctx, config)
    assert recovered.converged
    assert recovered.fallback_steps > 0
    assert recovered.x[0] == pytest.approx(-1.0 / 1.1, abs=1e-11)


def test_history_dot():
    """
    The leading weight is ignored; mismatched lengths raise.
    """
    states = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(history_dot([1.0, -2.0, 5.0], states), [-5.0, -6.0])
    assert np.allclose(history_dot([1.0, -2.0], states), [-5.0, -6.0])
    assert np.allclose(history_dot([4.0], np.empty((0, 2))), [0.0, 0.0])
    with pytest.raises(ValueError):
        history_dot([1.0, 2.0, 3.0, 4.0], states)


def test_fabm_and_gl_agree_with_reference():
    """
    At t = 2 both trajectories are within 0.02 of E_{1/2}(-sqrt(2)).
    """
    problem = linear_problem(-1.0)
    config = SolverConfig.for_horizon(0.01, 2.0)
    reference = ml_decay_reference(0.5, -1.0, [2.0])[0]
    gl = fbdf_solve(problem, "gl", 0.5, config, [1.0])
    fabm = fabm_solve(problem, 0.5, config, [1.0])
    assert fabm.completed and gl.completed
    assert abs(gl.states[-1, 0] - reference) <= 0.02, f"❌ G-L {gl.states[-1, 0]} vs {reference}"
    assert abs(fabm.states[-1, 0] - reference) <= 0.02, f"❌ F-ABM {fabm.states[-1, 0]} vs {reference}"


def _observed_order(scheme, alpha=0.5, ks=range(5, 10)):
    problem = linear_problem(-1.0)
    reference = ml_decay_reference(alpha, -1.0, [1.0])[0]
    hs, errors = [], []
    for k in ks:
        h = 2.0**-k
        traj = fbdf_solve(problem, scheme, alpha, SolverConfig.for_horizon(h, 1.0), [1.0])
        assert traj.completed
        hs.append(h)
        errors.append(abs(traj.states[-1, 0] - reference))
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


@pytest.mark.parametrize("scheme", ["gl", "l1"])
def test_observed_order_on_linear_problem(scheme):
    """
    The solution 1 - t^alpha/Gamma(1+alpha) + ... is not smooth at t = 0, so
    the first-order schemes keep order 1 at T = 1 and the second-order ones
    do not reach 2.
    """
    order = _observed_order(scheme)
    assert abs(order - 1.0) <= 0.15, f"❌ {scheme} observed order {order}"


@pytest.mark.parametrize("scheme", ["bdf2", "qia"])
def test_high_order_schemes_are_at_least_first_order(scheme):
    """BDF2 and QIA lose their second order on the same problem but stay first order."""
    order = _observed_order(scheme)
    assert order >= 0.85, f"❌ {scheme} observed order {order}"


def test_fabm_overflow_truncates_trajectory():
    """
    D^alpha x = -50 x at h = 1 is far outside the explicit stability region.
    """
    traj = fabm_solve(linear_problem(-50.0), 0.5, SolverConfig(h=1.0, n_steps=500), [1.0])
    assert traj.status.kind is StatusKind.OVERFLOW
    assert traj.times.size == traj.status.step
    assert str(traj.status) == f"overflow({traj.status.step})"
    assert np.all(np.isfinite(traj.states))


def test_fabm_blowup_threshold_brackets():
    """
    After ten bisections the bracket ratio is below 1.01.
    """
    problem = linear_problem(-20.0)
    result = fabm_blowup_threshold(problem, 0.9, 100.0, [1.0], bisections=10)
    assert result.stable_h is not None and result.blowup_h is not None
    assert result.stable_h < result.blowup_h < 1.01 * result.stable_h
    assert (result.blowup_h, True) in result.trials
    assert (result.stable_h, False) in result.trials
    with pytest.raises(ValueError):
        fabm_blowup_threshold(problem, 0.9, 100.0, [1.0], h_start=1e-4, max_steps=1000)


def test_sparse_jacobian_subdiffusion_steps():
    """
    L1 on a 5x5 interior grid with the sparse Jacobian.
    """
    problem, grid = subdiffusion_problem(nx=5, ny=5)
    x0 = subdiffusion_initial(grid, 2)
    traj = fbdf_solve(problem, "l1", 0.5, SolverConfig(h=0.01, n_steps=20), x0)
    assert traj.completed
    norms = traj.norms()
    assert np.all(np.diff(norms) < 0), "❌ grid norm did not decrease"


def test_runs_are_deterministic(cubic):
    """
    Two runs with the same inputs are bit-identical.
    """
    config = SolverConfig(h=0.2, n_steps=60)
    first = fbdf_solve(cubic, "qia", 0.5, config, [2.0])
    second = fbdf_solve(cubic, "qia", 0.5, config, [2.0])
    assert np.array_equal(first.states, second.states)
    assert first.diagnostics == second.diagnostics


def test_config_validation_and_dispatch(cubic):
    """
    Invalid steps raise; "fabm" routes to the explicit method.
    """
    with pytest.raises(ValueError):
        SolverConfig(h=0.0, n_steps=10)
    with pytest.raises(ValueError):
        SolverConfig(h=0.1, n_steps=0)
    assert SolverConfig.for_horizon(0.3, 1.0).n_steps == 3
    assert solve(cubic, "fabm", 0.5, SolverConfig(h=0.1, n_steps=5), [1.0]).scheme == "fabm"
    assert solve(cubic, SchemeKind.BDF2, 0.5, SolverConfig(h=0.1, n_steps=5), [1.0]).scheme == "bdf2"
    with pytest.raises(ValueError):
        solve(cubic, "gl", 0.5, SolverConfig(h=0.1, n_steps=5), [1.0, 2.0])
    with pytest.raises(ValueError):
        solve(cubic, "euler", 0.5, SolverConfig(h=0.1, n_steps=5), [1.0])


@pytest.mark.parametrize("alpha", [0.5, 0.9])
def test_every_implicit_scheme_completes_on_lorenz(alpha):
    """
    (c1, c2, c3) = (1/4, 1, 1/4), x0 = (2, 1, 2), h = 0.2 to T = 20.
    """
    problem = lorenz_problem()
    config = SolverConfig.for_horizon(0.2, 20.0)
    for scheme in ("gl", "l1", "bdf2", "qia"):
        traj = solve(problem, scheme, alpha, config, [2.0, 1.0, 2.0])
        assert traj.completed, f"❌ {scheme} stopped with {traj.status} at alpha={alpha}"
        assert np.max(traj.norms()) < 10.0, f"❌ {scheme} left the bounded region at alpha={alpha}"


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.5, 0.9])
def test_stiff_lorenz_stability_gap(alpha):
    """
    Stiff Lorenz at h = 0.2: F-ABM overflows, the four implicit schemes
    complete inside a bounded set.
    """
    problem = lorenz_problem(LorenzParams(50.0, 60.0, 50.0))
    config = SolverConfig.for_horizon(0.2, 20.0)
    x0 = [2.0, 1.0, 2.0]
    explicit = fabm_solve(problem, alpha, config, x0)
    assert explicit.status.kind is StatusKind.OVERFLOW
    for scheme in ("gl", "l1", "bdf2", "qia"):
        implicit = fbdf_solve(problem, scheme, alpha, config, x0)
        assert implicit.completed, f"❌ {scheme} stopped with {implicit.status}"
        assert np.max(implicit.norms()) < 100.0, f"❌ {scheme} left the bounded region"
