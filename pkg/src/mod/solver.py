# src/mod/solver.py

"""
Time stepping for Caputo systems D^alpha x = f(t, x), 0 < alpha < 1.

`fbdf_solve` advances the implicit full-term recursion of any weight scheme
with a damped Newton inner solve; `fabm_solve` is the explicit fractional
Adams-Bashforth-Moulton predictor-corrector used as a baseline.

### Functions:
- `history_dot`: known part of the step-n row applied to the history.
- `newton_inner`: solves omega_0 x - h^alpha f(t_n, x) + history = 0.
- `fbdf_solve`: implicit F-BDF trajectory for a `SchemeKind`.
- `fabm_solve`: explicit predictor-corrector trajectory.
- `fabm_blowup_threshold`: bracketing and bisection on h for F-ABM blow-up.
- `solve`: dispatch on the scheme tag ("fabm" or a `SchemeKind`).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.special import rgamma

from mod.weights import SchemeKind, as_alpha, make_weights

OVERFLOW_THRESHOLD = 1e150
FD_STEP = 1e-7
MAX_HALVINGS = 20
# Newton steps below a few ulps of the iterate cannot improve the residual
STAGNATION_ULPS = 4.0


class Fallback(str, Enum):
    DAMPED_NEWTON = "damped_newton"
    FIXED_POINT = "fixed_point"


class StatusKind(str, Enum):
    COMPLETED = "completed"
    NEWTON_FAILURE = "newton_failure"
    OVERFLOW = "overflow"


@dataclass(frozen=True)
class SolveStatus:
    kind: StatusKind
    step: Optional[int] = None

    def __str__(self):
        if self.step is None:
            return self.kind.value
        return f"{self.kind.value}({self.step})"


@dataclass(frozen=True, eq=False)
class FOdeProblem:
    """
    Right-hand side f(t, x) of a d-dimensional Caputo system.

    The structural constants are metadata for diagnostics; the solvers never
    rely on them. `grid_norm` selects the averaged discrete l2 norm used for
    semi-discretized PDEs.
    """

    dimension: int
    rhs: Callable
    jacobian: Optional[Callable] = None
    lambda_one_sided: Optional[float] = None
    dissipativity: Optional[tuple] = None
    name: str = "problem"
    grid_norm: bool = False

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"❌ dimension must be >= 1, got {self.dimension}")
        if self.dissipativity is not None:
            a, b = self.dissipativity
            if a < 0 or not b > 0:
                raise ValueError(f"❌ dissipativity needs a >= 0 and b > 0, got ({a}, {b})")

    def evaluate(self, t, x):
        return np.asarray(self.rhs(t, x), dtype=float).reshape(self.dimension)

    def norm(self, x):
        return state_norms(np.asarray(x, dtype=float).reshape(1, -1), self.grid_norm)[0]


def state_norms(states, grid_norm=False):
    """Row-wise Euclidean norms, or root-mean-square norms on grids."""
    states = np.asarray(states, dtype=float)
    states = states.reshape(states.shape[0], -1)
    if grid_norm:
        return np.sqrt(np.mean(states * states, axis=1))
    return np.linalg.norm(states, axis=1)


@dataclass(frozen=True)
class SolverConfig:
    """Uniform grid t_n = n h with n = 0..n_steps, and inner-solve controls.

    The Newton tolerance is `newton_rtol * max(1, |x|, |history|,
    h^alpha |f(x)|)`."""

    h: float
    n_steps: int
    newton_rtol: float = 1e-12
    newton_max_iter: int = 50
    fallback: Fallback = Fallback.DAMPED_NEWTON
    overflow_threshold: float = OVERFLOW_THRESHOLD

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"❌ step size must be positive, got {self.h}")
        if self.n_steps < 1:
            raise ValueError(f"❌ n_steps must be >= 1, got {self.n_steps}")
        if not self.newton_rtol > 0 or self.newton_max_iter < 1:
            raise ValueError("❌ Newton tolerance and iteration cap must be positive")
        object.__setattr__(self, "fallback", Fallback(self.fallback))

    @classmethod
    def for_horizon(cls, h, horizon, **kwargs):
        return cls(h=h, n_steps=max(1, int(round(horizon / h))), **kwargs)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    residuals: np.ndarray
    status: SolveStatus
    scheme: str
    alpha: float
    h: float
    grid_norm: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def completed(self):
        return self.status.kind is StatusKind.COMPLETED

    @property
    def dimension(self):
        return self.states.shape[1]

    def norms(self):
        return state_norms(self.states, self.grid_norm)


@dataclass
class StepContext:
    t: float
    history: np.ndarray
    omega0: float
    h_alpha: float
    guess: np.ndarray


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    converged: bool
    damped_steps: int = 0
    fallback_steps: int = 0
    singular: int = 0


def history_dot(row, states):
    """
    Apply the known part of a step-n row to the history x_0..x_{n-1}.

    Args:
        row (sequence): state-indexed row of length n + 1 (leading weight
            last, ignored) or n.
        states (array): x_0..x_{n-1}, shape (n, d) or (n,).

    Returns:
        np.ndarray: sum_{j<n} row_j x_j.
    """
    row = np.asarray(row, dtype=float)
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states.reshape(-1, 1)
    n = states.shape[0]
    if row.size not in (n, n + 1):
        raise ValueError(f"❌ row of length {row.size} does not match {n} history states")
    if n == 0:
        return np.zeros(states.shape[1])
    return row[:n] @ states


def _fd_jacobian(problem, t, x, fx):
    d = x.size
    jac = np.empty((d, d))
    for j in range(d):
        eps = FD_STEP * (1.0 + abs(x[j]))
        shifted = x.copy()
        shifted[j] += eps
        jac[:, j] = (problem.evaluate(t, shifted) - fx) / eps
    return jac


def _newton_direction(matrix, r, omega0):
    """Newton step, or the scaled residual direction when the matrix is singular."""
    if sp.issparse(matrix):
        with np.errstate(all="ignore"):
            step = np.asarray(spsolve(matrix.tocsc(), -r), dtype=float).reshape(-1)
    else:
        try:
            step = np.linalg.solve(matrix, -r)
        except np.linalg.LinAlgError:
            step = None
        if step is not None and matrix.shape[0] == 1:
            scale = abs(omega0) + np.abs(matrix).max()
            if abs(matrix[0, 0]) <= np.finfo(float).eps * scale:
                step = None
    if step is None or not np.all(np.isfinite(step)):
        return -r / omega0, True
    return step, False


def newton_inner(problem, ctx, config):
    """
    Solve omega_0 x - h^alpha f(t_n, x) + history = 0 for x.

    Newton with the analytic Jacobian (finite differences otherwise); each
    step is halved up to 20 times until the residual decreases. A singular
    iteration matrix switches to the damped residual direction. With
    `Fallback.FIXED_POINT`, a stalled search continues with
    x <- (h^alpha f(t_n, x) - history) / omega_0.

    Args:
        problem (FOdeProblem): right-hand side.
        ctx (StepContext): time, known history, leading weight, h^alpha, guess.
        config (SolverConfig): tolerances and fallback.

    Returns:
        NewtonResult
    """
    d = problem.dimension
    eye = sp.identity(d, format="csc")
    eps = np.finfo(float).eps
    hist_norm = float(np.linalg.norm(ctx.history))

    def evaluate(x):
        fx = problem.evaluate(ctx.t, x)
        r = ctx.omega0 * x + ctx.history - ctx.h_alpha * fx
        tol = config.newton_rtol * max(
            1.0, float(np.linalg.norm(x)), hist_norm, ctx.h_alpha * float(np.linalg.norm(fx))
        )
        return fx, r, float(np.linalg.norm(r)), tol

    x = np.array(ctx.guess, dtype=float).reshape(d)
    fx, r, rnorm, tol = evaluate(x)
    result = NewtonResult(x=x, residual=rnorm, iterations=0, converged=False)
    fixed_point = False

    for it in range(1, config.newton_max_iter + 1):
        if rnorm <= tol:
            result.converged = True
            break
        result.iterations = it

        if fixed_point:
            x_new = (ctx.h_alpha * fx - ctx.history) / ctx.omega0
            result.fallback_steps += 1
            if not np.all(np.isfinite(x_new)):
                break
            stalled = np.linalg.norm(x_new - x) <= STAGNATION_ULPS * eps * max(1.0, np.linalg.norm(x))
            x = x_new
            fx, r, rnorm, tol = evaluate(x)
            if stalled:
                result.converged = rnorm <= tol
                break
            continue

        if problem.jacobian is not None:
            jac = problem.jacobian(ctx.t, x)
        else:
            jac = _fd_jacobian(problem, ctx.t, x, fx)
        if sp.issparse(jac):
            matrix = ctx.omega0 * eye - ctx.h_alpha * jac
        else:
            matrix = ctx.omega0 * np.eye(d) - ctx.h_alpha * np.asarray(jac, dtype=float).reshape(d, d)
        step, singular = _newton_direction(matrix, r, ctx.omega0)
        if singular:
            result.singular += 1
            result.fallback_steps += 1

        scale = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            x_new = x + scale * step
            fx_new, r_new, rnorm_new, tol_new = evaluate(x_new)
            if np.isfinite(rnorm_new) and (rnorm_new < rnorm or rnorm_new <= tol_new):
                accepted = True
                break
            scale *= 0.5
            result.damped_steps += 1

        if accepted:
            tiny = np.linalg.norm(scale * step) <= STAGNATION_ULPS * eps * max(1.0, np.linalg.norm(x))
            x, fx, r, rnorm, tol = x_new, fx_new, r_new, rnorm_new, tol_new
            if tiny and rnorm > tol:
                # converged to machine precision above the requested tolerance
                result.converged = True
                logging.debug(f"Newton stagnated at residual {rnorm:.3g} (tol {tol:.3g})")
                break
            continue

        if config.fallback is Fallback.FIXED_POINT:
            fixed_point = True
            continue
        tiny = np.linalg.norm(step) <= STAGNATION_ULPS * eps * max(1.0, np.linalg.norm(x))
        result.converged = bool(tiny)
        break
    else:
        result.converged = rnorm <= tol

    result.x = x
    result.residual = rnorm
    return result


def _empty_diagnostics():
    return {
        "newton_iterations": 0,
        "damped_steps": 0,
        "fallback_steps": 0,
        "singular_jacobians": 0,
    }


def _finish(states, residuals, last, status, scheme, alpha, h, grid_norm, diagnostics):
    return Trajectory(
        times=np.arange(last + 1) * h,
        states=states[: last + 1].copy(),
        residuals=residuals[: last + 1].copy(),
        status=status,
        scheme=scheme,
        alpha=alpha,
        h=h,
        grid_norm=grid_norm,
        diagnostics=diagnostics,
    )


def _initial_state(problem, x0):
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != problem.dimension:
        raise ValueError(f"❌ x0 has {x0.size} components, problem {problem.name} needs {problem.dimension}")
    return x0


def fbdf_solve(problem, scheme, alpha, config, x0):
    """
    Advance the implicit recursion row(n) . (x_0..x_n) = h^alpha f(t_n, x_n).

    Args:
        problem (FOdeProblem): system to integrate.
        scheme (SchemeKind | str): weight scheme.
        alpha (Alpha | float): fractional order.
        config (SolverConfig): step size, step count, Newton controls.
        x0 (sequence): initial state.

    Returns:
        Trajectory: states up to the last accepted step; status `overflow`
        or `newton_failure` records the step where the run stopped.
    """
    alpha = as_alpha(alpha)
    kind = SchemeKind(scheme)
    x0 = _initial_state(problem, x0)
    n_steps = config.n_steps
    weights = make_weights(kind, alpha, n_steps)
    h_alpha = config.h**alpha.value

    states = np.empty((n_steps + 1, problem.dimension))
    states[0] = x0
    residuals = np.zeros(n_steps + 1)
    diagnostics = _empty_diagnostics()
    status = SolveStatus(StatusKind.COMPLETED)
    last = n_steps

    for n in range(1, n_steps + 1):
        row = weights.row(n)
        ctx = StepContext(
            t=n * config.h,
            history=history_dot(row, states[:n]),
            omega0=float(row[n]),
            h_alpha=h_alpha,
            guess=states[n - 1],
        )
        result = newton_inner(problem, ctx, config)
        diagnostics["newton_iterations"] += result.iterations
        diagnostics["damped_steps"] += result.damped_steps
        diagnostics["fallback_steps"] += result.fallback_steps
        diagnostics["singular_jacobians"] += result.singular

        size = np.linalg.norm(result.x)
        if not np.isfinite(size) or size > config.overflow_threshold:
            status, last = SolveStatus(StatusKind.OVERFLOW, n), n - 1
            break
        if not result.converged:
            status, last = SolveStatus(StatusKind.NEWTON_FAILURE, n), n - 1
            logging.warning(
                f"⚠️ {kind.value} Newton failure at step {n} (residual {result.residual:.3g})"
            )
            break
        states[n] = result.x
        residuals[n] = result.residual

    return _finish(
        states, residuals, last, status, kind.value, alpha.value, config.h, problem.grid_norm, diagnostics
    )


def fabm_solve(problem, alpha, config, x0):
    """
    Explicit fractional Adams-Bashforth-Moulton method, one correction.

    Args:
        problem (FOdeProblem): system to integrate.
        alpha (Alpha | float): fractional order.
        config (SolverConfig): step size and count (Newton settings unused).
        x0 (sequence): initial state.

    Returns:
        Trajectory: blow-up is reported as status `overflow(step)`.
    """
    alpha = as_alpha(alpha)
    a = alpha.value
    x0 = _initial_state(problem, x0)
    n_steps, h = config.n_steps, config.h

    lags = np.arange(n_steps + 1, dtype=float)
    rect = (lags + 1.0) ** a - lags**a
    trap = (lags + 2.0) ** (a + 1.0) + lags ** (a + 1.0) - 2.0 * (lags + 1.0) ** (a + 1.0)
    rect_rev = rect[:n_steps][::-1].copy()
    trap_rev = trap[:n_steps][::-1].copy()
    pred_scale = h**a * rgamma(a + 1.0)
    corr_scale = h**a * rgamma(a + 2.0)

    states = np.empty((n_steps + 1, problem.dimension))
    fvals = np.empty_like(states)
    states[0] = x0
    fvals[0] = problem.evaluate(0.0, x0)
    status = SolveStatus(StatusKind.COMPLETED)
    last = n_steps

    for n in range(n_steps):
        t_next = (n + 1) * h
        predictor = x0 + pred_scale * (rect_rev[n_steps - 1 - n :] @ fvals[: n + 1])
        start = n ** (a + 1.0) - (n - a) * (n + 1.0) ** a
        with np.errstate(all="ignore"):
            f_pred = problem.evaluate(t_next, predictor)
            corrector = x0 + corr_scale * (
                start * fvals[0] + trap_rev[n_steps - n :] @ fvals[1 : n + 1] + f_pred
            )
            f_next = problem.evaluate(t_next, corrector)
        size = np.linalg.norm(corrector)
        if not np.isfinite(size) or size > config.overflow_threshold or not np.all(np.isfinite(f_next)):
            status, last = SolveStatus(StatusKind.OVERFLOW, n + 1), n
            break
        states[n + 1] = corrector
        fvals[n + 1] = f_next

    return _finish(
        states,
        np.zeros(n_steps + 1),
        last,
        status,
        "fabm",
        a,
        h,
        problem.grid_norm,
        {},
    )


@dataclass(frozen=True)
class BlowupThreshold:
    """Largest step found stable and smallest found to blow up (None when
    the search range was exhausted), with every (h, blew_up) trial."""

    stable_h: Optional[float]
    blowup_h: Optional[float]
    trials: tuple


def fabm_blowup_threshold(
    problem,
    alpha,
    horizon,
    x0,
    h_start=0.2,
    h_min=1e-6,
    h_max=10.0,
    bisections=20,
    max_steps=50_000,
):
    """
    Locate the F-ABM blow-up step size by geometric bracketing and bisection.

    Args:
        problem (FOdeProblem): system to integrate.
        alpha (float): fractional order.
        horizon (float): final time of every trial run.
        x0 (sequence): initial state.
        h_start (float): first trial step.
        h_min, h_max (float): bracketing limits.
        bisections (int): geometric bisection steps once bracketed.
        max_steps (int): trials needing more steps stop the search.

    Returns:
        BlowupThreshold
    """
    trials = []

    def blows_up(h):
        n = max(1, int(round(horizon / h)))
        if n > max_steps:
            return None
        traj = fabm_solve(problem, alpha, SolverConfig(h=h, n_steps=n), x0)
        outcome = traj.status.kind is StatusKind.OVERFLOW
        trials.append((float(h), bool(outcome)))
        return outcome

    h = float(h_start)
    first = blows_up(h)
    if first is None:
        raise ValueError(f"❌ h_start={h_start} needs more than {max_steps} steps")
    if first:
        hi, lo = h, h / 2.0
        while True:
            outcome = blows_up(lo)
            if outcome is None or lo < h_min:
                logging.warning(f"⚠️ no stable F-ABM step found down to h={lo:.3g}")
                return BlowupThreshold(None, hi, tuple(trials))
            if not outcome:
                break
            hi, lo = lo, lo / 2.0
    else:
        lo, hi = h, 2.0 * h
        while not blows_up(hi):
            lo, hi = hi, 2.0 * hi
            if hi > h_max:
                return BlowupThreshold(lo, None, tuple(trials))

    for _ in range(bisections):
        mid = float(np.sqrt(lo * hi))
        outcome = blows_up(mid)
        if outcome is None:
            break
        if outcome:
            hi = mid
        else:
            lo = mid
    return BlowupThreshold(lo, hi, tuple(trials))


def solve(problem, scheme, alpha, config, x0):
    """Run `fabm_solve` for scheme "fabm", `fbdf_solve` otherwise."""
    if str(getattr(scheme, "value", scheme)) == "fabm":
        return fabm_solve(problem, alpha, config, x0)
    return fbdf_solve(problem, scheme, alpha, config, x0)
