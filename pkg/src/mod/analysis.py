# src/mod/analysis.py

"""
Long-time diagnostics computed from trajectories and weight tables.

### Functions:
- `stability_ratios`: contraction ratios and constants of a scheme at (h, lambda, b).
- `decay_report`: log-ratio index of a decaying sequence.
- `contractivity_index`: p_alpha(t) from two trajectories.
- `dissipativity_index`: q_alpha(t) from one trajectory.
- `layer_reference_norm`: |x(t_ref)| resolved with a fine step.
- `absorbing_entry`: first entry into a ball and whether the orbit stays.
- `nonnegativity_check` / `ordering_check`: sign and order preservation.
- `max_gap_ratio`: running maximum of |x_n - y_n| relative to |x_0 - y_0|.
"""

from dataclasses import dataclass, fields
from enum import Enum
from typing import Optional

import numpy as np

from mod.solver import SolverConfig, solve, state_norms
from mod.weights import SchemeKind, as_alpha, make_weights, positive_weight_mass

# lag rows of the high-order schemes are read at this step; the positive
# weights sit at lags 2 and 3 and do not change past n = 4
REFERENCE_STEP = 64
SIGN_TOL = 1e-12
LAYER_STEP = 1e-4


class DegenerateDecayError(ValueError):
    """The normalizing distance or norm vanishes, so no index exists."""


class DecayKind(str, Enum):
    CONTRACTIVITY = "contractivity"
    DISSIPATIVITY = "dissipativity"


@dataclass(frozen=True)
class StabilityRatios:
    """
    Contraction ratios of a scheme at one step size.

    rho1 = S / (w0 - 2 lambda h^alpha) and rho2 = S / (w0 + 2 b h^alpha) with
    S = sum_{j>=1} |w_j|. High-order schemes with P = total positive lag>=1
    weight also report rho3 = (w0 + 2P) / (w0 - 2P - 2 h^alpha lambda) and
    rho4 = (w0 + 2P) / (w0 - 2P + 2 h^alpha b). The constants c1..c3 carry
    an unknown factor c_alpha, normalized to 1.
    """

    scheme: str
    alpha: float
    h: float
    lam: float
    b: float
    leading: float
    positive_mass: float
    rho1: float
    rho2: float
    c1: float
    c2: float
    c3: float
    feasible: bool
    rho3: Optional[float] = None
    rho4: Optional[float] = None

    def as_lines(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float):
                value = f"{value:.17g}"
            lines.append(f"{f.name}={value}")
        return lines


def _ratio(num, den):
    return num / den if den > 0 else float("inf")


def _constant(rho, den):
    if not rho < 1 or not den > 0:
        return float("inf")
    return 1.0 / ((1.0 - rho) * den)


def stability_ratios(scheme, alpha, h, lam, b, step=REFERENCE_STEP):
    """
    Evaluate the contraction ratios and the step-size conditions.

    Args:
        scheme (SchemeKind | str): weight scheme.
        alpha (Alpha | float): fractional order.
        h (float): step size.
        lam (float): one-sided Lipschitz constant (<= 0 for contractivity).
        b (float): dissipativity rate (> 0).
        step (int): row read for the positive weights of high-order schemes.

    Returns:
        StabilityRatios: `feasible` requires h^alpha lambda < -2P and
        h^alpha b > 2P (P = 0 for G-L and L1).
    """
    kind = SchemeKind(scheme)
    alpha = as_alpha(alpha)
    if not h > 0:
        raise ValueError(f"❌ step size must be positive, got {h}")
    step = max(int(step), 4)
    lag_row = make_weights(kind, alpha, step).lag_row(step)
    w0 = float(lag_row[0])
    mass = positive_weight_mass(lag_row) if kind.high_order else 0.0
    ha = h**alpha.value

    spread = w0 + 2.0 * mass
    den1 = w0 - 2.0 * lam * ha
    den2 = w0 + 2.0 * b * ha
    rho1, rho2 = _ratio(spread, den1), _ratio(spread, den2)
    rho3 = rho4 = None
    if kind.high_order:
        den3 = w0 - 2.0 * mass - 2.0 * ha * lam
        den4 = w0 - 2.0 * mass + 2.0 * ha * b
        rho3, rho4 = _ratio(spread, den3), _ratio(spread, den4)
        c1 = _constant(rho3, den3)
        c2 = _constant(rho4, 1.0)
        c3 = c2 / den4 if den4 > 0 else float("inf")
    else:
        c1 = _constant(rho1, den1)
        c2 = _constant(rho2, 1.0)
        c3 = c2 / den2 if den2 > 0 else float("inf")

    # strict: at ha * lam = -2P the ratio rho3 equals 1
    feasible = ha * lam < -2.0 * mass and ha * b > 2.0 * mass
    return StabilityRatios(
        scheme=kind.value,
        alpha=alpha.value,
        h=float(h),
        lam=float(lam),
        b=float(b),
        leading=w0,
        positive_mass=mass,
        rho1=rho1,
        rho2=rho2,
        c1=c1,
        c2=c2,
        c3=c3,
        feasible=bool(feasible),
        rho3=rho3,
        rho4=rho4,
    )


@dataclass(frozen=True, eq=False)
class DecayReport:
    """e(t_n) with its log-ratio index; the index is NaN for t <= max(1, t_ref)."""

    times: np.ndarray
    e: np.ndarray
    index: np.ndarray
    kind: DecayKind
    t_ref: float = 1.0

    def at(self, t):
        """Index at the grid time closest to t."""
        valid = np.flatnonzero(~np.isnan(self.index))
        if valid.size == 0:
            raise ValueError("❌ report holds no index values")
        n = valid[np.argmin(np.abs(self.times[valid] - t))]
        return float(self.index[n])


def decay_report(times, e, kind, normalize_at=1.0, e_ref=None):
    """
    Index (ln e(t_ref) - ln e(t)) / ln t of a nonnegative sequence.

    Args:
        times (sequence): grid times.
        e (sequence): distances or norms, same length.
        kind (DecayKind | str): contractivity or dissipativity.
        normalize_at (float): reference time, taken at the closest grid point.
        e_ref (float, optional): value at t_ref from a finer run; replaces
            e(t_ref) of this grid when the grid does not resolve [0, t_ref].

    Returns:
        DecayReport
    """
    times = np.asarray(times, dtype=float)
    e = np.asarray(e, dtype=float)
    if times.shape != e.shape:
        raise ValueError(f"❌ times {times.shape} and values {e.shape} differ in shape")
    if np.any(e < 0):
        raise ValueError("❌ decay values must be nonnegative")
    ref = int(np.argmin(np.abs(times - normalize_at)))
    e_ref = e[ref] if e_ref is None else float(e_ref)
    if not e_ref > 0 or not np.isfinite(e_ref):
        raise DegenerateDecayError(f"❌ e({times[ref]:g}) = {e_ref} cannot normalize the index")
    index = np.full(times.shape, np.nan)
    mask = (times > 1.0) & (np.arange(times.size) > ref)
    with np.errstate(divide="ignore"):
        index[mask] = (np.log(e_ref) - np.log(e[mask])) / np.log(times[mask])
    return DecayReport(times=times, e=e, index=index, kind=DecayKind(kind), t_ref=float(times[ref]))


def _check_pair(traj_x, traj_y):
    if traj_x.states.shape != traj_y.states.shape:
        raise ValueError(
            f"❌ trajectories differ in shape: {traj_x.states.shape} vs {traj_y.states.shape}"
        )
    if not np.array_equal(traj_x.times, traj_y.times):
        raise ValueError("❌ trajectories must share their time grid")


def contractivity_index(traj_x, traj_y, normalize_at=1.0):
    """
    p_alpha(t) = (ln e(t_ref) - ln e(t)) / ln t with e(t_n) = |x_n - y_n|.

    Grid problems measure e in the averaged discrete l2 norm.
    """
    _check_pair(traj_x, traj_y)
    e = state_norms(traj_x.states - traj_y.states, traj_x.grid_norm)
    return decay_report(traj_x.times, e, DecayKind.CONTRACTIVITY, normalize_at)


def dissipativity_index(traj, normalize_at=1.0, reference_norm=None):
    """q_alpha(t) = (ln |x(t_ref)| - ln |x(t)|) / ln t.

    `reference_norm` replaces |x(t_ref)| with a value resolved on a finer
    grid, see `layer_reference_norm`."""
    return decay_report(traj.times, traj.norms(), DecayKind.DISSIPATIVITY, normalize_at, reference_norm)


def layer_reference_norm(problem, scheme, alpha, x0, t_ref=1.0, h=LAYER_STEP):
    """
    |x(t_ref)| from a fine-step run of the same scheme.

    Stiff problems with an initial layer (the coupled system from (-6, 1))
    are not resolved on [0, 1] by the long-run step h = 0.5: the first
    implicit step has several roots and the norm at t = 1 depends on which
    one Newton reaches. The fine run fixes the normalization only; the
    long-run trajectory is unchanged.

    Returns:
        float: the norm at the last fine step.

    Raises:
        DegenerateDecayError: when the fine run does not complete.
    """
    config = SolverConfig.for_horizon(h, t_ref)
    traj = solve(problem, scheme, alpha, config, x0)
    if not traj.completed:
        raise DegenerateDecayError(f"❌ fine run to t={t_ref:g} stopped: {traj.status}")
    return float(traj.norms()[-1])


@dataclass(frozen=True)
class AbsorbingEntry:
    entry_step: Optional[int]
    stays_inside: bool
    settled_step: Optional[int] = None


def absorbing_entry(traj, radius):
    """
    First step with |x_n| <= radius, whether the orbit stays inside from
    there on, and the step after which it never leaves.
    """
    if not radius > 0:
        raise ValueError(f"❌ radius must be positive, got {radius}")
    inside = traj.norms() <= radius
    if not np.any(inside):
        return AbsorbingEntry(None, False, None)
    entry = int(np.argmax(inside))
    outside = np.flatnonzero(~inside)
    settled = entry if outside.size == 0 or outside[-1] < entry else int(outside[-1]) + 1
    if settled >= inside.size:
        settled = None
    return AbsorbingEntry(entry, bool(np.all(inside[entry:])), settled)


@dataclass(frozen=True)
class SignCheck:
    passed: bool
    first_violation: Optional[int] = None


def _scalar_states(traj):
    if traj.dimension != 1:
        raise ValueError(f"❌ expected a scalar trajectory, got dimension {traj.dimension}")
    return traj.states[:, 0]


def nonnegativity_check(traj, tol=SIGN_TOL):
    """Every x_n >= -tol."""
    x = _scalar_states(traj)
    bad = np.flatnonzero(x < -tol)
    return SignCheck(True) if bad.size == 0 else SignCheck(False, int(bad[0]))


def ordering_check(traj_x, traj_y, tol=SIGN_TOL):
    """A scalar pair ordered at n = 0 keeps its order at every step."""
    _check_pair(traj_x, traj_y)
    x, y = _scalar_states(traj_x), _scalar_states(traj_y)
    if x[0] < y[0]:
        x, y = y, x
    bad = np.flatnonzero(x - y < -tol * np.maximum(1.0, np.abs(y)))
    return SignCheck(True) if bad.size == 0 else SignCheck(False, int(bad[0]))


def max_gap_ratio(traj_x, traj_y):
    """max_n |x_n - y_n| / |x_0 - y_0|."""
    _check_pair(traj_x, traj_y)
    e = state_norms(traj_x.states - traj_y.states, traj_x.grid_norm)
    if not e[0] > 0:
        raise DegenerateDecayError("❌ identical initial values give no contraction ratio")
    return float(np.max(e) / e[0])
