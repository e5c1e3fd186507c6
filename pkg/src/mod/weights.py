# src/mod/weights.py

"""
Convolution weights of the fractional backward differentiation formulas.

Every scheme advances a Caputo system through a step-n row

    row_0 x_0 + row_1 x_1 + ... + row_n x_n = h^alpha f(t_n, x_n),

where `row_n` is the leading weight and `row_0` the starting weight that
makes the row sum to zero. Grünwald-Letnikov, L1 and BDF2 rows are pure
convolutions plus that starting weight; the quadratic interpolation scheme
(QIA) builds a fresh row at every step.

### Functions:
- `gl_weights`: Grünwald-Letnikov weights and starting weights.
- `l1_weights`: L1 weights, starting weights hold the x_0 row coefficient.
- `bdf2_weights`: second-order weights generated by (3/2 - 2z + z^2/2)^alpha.
- `qia_weights`: step-n row of the quadratic interpolation scheme.
- `make_weights`: table for any `SchemeKind`.
- `verify_assumption_a`: sign and partial-sum structure of a weight sequence.
- `decay_exponent`: fitted power-law decay rate of a sequence.
- `discrete_leibniz_gap`: slack of the discrete energy inequality for one row.
- `positive_weight_mass`: sum of the positive lag>=1 weights of a row.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import rgamma

from utils.config import get_settings

# 3^-64 is below 1e-30, far under the weights it multiplies
BDF2_TRUNCATION = 64
QIA_MIN_STEP = 4
PARTIAL_SUM_TOL = 1e-14


class CapacityError(ValueError):
    """A weight table larger than the configured step budget was requested."""


@dataclass(frozen=True)
class Alpha:
    """Fractional order, strictly between 0 and 1."""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if not np.isfinite(value) or not 0.0 < value < 1.0:
            raise ValueError(f"❌ alpha must satisfy 0 < alpha < 1, got {self.value}")
        object.__setattr__(self, "value", value)

    def __float__(self):
        return self.value


def as_alpha(alpha):
    """Accept an `Alpha` or a plain number."""
    return alpha if isinstance(alpha, Alpha) else Alpha(alpha)


class SchemeKind(str, Enum):
    GL = "gl"
    L1 = "l1"
    BDF2 = "bdf2"
    QIA = "qia"

    @property
    def row_dependent(self):
        """True when the step-n row is not a pure convolution."""
        return self is SchemeKind.QIA

    @property
    def high_order(self):
        return self in (SchemeKind.BDF2, SchemeKind.QIA)


@dataclass(frozen=True, eq=False)
class SchemeWeights:
    """
    Precomputed weights for up to `capacity` steps.

    `conv[j]` is the lag-j convolution weight and `starting[n]` the
    coefficient on x_0 in the step-n row (`starting[0]` is unused). QIA
    tables also keep the L1 increments and the quadratic corrections their
    rows are assembled from.
    """

    kind: SchemeKind
    alpha: Alpha
    conv: np.ndarray
    starting: np.ndarray
    capacity: int
    increments: Optional[np.ndarray] = None
    corrections: Optional[np.ndarray] = None

    @property
    def leading(self):
        return float(self.conv[0])

    def row(self, n):
        """
        Step-n row indexed by state: entry j multiplies x_j, entry n is the
        leading weight.

        Args:
            n (int): step index, 1 <= n <= capacity.

        Returns:
            np.ndarray: n + 1 coefficients summing to zero.
        """
        if not 1 <= n <= self.capacity:
            raise ValueError(f"❌ step {n} outside 1..{self.capacity}")
        if self.kind is SchemeKind.QIA and n >= QIA_MIN_STEP:
            return _qia_lag_row(self.increments, self.corrections, n)[::-1].copy()
        row = np.empty(n + 1)
        row[0] = self.starting[n]
        row[1:] = self.conv[n - 1 :: -1]
        return row

    def lag_row(self, n):
        """Step-n row indexed by lag: entry m multiplies x_{n-m}."""
        return self.row(n)[::-1].copy()


@dataclass(frozen=True)
class PropertyCheck:
    passed: bool
    first_violation: Optional[int] = None


@dataclass(frozen=True)
class PropertyReport:
    """Outcome of the three sign/sum conditions on a weight sequence."""

    positive_leading: PropertyCheck
    nonpositive_tail: PropertyCheck
    nonnegative_partial_sums: PropertyCheck

    @property
    def passed(self):
        return (
            self.positive_leading.passed
            and self.nonpositive_tail.passed
            and self.nonnegative_partial_sums.passed
        )


def _check_capacity(n_max, budget=None):
    budget = get_settings().max_steps if budget is None else budget
    if n_max > budget:
        raise CapacityError(
            f"❌ {n_max} steps exceed the weight budget of {budget} (set FBDF_MAX_STEPS)"
        )


def _power_increments(m, p):
    """(m+1)^p - m^p without cancellation for large m."""
    m = np.asarray(m, dtype=float)
    out = np.ones_like(m)
    pos = m > 0
    mp = m[pos]
    out[pos] = mp**p * np.expm1(p * np.log1p(1.0 / mp))
    return out


def _gl_tables(alpha, n_max):
    k = np.arange(1, n_max + 1, dtype=float)
    conv = np.empty(n_max + 1)
    conv[0] = 1.0
    conv[1:] = np.cumprod((k - 1.0 - alpha) / k)
    # partial sums of the G-L weights are the weights of order alpha - 1
    partial = np.empty(n_max + 1)
    partial[0] = 1.0
    partial[1:] = np.cumprod(1.0 - alpha / k)
    return conv, partial


def _starting_from_partial(partial):
    starting = np.zeros(len(partial))
    starting[1:] = -partial[:-1]
    return starting


def _l1_tables(alpha, n_max):
    m = np.arange(n_max + 1, dtype=float)
    increments = _power_increments(m, 1.0 - alpha) * rgamma(2.0 - alpha)
    conv = np.empty(n_max + 1)
    conv[0] = increments[0]
    conv[1:] = np.diff(increments)
    starting = np.zeros(n_max + 1)
    starting[1:] = -increments[:-1]
    return conv, starting, increments


def _qia_corrections(alpha, increments):
    m = np.arange(len(increments), dtype=float)
    return (m + 0.5) * increments - (1.0 - alpha) * _power_increments(
        m, 2.0 - alpha
    ) * rgamma(3.0 - alpha)


def _qia_lag_row(increments, corrections, n):
    # L1 part: a_m differences; correction: second difference of the
    # quadratic-term integrals, the last two intervals share one stencil
    a = increments
    mu = np.empty(n + 1)
    mu[0] = a[0]
    mu[1:n] = a[1:n] - a[: n - 1]
    mu[n] = -a[n - 1]

    e = np.zeros(n + 3)  # e[k + 1] holds E_k for k = -1..n+1
    e[2] = corrections[0] + corrections[1]
    e[3 : n + 1] = corrections[2:n]
    mu += e[2 : n + 3] - 2.0 * e[1 : n + 2] + e[0 : n + 1]
    return mu


def gl_weights(alpha, n_max, budget=None):
    """
    Grünwald-Letnikov weights omega_k = (-1)^k binom(alpha, k).

    Args:
        alpha (Alpha | float): fractional order.
        n_max (int): number of steps the table must cover, >= 1.
        budget (int, optional): step budget; defaults to `FBDF_MAX_STEPS`.

    Returns:
        SchemeWeights: conv[k] = omega_k, starting[n] = -sum_{j<n} omega_j.
    """
    alpha = as_alpha(alpha)
    if n_max < 1:
        raise ValueError(f"❌ gl_weights needs n_max >= 1, got {n_max}")
    _check_capacity(n_max, budget)
    conv, partial = _gl_tables(alpha.value, n_max)
    return SchemeWeights(
        kind=SchemeKind.GL,
        alpha=alpha,
        conv=conv,
        starting=_starting_from_partial(partial),
        capacity=n_max,
    )


def l1_weights(alpha, n_max, budget=None):
    """
    L1 weights gamma_k; the x_0 coefficient of row n is stored in starting[n].

    Args:
        alpha (Alpha | float): fractional order.
        n_max (int): number of steps, >= 2.
        budget (int, optional): step budget.

    Returns:
        SchemeWeights
    """
    alpha = as_alpha(alpha)
    if n_max < 2:
        raise ValueError(f"❌ l1_weights needs n_max >= 2, got {n_max}")
    _check_capacity(n_max, budget)
    conv, starting, _ = _l1_tables(alpha.value, n_max)
    return SchemeWeights(
        kind=SchemeKind.L1,
        alpha=alpha,
        conv=conv,
        starting=starting,
        capacity=n_max,
    )


def bdf2_weights(alpha, n_max, budget=None):
    """
    Second-order weights mu_j = (3/2)^alpha sum_l 3^-l omega_l omega_{j-l}.

    Both the weights and their partial sums are obtained by convolving with
    the geometrically damped G-L sequence, so the starting weights carry no
    cancellation from long cumulative sums.

    Args:
        alpha (Alpha | float): fractional order.
        n_max (int): number of steps, >= 4.
        budget (int, optional): step budget.

    Returns:
        SchemeWeights
    """
    alpha = as_alpha(alpha)
    if n_max < 4:
        raise ValueError(f"❌ bdf2_weights needs n_max >= 4, got {n_max}")
    _check_capacity(n_max, budget)
    gl, gl_partial = _gl_tables(alpha.value, n_max)
    cut = min(BDF2_TRUNCATION, n_max + 1)
    damped = gl[:cut] * 3.0 ** -np.arange(cut)
    scale = 1.5**alpha.value
    conv = scale * np.convolve(gl, damped)[: n_max + 1]
    partial = scale * np.convolve(gl_partial, damped)[: n_max + 1]
    return SchemeWeights(
        kind=SchemeKind.BDF2,
        alpha=alpha,
        conv=conv,
        starting=_starting_from_partial(partial),
        capacity=n_max,
    )


def _qia_table(alpha, n_max, budget=None):
    if n_max < 1:
        raise ValueError(f"❌ qia weights need n_max >= 1, got {n_max}")
    _check_capacity(n_max, budget)
    size = max(n_max, 2)
    conv, starting, increments = _l1_tables(alpha.value, size)
    return SchemeWeights(
        kind=SchemeKind.QIA,
        alpha=alpha,
        conv=conv,
        starting=starting,
        capacity=n_max,
        increments=increments,
        corrections=_qia_corrections(alpha.value, increments),
    )


def qia_weights(alpha, n):
    """
    Step-n row of the quadratic interpolation scheme, indexed by lag.

    The Caputo integral is approximated with piecewise quadratics: interval
    [t_{k-1}, t_k] uses the stencil (t_{k-1}, t_k, t_{k+1}) and the last two
    intervals share the stencil (t_{n-2}, t_{n-1}, t_n). Rows with n < 4 are
    the L1 rows.

    Args:
        alpha (Alpha | float): fractional order.
        n (int): step index, >= 1.

    Returns:
        np.ndarray: mu[m] multiplies x_{n-m}, m = 0..n.
    """
    alpha = as_alpha(alpha)
    if n < 1:
        raise ValueError(f"❌ qia_weights needs n >= 1, got {n}")
    return _qia_table(alpha, n).lag_row(n)


def make_weights(kind, alpha, n_max, budget=None):
    """
    Build the weight table of any scheme.

    Args:
        kind (SchemeKind | str): scheme tag.
        alpha (Alpha | float): fractional order.
        n_max (int): number of steps.
        budget (int, optional): step budget.

    Returns:
        SchemeWeights
    """
    kind = SchemeKind(kind)
    alpha = as_alpha(alpha)
    if kind is SchemeKind.GL:
        return gl_weights(alpha, n_max, budget)
    if kind is SchemeKind.L1:
        return l1_weights(alpha, max(n_max, 2), budget)
    if kind is SchemeKind.BDF2:
        return bdf2_weights(alpha, max(n_max, 4), budget)
    return _qia_table(alpha, n_max, budget)


def verify_assumption_a(weights, tol=PARTIAL_SUM_TOL):
    """
    Check (i) a positive leading weight, (ii) nonpositive weights at every
    lag >= 1 and (iii) nonnegative partial sums.

    Args:
        weights (SchemeWeights | sequence): a table (its convolution part; the
            lag row at capacity for QIA) or a raw lag-indexed sequence.
        tol (float): slack on the partial sums, relative to the leading weight.

    Returns:
        PropertyReport: per-condition status with the first violating index.
    """
    if isinstance(weights, SchemeWeights):
        if weights.kind.row_dependent:
            seq = weights.lag_row(weights.capacity)
        else:
            seq = weights.conv[: weights.capacity + 1]
    else:
        seq = np.asarray(weights, dtype=float)
    if seq.size == 0:
        raise ValueError("❌ empty weight sequence")

    leading = PropertyCheck(True) if seq[0] > 0 else PropertyCheck(False, 0)

    positive = np.flatnonzero(seq[1:] > 0)
    tail = PropertyCheck(True) if positive.size == 0 else PropertyCheck(False, int(positive[0]) + 1)

    partial = np.cumsum(seq)
    negative = np.flatnonzero(partial < -tol * abs(seq[0]))
    sums = PropertyCheck(True) if negative.size == 0 else PropertyCheck(False, int(negative[0]))

    return PropertyReport(leading, tail, sums)


def decay_exponent(seq, window):
    """
    Fit |seq_n| ~ C n^-p over an index window.

    Args:
        seq (sequence): values indexed by n.
        window (tuple[int, int]): first and last index, both included.

    Returns:
        float: the fitted exponent p.
    """
    lo, hi = int(window[0]), int(window[1])
    if lo < 1:
        raise ValueError(f"❌ window must start at n >= 1, got {lo}")
    if hi - lo + 1 < 10:
        raise ValueError(f"❌ window needs at least 10 points, got {hi - lo + 1}")
    seq = np.asarray(seq, dtype=float)
    if hi >= seq.size:
        raise ValueError(f"❌ window end {hi} beyond sequence length {seq.size}")
    values = np.abs(seq[lo : hi + 1])
    if np.any(values == 0.0):
        zero = lo + int(np.flatnonzero(values == 0.0)[0])
        raise ValueError(f"❌ zero entry at n={zero} inside the fit window")
    n = np.arange(lo, hi + 1, dtype=float)
    slope = np.polyfit(np.log(n), np.log(values), 1)[0]
    return float(-slope)


def discrete_leibniz_gap(row, history):
    """
    Slack of sum_j row_j |x_j|^2 <= <2 x_n, sum_j row_j x_j>.

    Args:
        row (sequence): state-indexed step-n row (leading weight last).
        history (array): states x_0..x_n, shape (n+1,) or (n+1, d).

    Returns:
        float: right side minus left side (>= 0 when the inequality holds).
    """
    row = np.asarray(row, dtype=float)
    hist = np.asarray(history, dtype=float).reshape(row.size, -1)
    combined = row @ hist
    rhs = 2.0 * float(hist[-1] @ combined)
    lhs = float(row @ np.sum(hist * hist, axis=1))
    return rhs - lhs


def positive_weight_mass(lag_row):
    """Sum of the positive weights at lags >= 1."""
    tail = np.asarray(lag_row, dtype=float)[1:]
    return float(np.sum(tail[tail > 0.0]))
