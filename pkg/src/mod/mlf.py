# src/mod/mlf.py

"""
Mittag-Leffler functions E_{alpha,beta}(z) on the real line.

Branches:
- power series, summed in extended precision with a working precision chosen
  from the size of the largest term (used for |z| <= 5, for positive z and,
  when it needs a bounded number of terms, on the gap -10 < z < -5);
- the algebraic asymptotic expansion -sum_k z^-k / Gamma(beta - k alpha) for
  z <= -10 and alpha < 1;
- the spectral integral representation on the negative axis for beta = 1 or
  beta = alpha, used when the series would need too many terms (small alpha).

### Functions:
- `ml`: E_{alpha,beta}(z) with an error estimate and convergence flag.
- `ml_decay_reference`: E_alpha(lambda t^alpha) on a time grid.
- `contraction_reference_bound`: continuous contraction bounds.
- `dissipativity_reference_bound`: continuous dissipativity bound.
"""

import logging
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, rgamma

SERIES_RADIUS = 5.0
ASYMPTOTIC_START = -10.0
ASYMPTOTIC_TERMS = 10
TOLERANCE = 1e-10
SERIES_MAX_TERMS = 3000
SERIES_STOP_DIGITS = 20
# exp(700) is close to the double overflow limit
OVERFLOW_EXPONENT = 700.0


class MittagLefflerError(ValueError):
    """A reference value could not be evaluated to tolerance."""


@dataclass(frozen=True)
class MlParams:
    alpha: float
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0 or not self.beta > 0:
            raise ValueError(
                f"❌ Mittag-Leffler parameters must be positive, got alpha={self.alpha}, beta={self.beta}"
            )


@dataclass(frozen=True)
class MlResult:
    value: float
    error: float
    method: str
    converged: bool

    def __float__(self):
        return self.value


def _accepted(value, error):
    return np.isfinite(value) and error <= TOLERANCE * max(1.0, abs(value))


def _series_plan(params, z):
    """Peak term index, peak log-magnitude and whether the tail is reachable."""
    k = np.arange(SERIES_MAX_TERMS + 1, dtype=float)
    logs = k * math.log(abs(z)) - gammaln(params.alpha * k + params.beta)
    peak = int(np.argmax(logs))
    # the value can be as small as exp(-|z|), so the tail must go well below it
    floor = -60.0 - abs(z)
    feasible = bool(logs[-1] < floor) and bool(np.all(np.diff(logs[peak:]) < 0))
    return peak, float(logs[peak]), feasible


def _series(params, z, max_terms=SERIES_MAX_TERMS):
    peak, peak_log, feasible = _series_plan(params, z)
    digits = max(0.0, peak_log / math.log(10.0))
    dps = 20 + int(math.ceil(2.0 * digits))
    with mpmath.workdps(dps):
        zz = mpmath.mpf(z)
        a = mpmath.mpf(params.alpha)
        b = mpmath.mpf(params.beta)
        stop = mpmath.mpf(10) ** (-SERIES_STOP_DIGITS)
        power = mpmath.mpf(1)
        total = mpmath.mpf(0)
        term = mpmath.mpf(0)
        converged = False
        for k in range(max_terms + 1):
            term = power * mpmath.rgamma(a * k + b)
            total += term
            if k > peak and abs(term) <= stop * abs(total):
                converged = True
                break
            power *= zz
        value = float(total)
        error = float(abs(term)) + abs(value) * 1e-16
    return MlResult(value, error, "series", converged and feasible and _accepted(value, error))


def _asymptotic(params, z, terms=ASYMPTOTIC_TERMS):
    k = np.arange(1, terms + 2, dtype=float)
    series = -(z ** (-k)) * rgamma(params.beta - params.alpha * k)
    value = float(np.sum(series[:-1]))
    error = float(abs(series[-1]))
    return MlResult(value, error, "asymptotic", _accepted(value, error))


def _integral(params, z):
    """Spectral representation of E_alpha(-x) and E_{alpha,alpha}(-x), x > 0."""
    alpha, beta = params.alpha, params.beta
    if not (z < 0 and alpha < 1 and (beta == 1.0 or beta == alpha)):
        return MlResult(float("nan"), float("inf"), "integral", False)
    x = -z
    t = x ** (1.0 / alpha)
    cos_term = math.cos(alpha * math.pi)
    power = 1.0 if beta == 1.0 else 2.0

    def weighted(s):
        u = (s / t) ** alpha
        den = 1.0 + 2.0 * cos_term * u + u * u
        return (s if beta == alpha else 1.0) * math.exp(-s) / (x**power * den)

    head, head_err = quad(weighted, 0.0, 1.0, weight="alg", wvar=(alpha - 1.0, 0.0), limit=200)
    tail, tail_err = quad(lambda s: s ** (alpha - 1.0) * weighted(s), 1.0, np.inf, limit=200)
    scale = math.sin(alpha * math.pi) / math.pi
    value = scale * (head + tail)
    error = scale * (head_err + tail_err)
    return MlResult(value, error, "integral", _accepted(value, error))


def ml(params, z, method="auto"):
    """
    Evaluate E_{alpha,beta}(z) for real z.

    Args:
        params (MlParams): alpha and beta.
        z (float): argument.
        method (str): "auto", or force one of "series", "asymptotic",
            "integral" (used to compare branches).

    Returns:
        MlResult: value, error estimate, branch used and convergence flag
        (tolerance 1e-10, relative for values above one).
    """
    z = float(z)
    if not np.isfinite(z):
        raise ValueError(f"❌ Mittag-Leffler argument must be finite, got {z}")
    if z > 0 and z ** (1.0 / params.alpha) > OVERFLOW_EXPONENT:
        raise ValueError(f"❌ E_{params.alpha},{params.beta}({z}) overflows double precision")
    if z == 0.0:
        return MlResult(float(rgamma(params.beta)), 0.0, "series", True)
    if method == "series":
        return _series(params, z)
    if method == "asymptotic":
        return _asymptotic(params, z)
    if method == "integral":
        return _integral(params, z)
    if method != "auto":
        raise ValueError(f"❌ unknown Mittag-Leffler method {method!r}")

    negative_algebraic = z < 0 and params.alpha < 1
    attempts = []
    if not negative_algebraic or abs(z) <= SERIES_RADIUS:
        if _series_plan(params, z)[2]:
            result = _series(params, z)
            if result.converged:
                return result
            attempts.append(result)
    if negative_algebraic and z <= ASYMPTOTIC_START:
        result = _asymptotic(params, z)
        if result.converged:
            return result
        attempts.append(result)
    if negative_algebraic:
        if abs(z) > SERIES_RADIUS and _series_plan(params, z)[2]:
            result = _series(params, z)
            if result.converged:
                return result
            attempts.append(result)
        result = _integral(params, z)
        if result.converged:
            return result
        attempts.append(result)
    if not attempts:
        attempts.append(_series(params, z))
    best = min(attempts, key=lambda r: r.error if np.isfinite(r.value) else np.inf)
    logging.warning(
        f"⚠️ E_{params.alpha},{params.beta}({z}) did not reach tolerance "
        f"(best {best.method}, error {best.error:.3g})"
    )
    return best


def ml_decay_reference(alpha, lam, t_grid):
    """
    E_alpha(lambda t^alpha) on a positive increasing grid.

    Args:
        alpha (float): fractional order in (0, 1).
        lam (float): negative rate.
        t_grid (sequence): strictly increasing positive times.

    Returns:
        np.ndarray: reference values.
    """
    if not lam < 0:
        raise ValueError(f"❌ lambda must be negative, got {lam}")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("❌ t_grid must be positive and strictly increasing")
    params = MlParams(alpha, 1.0)
    out = np.empty_like(t)
    for i, ti in enumerate(t):
        result = ml(params, lam * ti**alpha)
        if not result.converged:
            raise MittagLefflerError(
                f"❌ E_{alpha}({lam * ti ** alpha}) failed to converge (error {result.error:.3g})"
            )
        out[i] = result.value
    return out


def contraction_reference_bound(alpha, lam, t_grid, e0, scalar=False):
    """
    Continuous contraction bounds for two solutions starting e0 apart.

    Vector systems: e0 * sqrt(E_alpha(2 lambda t^alpha)); scalar systems
    admit the sharper e0 * E_alpha(lambda t^alpha).
    """
    if scalar:
        return e0 * ml_decay_reference(alpha, lam, t_grid)
    return e0 * np.sqrt(ml_decay_reference(alpha, 2.0 * lam, t_grid))


def dissipativity_reference_bound(alpha, a, b, t_grid, x0_norm):
    """
    Continuous bound sqrt(|x0|^2 E + (a/b)(1 - E)) with E = E_alpha(-2b t^alpha).

    The E_{alpha,alpha} convolution in the dissipativity estimate integrates
    in closed form to (1 - E) / (2b).
    """
    if not b > 0 or a < 0:
        raise ValueError(f"❌ need a >= 0 and b > 0, got a={a}, b={b}")
    decay = ml_decay_reference(alpha, -2.0 * b, t_grid)
    return np.sqrt(x0_norm**2 * decay + (a / b) * (1.0 - decay))
