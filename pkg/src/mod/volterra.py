# src/mod/volterra.py

"""
Linear convolution Volterra difference equations

    x_{n+1} = f_n + sum_{j=0}^{n} F_{n-j} x_j

and the limit machinery used to read off algebraic decay rates.

### Functions:
- `volterra_solve`: forward recursion.
- `asymptotic_limit_estimate`: extrapolated lim n^alpha x_n over the last decade.
- `rate_chain_estimate`: the same limit through y_n = x_n/n, z_n = y_n/gamma_n.
- `check_w_class`: the three W(r) membership conditions at a truncation.
- `paley_wiener_check`: sum q_j zeta^j != 1 on the closed unit disk.
- `volterra_resolvent`: resolvent r = delta + q * r and its l1 norm.
- `power_law_tail` / `kernel_mass`: truncated kernel mass with tail bound.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

SPREAD_TOL = 0.10
RATIO_TOL = 1e-2
TAIL_SHARE = 0.05
PW_SAMPLES = 2048
PW_MIN_DISTANCE = 1e-6


def power_law_tail(c, p, n):
    """
    Bound sum_{j>n} c j^-p <= c n^(1-p) / (p-1) by integral comparison.

    Args:
        c (float): amplitude.
        p (float): exponent, > 1.
        n (int): last stored index, >= 1.
    """
    if not p > 1:
        raise ValueError(f"❌ power-law tail needs p > 1, got {p}")
    if n < 1:
        raise ValueError(f"❌ tail index must be >= 1, got {n}")
    return abs(c) * n ** (1.0 - p) / (p - 1.0)


def kernel_mass(kernel, tail=0.0):
    """sum |F_j| over the stored range plus a tail bound."""
    return float(np.sum(np.abs(np.asarray(kernel, dtype=float)))) + float(tail)


@dataclass(frozen=True, eq=False)
class VolterraSystem:
    """Forcing f_n, kernel F_n and initial value x_0; `tail_bound` covers the
    kernel beyond its stored range."""

    forcing: np.ndarray
    kernel: np.ndarray
    x0: float
    tail_bound: float = 0.0

    def __post_init__(self):
        forcing = np.asarray(self.forcing, dtype=float)
        kernel = np.asarray(self.kernel, dtype=float)
        if not np.all(np.isfinite(kernel)) or not np.all(np.isfinite(forcing)):
            raise ValueError("❌ forcing and kernel must be finite")
        if self.tail_bound < 0:
            raise ValueError(f"❌ tail bound must be nonnegative, got {self.tail_bound}")
        object.__setattr__(self, "forcing", forcing)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "x0", float(self.x0))

    @property
    def rho(self):
        return kernel_mass(self.kernel, self.tail_bound)


@dataclass(frozen=True)
class LimitEstimate:
    estimate: float
    spread: float
    indices: tuple
    converged: bool


@dataclass(frozen=True)
class WClassReport:
    r: float
    ratio_limit: float
    ratio_limit_ok: bool
    tilde_gamma: float
    tilde_gamma_ok: bool
    convolution_tail: float
    convolution_condition_ok: bool

    @property
    def member(self):
        return self.ratio_limit_ok and self.tilde_gamma_ok and self.convolution_condition_ok


@dataclass(frozen=True)
class PaleyWienerReport:
    passed: bool
    margin: float
    mass: float
    inconclusive: bool
    worst_point: Optional[complex] = None
    winding: int = 0


def volterra_solve(system, n_max):
    """
    Run the recursion up to x_{n_max}.

    Args:
        system (VolterraSystem): forcing, kernel and x_0.
        n_max (int): last index to compute.

    Returns:
        np.ndarray: x_0..x_{n_max}.
    """
    if n_max < 0:
        raise ValueError(f"❌ n_max must be nonnegative, got {n_max}")
    f, F = system.forcing, system.kernel
    if f.size < n_max or F.size < n_max:
        raise ValueError(
            f"❌ forcing ({f.size}) and kernel ({F.size}) must cover {n_max} steps"
        )
    x = np.empty(n_max + 1)
    x[0] = system.x0
    # reversed kernel keeps every history dot on a contiguous slice
    rev = F[:n_max][::-1].copy()
    for n in range(n_max):
        x[n + 1] = f[n] + rev[n_max - 1 - n :] @ x[: n + 1]
    return x


def _decade_indices(n):
    return (n // 10, int(round(n / np.sqrt(10.0))), n)


def _extrapolate(samples):
    y0, y1, y2 = samples
    scale = abs(y2) if y2 != 0 else 1.0
    spread = (max(samples) - min(samples)) / scale
    den = y2 - 2.0 * y1 + y0
    estimate = y2
    if abs(den) > 1e-14 * scale:
        aitken = y2 - (y2 - y1) ** 2 / den
        # accept the extrapolation only when it stays within the sampled range
        if abs(aitken - y2) <= abs(y2 - y0):
            estimate = aitken
    return float(estimate), float(spread)


def asymptotic_limit_estimate(x, alpha, spread_tol=SPREAD_TOL):
    """
    Estimate lim n^alpha x_n from three geometrically spaced samples in the
    last decade [N/10, N].

    Args:
        x (sequence): x_0..x_N with N >= 1000.
        alpha (float): decay exponent.
        spread_tol (float): relative spread above which the estimate is flagged.

    Returns:
        LimitEstimate: extrapolated limit, relative spread of the samples and
        a convergence flag.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 1000:
        raise ValueError(f"❌ need at least 1000 terms, got {x.size}")
    idx = _decade_indices(x.size - 1)
    samples = [float(i**alpha * x[i]) for i in idx]
    estimate, spread = _extrapolate(samples)
    return LimitEstimate(estimate, spread, idx, spread <= spread_tol)


def rate_chain_estimate(x, alpha, spread_tol=SPREAD_TOL):
    """
    Same limit as `asymptotic_limit_estimate`, computed on z_n = y_n / gamma_n
    with y_n = x_n / n and gamma_n = (n+1)^-(1+alpha).
    """
    x = np.asarray(x, dtype=float)
    if x.size < 1000:
        raise ValueError(f"❌ need at least 1000 terms, got {x.size}")
    idx = _decade_indices(x.size - 1)
    samples = [float((x[i] / i) * (i + 1.0) ** (1.0 + alpha)) for i in idx]
    estimate, spread = _extrapolate(samples)
    return LimitEstimate(estimate, spread, idx, spread <= spread_tol)


def _self_convolution(gamma, n, m):
    i = np.arange(m, n - m + 1)
    return float(np.sum(gamma[n - i] * gamma[i]) / gamma[n])


def check_w_class(gamma, r, ratio_tol=RATIO_TOL, tail_share=TAIL_SHARE):
    """
    Evaluate the W(r) conditions on gamma_0..gamma_N.

    - ratio limit: gamma_{N-1}/gamma_N within `ratio_tol` of 1/r;
    - weighted sum: sum gamma_i r^-i with indices past N/2 holding less than
      `tail_share` of the total;
    - convolution smallness: (1/gamma_n) sum_{i=m}^{n-m} gamma_{n-i} gamma_i
      with m = n/10 shrinks when the truncation doubles.

    Args:
        gamma (sequence): positive terms.
        r (float): radius, > 0.

    Returns:
        WClassReport
    """
    g = np.asarray(gamma, dtype=float)
    if not r > 0:
        raise ValueError(f"❌ r must be positive, got {r}")
    if np.any(g <= 0):
        raise ValueError("❌ W(r) membership needs a positive sequence")
    n = g.size - 1
    if n < 40:
        raise ValueError(f"❌ need at least 41 terms, got {g.size}")

    ratio_limit = float(g[n - 1] / g[n])
    ratio_ok = abs(ratio_limit - 1.0 / r) <= ratio_tol * max(1.0, 1.0 / r)

    with np.errstate(over="ignore"):
        weighted = np.exp(np.log(g) - np.arange(n + 1) * np.log(r))
    tilde = float(np.sum(weighted))
    tilde_ok = bool(np.isfinite(tilde)) and float(np.sum(weighted[n // 2 :])) <= tail_share * tilde

    full = _self_convolution(g, n, n // 10)
    half = _self_convolution(g, n // 2, n // 20)
    conv_ok = bool(np.isfinite(full)) and full < half

    return WClassReport(
        r=float(r),
        ratio_limit=ratio_limit,
        ratio_limit_ok=bool(ratio_ok),
        tilde_gamma=tilde,
        tilde_gamma_ok=bool(tilde_ok),
        convolution_tail=full,
        convolution_condition_ok=conv_ok,
    )


def paley_wiener_check(kernel, tail_bound=0.0, samples=PW_SAMPLES):
    """
    Check sum_j q_j zeta^j != 1 for |zeta| <= 1.

    A kernel with sum |q_j| < 1 passes outright with margin 1 - sum |q_j|.
    Otherwise the power series is sampled on `samples` points of the unit
    circle: the margin is the smallest distance from 1, and the winding
    number of 1 - q(zeta) must vanish (no root inside the disk).

    Args:
        kernel (sequence): q_0, q_1, ...
        tail_bound (float): bound on sum |q_j| beyond the stored range.
        samples (int): circle sample count.

    Returns:
        PaleyWienerReport
    """
    q = np.asarray(kernel, dtype=float)
    mass = kernel_mass(q, tail_bound)
    if mass < 1.0:
        return PaleyWienerReport(passed=True, margin=1.0 - mass, mass=mass, inconclusive=False)

    folded = np.zeros(samples)
    np.add.at(folded, np.arange(q.size) % samples, q)
    values = np.fft.ifft(folded) * samples  # q(exp(2 pi i k / samples))
    gap = 1.0 - values
    distance = np.abs(gap)
    k = int(np.argmin(distance))
    min_distance = float(distance[k])
    closed = np.append(gap, gap[0])
    winding = int(round(float(np.sum(np.diff(np.unwrap(np.angle(closed))))) / (2.0 * np.pi)))
    inconclusive = min_distance < PW_MIN_DISTANCE
    return PaleyWienerReport(
        passed=not inconclusive and winding == 0,
        margin=min_distance,
        mass=mass,
        inconclusive=inconclusive,
        worst_point=complex(np.exp(2j * np.pi * k / samples)),
        winding=winding,
    )


def volterra_resolvent(kernel, n):
    """
    Resolvent r_0..r_n of r = delta + q * r (q_0 != 1).

    Returns:
        tuple[np.ndarray, float]: the resolvent and its l1 norm.
    """
    q = np.asarray(kernel, dtype=float)
    if q.size < n + 1:
        raise ValueError(f"❌ kernel must hold {n + 1} terms, got {q.size}")
    if q[0] == 1.0:
        raise ValueError("❌ q_0 = 1 has no resolvent")
    r = np.empty(n + 1)
    lead = 1.0 - q[0]
    r[0] = 1.0 / lead
    rev = q[1 : n + 1][::-1].copy()  # rev[i] = q[n - i]
    for k in range(1, n + 1):
        r[k] = (rev[n - k :] @ r[:k]) / lead
    return r, float(np.sum(np.abs(r)))
