# src/mod/problems.py

"""
Benchmark Caputo systems with their structural constants.

### Functions:
- `lorenz_problem`: fractional Lorenz-type system, dissipative with a = 1/2.
- `subdiffusion_problem`: 5-point semi-discrete sub-diffusion U' = -kAU + G.
- `subdiffusion_initial`: the two initial profiles sampled on the grid.
- `scalar_cubic_problem` / `coupled_problem` / `linear_problem`.
- `verify_one_sided_lipschitz` / `verify_dissipativity`: sampled checks of
  the declared constants.
- `lanczos_ritz_values` / `inverse_power_iteration`: spectral diagnostics.
- `absorbing_radius`: sqrt(a/b).
- `build_problem`: name registry used by the CLI and sweep workers.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import splu

from mod.solver import FOdeProblem

SAMPLE_LOW = -5.0
SAMPLE_HIGH = 5.0
DEFAULT_SAMPLES = 10_000
CHECK_RTOL = 1e-10
SYMMETRY_TOL = 1e-14


@dataclass(frozen=True)
class LorenzParams:
    c1: float = 0.25
    c2: float = 1.0
    c3: float = 0.25

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3) <= 0:
            raise ValueError(f"❌ Lorenz parameters must be positive, got {self}")
        if not self.c2 > 0.5:
            raise ValueError(f"❌ Lorenz parameter c2 must exceed 1/2, got {self.c2}")

    @property
    def a(self):
        return 0.5

    @property
    def b(self):
        return min(self.c1, self.c2 - 0.5, self.c3)


def lorenz_problem(params=None):
    """
    D^alpha x = (x3 + (x2 - c1) x1, 1 - c2 x2 - x1^2, -x1 - c3 x3).

    <f(x), x> = x2 - c1 x1^2 - c2 x2^2 - c3 x3^2 <= 1/2 - b |x|^2.
    """
    p = params or LorenzParams()
    c1, c2, c3 = p.c1, p.c2, p.c3

    def rhs(t, x):
        x1, x2, x3 = x
        return np.array([x3 + (x2 - c1) * x1, 1.0 - c2 * x2 - x1 * x1, -x1 - c3 * x3])

    def jacobian(t, x):
        x1, x2, _ = x
        return np.array(
            [
                [x2 - c1, x1, 1.0],
                [-2.0 * x1, -c2, 0.0],
                [-1.0, 0.0, -c3],
            ]
        )

    return FOdeProblem(
        dimension=3,
        rhs=rhs,
        jacobian=jacobian,
        dissipativity=(p.a, p.b),
        name="lorenz",
    )


@dataclass(frozen=True, eq=False)
class SubdiffusionGrid:
    """Interior nodes (i dx, j dy), i = 1..nx, j = 1..ny, stored at i-1 + nx (j-1)."""

    nx: int
    ny: int
    k: float
    matrix: sp.csr_matrix
    lambda1: float

    @property
    def dx(self):
        return 1.0 / (self.nx + 1)

    @property
    def dy(self):
        return 1.0 / (self.ny + 1)

    @property
    def size(self):
        return self.nx * self.ny

    @property
    def mu(self):
        return -self.k * self.lambda1

    def nodes(self):
        x = np.arange(1, self.nx + 1) * self.dx
        y = np.arange(1, self.ny + 1) * self.dy
        xx, yy = np.meshgrid(x, y)  # rows follow y, so ravel gives i + nx j
        return xx.ravel(), yy.ravel()


def _second_difference(n, step):
    return sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / step**2


def _laplacian(nx, ny):
    dx, dy = 1.0 / (nx + 1), 1.0 / (ny + 1)
    tx = _second_difference(nx, dx)
    ty = _second_difference(ny, dy)
    return (sp.kron(sp.identity(ny), tx) + sp.kron(ty, sp.identity(nx))).tocsr()


def _check_operator(matrix):
    asym = abs(matrix - matrix.T)
    if asym.nnz and asym.max() > SYMMETRY_TOL * abs(matrix).max():
        raise ValueError("❌ sub-diffusion operator is not symmetric")
    diag = matrix.diagonal()
    off = np.asarray(abs(matrix).sum(axis=1)).ravel() - np.abs(diag)
    bounds = diag - off
    # weak diagonal dominance, strict on boundary rows: irreducible, so A is SPD
    if np.any(bounds < -SYMMETRY_TOL * diag.max()) or not np.any(bounds > 0):
        raise ValueError("❌ Gershgorin bounds of the sub-diffusion operator are not positive")


def subdiffusion_problem(nx=31, ny=31, k=1.0, source=None):
    """
    Semi-discrete sub-diffusion D^alpha U = -k A U + G on the unit square.

    A is the 5-point Dirichlet Laplacian; its smallest eigenvalue is known in
    closed form, so mu = -k lambda_1 < 0 is the one-sided Lipschitz constant.

    Args:
        nx, ny (int): interior node counts, >= 2.
        k (float): diffusion coefficient, > 0.
        source (array, optional): constant source G (zero by default).

    Returns:
        tuple[FOdeProblem, SubdiffusionGrid]
    """
    if nx < 2 or ny < 2:
        raise ValueError(f"❌ sub-diffusion grid needs nx, ny >= 2, got ({nx}, {ny})")
    if not k > 0:
        raise ValueError(f"❌ diffusion coefficient must be positive, got {k}")
    matrix = _laplacian(nx, ny)
    _check_operator(matrix)
    dx, dy = 1.0 / (nx + 1), 1.0 / (ny + 1)
    lambda1 = (2.0 - 2.0 * np.cos(np.pi * dx)) / dx**2 + (2.0 - 2.0 * np.cos(np.pi * dy)) / dy**2
    grid = SubdiffusionGrid(nx=nx, ny=ny, k=float(k), matrix=matrix, lambda1=float(lambda1))

    g = None
    if source is not None:
        g = np.asarray(source, dtype=float).reshape(-1)
        if g.size != grid.size:
            raise ValueError(f"❌ source has {g.size} entries, grid has {grid.size}")
    operator = (-grid.k * matrix).tocsr()

    def rhs(t, u):
        out = operator @ u
        return out if g is None else out + g

    problem = FOdeProblem(
        dimension=grid.size,
        rhs=rhs,
        jacobian=lambda t, u: operator,
        lambda_one_sided=grid.mu,
        dissipativity=(0.0, grid.k * grid.lambda1) if g is None else None,
        name="subdiffusion",
        grid_norm=True,
    )
    return problem, grid


def subdiffusion_initial(grid, which):
    """u0^1 = sin(2 pi x) sin(2 pi y) or u0^2 = 10 x y (1 - x)(1 - y) at the nodes."""
    x, y = grid.nodes()
    if which == 1:
        return np.sin(2.0 * np.pi * x) * np.sin(2.0 * np.pi * y)
    if which == 2:
        return 10.0 * x * y * (1.0 - x) * (1.0 - y)
    raise ValueError(f"❌ initial profile must be 1 or 2, got {which}")


def scalar_cubic_problem():
    return FOdeProblem(
        dimension=1,
        rhs=lambda t, x: -(x**3) - x,
        jacobian=lambda t, x: np.array([[-3.0 * x[0] ** 2 - 1.0]]),
        lambda_one_sided=-1.0,
        dissipativity=(0.0, 1.0),
        name="cubic",
    )


def coupled_problem():
    """(-10 x y^2 - x, 10 x^2 y - y); the cross terms cancel in <f(z), z>."""

    def rhs(t, z):
        x, y = z
        return np.array([-10.0 * x * y * y - x, 10.0 * x * x * y - y])

    def jacobian(t, z):
        x, y = z
        return np.array(
            [
                [-10.0 * y * y - 1.0, -20.0 * x * y],
                [20.0 * x * y, 10.0 * x * x - 1.0],
            ]
        )

    return FOdeProblem(
        dimension=2,
        rhs=rhs,
        jacobian=jacobian,
        dissipativity=(0.0, 1.0),
        name="coupled",
    )


def linear_problem(matrix):
    """
    D^alpha x = M x.

    Args:
        matrix (array-like): square d x d matrix, or a scalar.

    Returns:
        FOdeProblem: lambda_one_sided is the largest eigenvalue of the
        symmetric part; dissipativity (0, -lambda) is attached when it is
        negative.
    """
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"❌ linear problem needs a square matrix, got shape {m.shape}")
    lam = float(np.linalg.eigvalsh(0.5 * (m + m.T))[-1])
    return FOdeProblem(
        dimension=m.shape[0],
        rhs=lambda t, x: m @ x,
        jacobian=lambda t, x: m,
        lambda_one_sided=lam,
        dissipativity=(0.0, -lam) if lam < 0 else None,
        name="linear",
    )


@dataclass(frozen=True)
class ConstantCheck:
    """Worst sampled margin (bound minus observed, >= 0 when the inequality
    holds) of a declared structural constant."""

    passed: bool
    worst_margin: float
    violations: int
    samples: int
    seed: int


def _sample(rng, samples, dimension, low, high):
    return rng.uniform(low, high, size=(samples, dimension))


def verify_one_sided_lipschitz(
    problem, samples=DEFAULT_SAMPLES, seed=0, low=SAMPLE_LOW, high=SAMPLE_HIGH, lam=None
):
    """
    Sample pairs uniformly on [low, high]^d and check
    <f(x) - f(y), x - y> <= lambda |x - y|^2.
    """
    lam = problem.lambda_one_sided if lam is None else lam
    if lam is None:
        raise ValueError(f"❌ problem {problem.name} declares no one-sided Lipschitz constant")
    rng = np.random.default_rng(seed)
    xs = _sample(rng, samples, problem.dimension, low, high)
    ys = _sample(rng, samples, problem.dimension, low, high)
    margins = np.empty(samples)
    slack = np.empty(samples)
    for i in range(samples):
        diff = xs[i] - ys[i]
        inner = float((problem.evaluate(0.0, xs[i]) - problem.evaluate(0.0, ys[i])) @ diff)
        bound = lam * float(diff @ diff)
        margins[i] = bound - inner
        slack[i] = CHECK_RTOL * (abs(inner) + abs(bound) + 1.0)
    violations = int(np.sum(margins < -slack))
    return ConstantCheck(violations == 0, float(margins.min()), violations, samples, seed)


def verify_dissipativity(
    problem, samples=DEFAULT_SAMPLES, seed=0, low=SAMPLE_LOW, high=SAMPLE_HIGH, constants=None
):
    """Sample states uniformly on [low, high]^d and check <f(x), x> <= a - b |x|^2."""
    constants = problem.dissipativity if constants is None else constants
    if constants is None:
        raise ValueError(f"❌ problem {problem.name} declares no dissipativity constants")
    a, b = constants
    rng = np.random.default_rng(seed)
    xs = _sample(rng, samples, problem.dimension, low, high)
    margins = np.empty(samples)
    slack = np.empty(samples)
    for i in range(samples):
        inner = float(problem.evaluate(0.0, xs[i]) @ xs[i])
        bound = a - b * float(xs[i] @ xs[i])
        margins[i] = bound - inner
        slack[i] = CHECK_RTOL * (abs(inner) + abs(bound) + 1.0)
    violations = int(np.sum(margins < -slack))
    return ConstantCheck(violations == 0, float(margins.min()), violations, samples, seed)


def lanczos_ritz_values(matrix, steps=50, seed=0):
    """
    Ritz values of a symmetric matrix after `steps` Lanczos iterations with
    full reorthogonalization.
    """
    n = matrix.shape[0]
    steps = min(steps, n)
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    basis = np.empty((steps, n))
    diag, off = [], []
    for j in range(steps):
        basis[j] = q
        w = matrix @ q
        diag.append(float(q @ w))
        w = w - basis[: j + 1].T @ (basis[: j + 1] @ w)
        beta = float(np.linalg.norm(w))
        if j == steps - 1 or beta < 1e-12 * max(1.0, abs(diag[-1])):
            break
        off.append(beta)
        q = w / beta
    return eigh_tridiagonal(np.array(diag), np.array(off[: len(diag) - 1]), eigvals_only=True)


def inverse_power_iteration(matrix, tol=1e-13, max_iter=500, seed=0):
    """Smallest eigenvalue of a symmetric positive-definite matrix by inverse
    iteration with a sparse LU factorization."""
    lu = splu(sp.csc_matrix(matrix))
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(matrix.shape[0])
    v /= np.linalg.norm(v)
    value = float(v @ (matrix @ v))
    for it in range(max_iter):
        w = lu.solve(v)
        v = w / np.linalg.norm(w)
        updated = float(v @ (matrix @ v))
        if abs(updated - value) <= tol * abs(updated):
            logging.debug(f"inverse iteration converged after {it + 1} steps")
            return updated
        value = updated
    logging.warning(f"⚠️ inverse iteration stopped after {max_iter} steps")
    return value


def absorbing_radius(a, b):
    if a < 0 or not b > 0:
        raise ValueError(f"❌ need a >= 0 and b > 0, got a={a}, b={b}")
    return float(np.sqrt(a / b))


def _build_lorenz(c1=0.25, c2=1.0, c3=0.25):
    return lorenz_problem(LorenzParams(float(c1), float(c2), float(c3)))


def _build_subdiffusion(nx=31, ny=31, k=1.0):
    return subdiffusion_problem(int(nx), int(ny), float(k))[0]


def _build_linear(lam=-1.0, dimension=1):
    return linear_problem(float(lam) * np.eye(int(dimension)))


PROBLEM_BUILDERS = {
    "lorenz": _build_lorenz,
    "subdiffusion": _build_subdiffusion,
    "cubic": scalar_cubic_problem,
    "coupled": coupled_problem,
    "linear": _build_linear,
}


def build_problem(name, **params):
    """
    Construct a benchmark problem by name.

    Args:
        name (str): one of `PROBLEM_BUILDERS`.
        **params: builder keyword arguments; None values are dropped.

    Returns:
        FOdeProblem
    """
    if not name:
        raise ValueError("❌ problem name must not be empty")
    if name not in PROBLEM_BUILDERS:
        raise ValueError(f"❌ unknown problem {name!r}; choose from {sorted(PROBLEM_BUILDERS)}")
    params = {key: value for key, value in params.items() if value is not None}
    try:
        return PROBLEM_BUILDERS[name](**params)
    except TypeError as e:
        raise ValueError(f"❌ bad parameters for problem {name!r}: {e}") from e


def default_initial(name, dimension: Optional[int] = None):
    """Initial state used when none is given on the command line."""
    if name == "lorenz":
        return np.array([2.0, 1.0, 2.0])
    if name == "coupled":
        return np.array([-6.0, 1.0])
    if name == "cubic":
        return np.array([2.0])
    if name == "subdiffusion":
        raise ValueError("❌ sub-diffusion runs take their initial profile from subdiffusion_initial")
    return np.ones(dimension or 1)
