"""Principal eigenvalues and persistence thresholds on balls.

Two discrete eigenproblems on the radial grid r_i = i R / N drive the whole
toolkit.  Both use the operator

    L[psi] = -D (psi'' + (n-1)/r psi') + c(r) psi

discretized with second-order central differences, a symmetric ghost node
at the axis (where the removable singularity gives Lap psi(0) = n psi''(0))
and a homogeneous Dirichlet condition at r = R:

  * ``principal_eigenvalue``: smallest eigenvalue lambda_star of L with
    c = d - b, found by inverse power iteration with a Gershgorin shift.
  * ``compute_R0``: the largest rho of the generalized pencil
    b psi = rho (-D Lap + d) psi, found by power iteration on A^-1 B with
    the Rayleigh quotient taken in the r^(n-1)-weighted inner product.
    rho is the net-reproduction threshold value of the ball: persistence is
    favored when R0 > 1, and 1 - R0 has the same sign as lambda_star.

``find_Dstar`` and ``find_hstar`` bisect R0 = 1 in the diffusion rate and
in the ball radius, using the strict monotonicity of R0 in both arguments.
All solves are pure functions of immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import NonConvergence
from .habitat import Habitat, classify_habitat

DEFAULT_GRID_N = 800
_EIG_TOL = 1e-10
_MAX_ITER = 100_000


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid on [0, R] with N interior cells, nodes r_i = i R / N."""

    R: float
    N: int

    def __post_init__(self):
        if self.R <= 0.0:
            raise ValueError("grid radius must be positive")
        if self.N < 32:
            raise ValueError("grid needs at least 32 cells")

    @property
    def dr(self) -> float:
        return self.R / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.R, self.N + 1)


@dataclass(frozen=True)
class EigenResult:
    """Principal eigenpair and threshold value on one ball.

    ``psi`` holds the positive eigenfunction samples on the grid nodes,
    normalized to max 1, with psi(R) = 0.  ``lambda_dirichlet`` caches the
    principal eigenvalue of the pure Laplacian on the same ball (the
    'lambda(R)' entering the constant-coefficient formula
    R0 = b / (lambda(R) D + d)).
    """

    lambda_star: float
    R0: float
    psi: np.ndarray
    lambda_dirichlet: float
    grid: RadialGrid


@dataclass(frozen=True)
class ThresholdResult:
    """Critical parameter value where R0 crosses 1.

    ``status`` is "ok" when a bracket straddling R0 = 1 was refined,
    "no_favorable_site" when b <= d on the relevant ball makes R0 < 1 for
    every parameter value (the value is then 0), and "infinite" when R0
    stays below 1 out to the search cap (value is +inf).
    """

    value: float
    bracket: tuple[float, float]
    residual: float
    status: str = "ok"


# ---------------------------------------------------------------------------
# Discrete operator assembly
# ---------------------------------------------------------------------------


def _operator_terms(D: float, grid: RadialGrid, n: int, c: np.ndarray):
    """Sub/diag/super diagonals of L on the unknowns psi_0 .. psi_{N-1}.

    Row 0 is the axis row: Lap psi(0) = n psi''(0) with the symmetric ghost
    psi_{-1} = psi_1, which keeps second-order accuracy up to r = 0.
    """
    N = grid.N
    dr = grid.dr
    r = grid.nodes[:N]
    inv2 = D / dr**2

    sub = np.zeros(N)
    diag = np.zeros(N)
    sup = np.zeros(N)

    diag[0] = 2.0 * n * inv2 + c[0]
    sup[0] = -2.0 * n * inv2

    ri = r[1:]
    drift = D * (n - 1) / (2.0 * ri * dr)
    sub[1:] = -(inv2 - drift)
    diag[1:] = 2.0 * inv2 + c[1:]
    sup[1:] = -(inv2 + drift)
    return sub, diag, sup


def _to_banded(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray) -> np.ndarray:
    N = diag.size
    ab = np.zeros((3, N))
    ab[0, 1:] = sup[:-1]
    ab[1, :] = diag
    ab[2, :-1] = sub[1:]
    return ab


def _matvec(sub, diag, sup, x):
    y = diag * x
    y[:-1] += sup[:-1] * x[1:]
    y[1:] += sub[1:] * x[:-1]
    return y


def _start_vector(grid: RadialGrid) -> np.ndarray:
    # positive paraboloid: guaranteed overlap with the principal mode
    r = grid.nodes[: grid.N]
    return 1.0 - (r / grid.R) ** 2


def _quotient_weights(grid: RadialGrid, n: int) -> np.ndarray:
    return np.power(grid.nodes[: grid.N], n - 1)


def _principal_pair(
    D: float, grid: RadialGrid, n: int, c: np.ndarray, maxiter: int = _MAX_ITER
) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and positive eigenvector of L by inverse iteration.

    The shift sits strictly below the Gershgorin lower bound, so the shifted
    matrix is a strictly diagonally dominant M-matrix and the iteration
    converges to the principal mode from any positive start vector.
    """
    sub, diag, sup = _operator_terms(D, grid, n, c)
    gersh = diag - np.abs(sub) - np.abs(sup)
    sigma = float(gersh.min()) - 1.0
    ab = _to_banded(sub, diag - sigma, sup)

    w = _quotient_weights(grid, n)
    x = _start_vector(grid)
    lam = math.inf
    for _ in range(maxiter):
        y = solve_banded((1, 1), ab, x)
        y /= np.abs(y).max()
        num = float(np.dot(w * y, _matvec(sub, diag, sup, y)))
        den = float(np.dot(w * y, y))
        lam_new = num / den
        x = y
        if abs(lam_new - lam) < _EIG_TOL:
            return lam_new, x
        lam = lam_new
    raise NonConvergence("inverse power iteration exceeded its iteration cap")


def _largest_rho(
    bvals: np.ndarray,
    dvals: np.ndarray,
    D: float,
    grid: RadialGrid,
    n: int,
    maxiter: int = _MAX_ITER,
) -> tuple[float, np.ndarray]:
    """Largest rho of  b psi = rho (-D Lap + d) psi  by power iteration.

    Realizes the Rayleigh-quotient supremum of int b phi^2 over
    int (D |grad phi|^2 + d phi^2), both with volume weight r^(n-1).
    """
    sub, diag, sup = _operator_terms(D, grid, n, dvals)
    ab = _to_banded(sub, diag, sup)
    w = _quotient_weights(grid, n)

    x = _start_vector(grid)
    rho = math.inf
    for _ in range(maxiter):
        y = solve_banded((1, 1), ab, bvals * x)
        y /= np.abs(y).max()
        num = float(np.dot(w * y, bvals * y))
        den = float(np.dot(w * y, _matvec(sub, diag, sup, y)))
        rho_new = num / den
        x = y
        if abs(rho_new - rho) < _EIG_TOL * abs(rho_new):
            return rho_new, x
        rho = rho_new
    raise NonConvergence("power iteration exceeded its iteration cap")


def _with_boundary(psi: np.ndarray) -> np.ndarray:
    out = np.empty(psi.size + 1)
    out[:-1] = psi
    out[-1] = 0.0
    return out / np.abs(out).max()


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def principal_eigenvalue(
    hab: Habitat, D: float, R: float, N: int = DEFAULT_GRID_N, maxiter: int = _MAX_ITER
) -> tuple[float, np.ndarray]:
    """Principal eigenvalue of -D Lap + (d - b) on B_R and its eigenfunction.

    Returns (lambda_star, psi) with psi on the N+1 grid nodes, positive in
    the interior, psi(R) = 0, normalized to max 1.
    """
    if D <= 0.0:
        raise ValueError("D must be positive")
    grid = RadialGrid(R, N)
    r = grid.nodes[:N]
    c = hab.d(r) - hab.b(r)
    lam, psi = _principal_pair(D, grid, hab.n, c, maxiter=maxiter)
    return lam, _with_boundary(psi)


def compute_R0(
    hab: Habitat, D: float, R: float, N: int = DEFAULT_GRID_N, maxiter: int = _MAX_ITER
) -> float:
    """Threshold value R0 of the ball B_R with an absorbing boundary."""
    if D <= 0.0:
        raise ValueError("D must be positive")
    grid = RadialGrid(R, N)
    r = grid.nodes[:N]
    rho, _ = _largest_rho(hab.b(r), hab.d(r), D, grid, hab.n, maxiter=maxiter)
    return rho


def dirichlet_laplacian_eigenvalue(R: float, n: int, N: int = DEFAULT_GRID_N) -> float:
    """Principal eigenvalue lambda(R) of -Lap on B_R with Dirichlet boundary."""
    grid = RadialGrid(R, N)
    lam, _ = _principal_pair(1.0, grid, n, np.zeros(N))
    return lam


def solve_eigenproblem(hab: Habitat, D: float, R: float, N: int = DEFAULT_GRID_N) -> EigenResult:
    """Full eigen summary of one ball: lambda_star, psi, R0 and lambda(R)."""
    lam, psi = principal_eigenvalue(hab, D, R, N)
    r0 = compute_R0(hab, D, R, N)
    lam_d = dirichlet_laplacian_eigenvalue(R, hab.n, N)
    return EigenResult(lambda_star=lam, R0=r0, psi=psi, lambda_dirichlet=lam_d, grid=RadialGrid(R, N))


def R0_front(hab: Habitat, D: float, front_radius: float, N: int = 256) -> float:
    """Threshold value of the current free-boundary domain B_h(t).

    Identical to :func:`compute_R0` with the grid rescaled to the running
    front radius; strictly increasing along any expanding front.
    """
    return compute_R0(hab, D, front_radius, N)


def find_Dstar(
    hab: Habitat,
    R: float,
    N: int = DEFAULT_GRID_N,
    tol: float = 1e-6,
    maxiter: int = 200,
) -> ThresholdResult:
    """Critical diffusion D* with R0(D*, B_R) = 1, by bisection in D.

    R0 decreases strictly in D, so a bracket grown geometrically from
    [1e-6, 1] pins D*.  When b <= d throughout B_R no diffusion rate
    reaches R0 = 1 and the result carries the "no_favorable_site" flag
    with value 0.
    """
    report = classify_habitat(hab, R)
    if not report.favorable_intervals:
        return ThresholdResult(0.0, (0.0, 0.0), math.nan, status="no_favorable_site")

    f = lambda D: compute_R0(hab, D, R, N) - 1.0
    lo, hi = 1e-6, 1.0
    if f(lo) <= 0.0:
        # favorable pocket too weak to push R0 above 1 at any resolvable D
        return ThresholdResult(0.0, (0.0, 0.0), math.nan, status="no_favorable_site")
    while f(hi) > 0.0:
        lo = hi
        hi *= 2.0
        if hi > 1e15:
            raise NonConvergence("R0 failed to fall below 1 while growing D")
    for _ in range(maxiter):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    value = 0.5 * (lo + hi)
    return ThresholdResult(value, (lo, hi), abs(f(value)), status="ok")


def find_hstar(
    hab: Habitat,
    D: float,
    N: int = DEFAULT_GRID_N,
    tol: float = 1e-6,
    R_cap: float = 1e3,
    maxiter: int = 200,
) -> ThresholdResult:
    """Critical radius h* with R0(D, B_h*) = 1, by bisection in the radius.

    R0 increases strictly in the radius.  If R0 stays below 1 out to
    ``R_cap`` the result is flagged "infinite" (or "no_favorable_site"
    when the capped ball holds no favorable site at all).
    """
    f = lambda R: compute_R0(hab, D, R, N) - 1.0
    lo, hi = 0.01, 1.0
    while f(lo) >= 0.0:
        lo *= 0.5
        if lo < 1e-8:
            raise NonConvergence("R0 failed to fall below 1 while shrinking R")
    if f(hi) < 0.0:
        while f(hi) < 0.0:
            lo = hi
            hi *= 2.0
            if hi > R_cap:
                report = classify_habitat(hab, R_cap)
                status = "infinite" if report.favorable_intervals else "no_favorable_site"
                return ThresholdResult(math.inf, (lo, math.inf), math.nan, status=status)
    for _ in range(maxiter):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    value = 0.5 * (lo + hi)
    return ThresholdResult(value, (lo, hi), abs(f(value)), status="ok")


def critical_diffusion_variational(hab: Habitat, R: float, N: int = DEFAULT_GRID_N) -> float:
    """D* as the largest rho of  (b - d) phi = rho (-Lap) phi  on B_R.

    Cross-check for :func:`find_Dstar`; valid when the net growth b - d is
    positive throughout the ball (power iteration needs a positive weight).
    """
    grid = RadialGrid(R, N)
    r = grid.nodes[:N]
    m = hab.b(r) - hab.d(r)
    if m.min() <= 0.0:
        raise ValueError("variational cross-check needs b > d throughout the ball")
    rho, _ = _largest_rho(m, np.zeros(N), 1.0, grid, hab.n)
    return rho
