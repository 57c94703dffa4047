"""Semi-wave profiles and the asymptotic spreading speed k0.

A front receding to the far field sees constant coefficients: net growth
a (> 0) and crowding b.  Its shape is the semi-wave U solving

    -D U'' + k U' = a U - b U^2,   U(0) = 0,  U(+inf) = a/b,  U' > 0,

and the free-boundary matching condition mu U'(0) = k picks the unique
speed k0 in (0, 2 sqrt(aD)).  The upper endpoint 2 sqrt(aD) is the
classical minimal traveling-wave speed c*.

``solve_profile`` finds U'(0) for a given k by shooting in the phase plane
(U, V = U'): the initial slope V(0) is bisected between trajectories that
stall (V hits 0 below the plateau a/b) and trajectories that overshoot the
plateau.  The connecting trajectory is dynamically unstable, so the
returned long-range profile is polished by a tridiagonal Newton solve of
the two-point problem with a far Neumann condition; its slope at 0 agrees
with the shooting slope to discretization accuracy.

``find_k0`` bisects mu U'_k(0) - k = 0 in k, using that U'_k(0) decreases
strictly in k from the k = 0 energy value sqrt(a^3 / (3 D b^2)) to 0 at c*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from .errors import BracketFailure, NewtonDivergence

_SHOOT_TOL = 1e-10
_MATCH_TOL = 1e-8


@dataclass(frozen=True)
class SemiWaveProblem:
    """Far-field parameters of the semi-wave: growth a, crowding b, D, mu."""

    a: float
    b: float
    D: float
    mu: float

    def __post_init__(self):
        for name in ("a", "b", "D", "mu"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def cstar(self) -> float:
        """Minimal traveling-wave speed 2 sqrt(aD), an upper bound for k0."""
        return 2.0 * math.sqrt(self.a * self.D)

    @property
    def plateau(self) -> float:
        return self.a / self.b


@dataclass(frozen=True)
class SemiWaveResult:
    """Matched speed k0 with its profile and initial slope."""

    k0: float
    U0_slope: float
    cstar: float
    r: np.ndarray
    U: np.ndarray


def _classify_shot(p: SemiWaveProblem, k: float, v0: float) -> str:
    """One phase-plane trajectory from (U, V) = (0, v0): 'under' or 'over'."""
    plateau = p.plateau

    def rhs(_, y):
        u, v = y
        return (v, (k * v - p.a * u + p.b * u * u) / p.D)

    def hit_plateau(_, y):
        return y[0] - plateau

    hit_plateau.terminal = True
    hit_plateau.direction = 1.0

    def stalled(_, y):
        return y[1]

    stalled.terminal = True
    stalled.direction = -1.0

    r_max = 1e3 * math.sqrt(p.D / p.a)
    sol = solve_ivp(
        rhs,
        (0.0, r_max),
        (0.0, v0),
        method="RK45",
        rtol=1e-10,
        atol=1e-12,
        events=(hit_plateau, stalled),
    )
    if sol.t_events[0].size:
        return "over"
    if sol.t_events[1].size:
        u_end = sol.y_events[1][0][0]
        return "over" if u_end >= plateau * (1.0 - 1e-12) else "under"
    # ran out of range while numerically on the connection; split on the plateau
    return "over" if sol.y[0, -1] >= plateau * (1.0 - 1e-8) else "under"


def _shoot_slope(p: SemiWaveProblem, k: float) -> float:
    """Initial slope U'(0) of the connecting trajectory at wave speed k."""
    if not (0.0 < k < p.cstar):
        raise BracketFailure(f"wave speed must lie in (0, {p.cstar:g})")
    cap = 10.0 * p.plateau * math.sqrt(p.a / p.D)
    if _classify_shot(p, k, cap) != "over":
        raise BracketFailure("slope cap fails to overshoot; k outside the resolvable range")
    lo = 1e-10 * cap
    if _classify_shot(p, k, lo) != "under":
        raise BracketFailure("no undershooting slope found; k outside the resolvable range")
    hi = cap
    while hi - lo > _SHOOT_TOL:
        mid = 0.5 * (lo + hi)
        if _classify_shot(p, k, mid) == "under":
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _profile_bvp(p: SemiWaveProblem, k: float, slope: float, L: float, N: int = 2000):
    """Monotone profile on [0, L] by Newton on the two-point problem.

    Dirichlet U(0) = 0, Neumann U'(L) = 0; the far condition is accurate to
    an exponentially small truncation error once L spans tens of front
    widths.  Seeded by a saturating exponential with the shooting slope.
    """
    r = np.linspace(0.0, L, N + 1)
    dr = L / N
    plateau = p.plateau
    q = max(slope / plateau, 1e-8)
    u = plateau * (1.0 - np.exp(-q * r[1:]))

    inv2 = p.D / dr**2
    kdr = k / (2.0 * dr)
    m = N  # unknowns U_1 .. U_N
    sub = np.full(m, -inv2 - kdr)
    sup = np.full(m, -inv2 + kdr)
    diag_lin = np.full(m, 2.0 * inv2)
    sub[-1] = -2.0 * inv2
    sup[-1] = 0.0

    def residual(u):
        F = diag_lin * u - p.a * u + p.b * u * u
        F[:-1] += sup[:-1] * u[1:]
        F[1:] += sub[1:] * u[:-1]
        return F

    for _ in range(60):
        F = residual(u)
        if not np.all(np.isfinite(F)):
            raise NewtonDivergence("semi-wave profile polish produced non-finite values")
        jd = diag_lin - p.a + 2.0 * p.b * u
        ab = np.zeros((3, m))
        ab[0, 1:] = sup[:-1]
        ab[1, :] = jd
        ab[2, :-1] = sub[1:]
        du = solve_banded((1, 1), ab, -F)
        u = u + du
        if float(np.max(np.abs(du))) < 1e-12 * max(1.0, plateau):
            break
    else:
        raise NewtonDivergence("semi-wave profile polish failed to converge")
    U = np.empty(N + 1)
    U[0] = 0.0
    U[1:] = u
    return r, U


def solve_profile(p: SemiWaveProblem, k: float, L: float | None = None) -> tuple[np.ndarray, np.ndarray, float]:
    """Semi-wave profile and initial slope at wave speed k in (0, c*).

    Returns (r, U, U'(0)) with U sampled on [0, L] (default 40 front
    widths, L = 40 sqrt(D/a)), strictly increasing toward the plateau a/b.
    """
    slope = _shoot_slope(p, k)
    if L is None:
        L = 40.0 * math.sqrt(p.D / p.a)
    r, U = _profile_bvp(p, k, slope, L)
    return r, U, slope


def find_k0(p: SemiWaveProblem, match_tol: float = _MATCH_TOL) -> SemiWaveResult:
    """Spreading speed k0: the root of g(k) = mu U'_k(0) - k in (0, c*).

    g decreases strictly (the initial slope falls with k), is positive near
    0 and negative near c*, so plain bisection pins the root; the returned
    k0 satisfies |g(k0)| < match_tol.
    """
    cstar = p.cstar
    eps = 1e-9 * cstar

    def g(k: float) -> float:
        try:
            return p.mu * _shoot_slope(p, k) - k
        except BracketFailure:
            # slope indistinguishable from 0 this close to cstar
            return -k

    lo, hi = eps, cstar - eps
    if g(lo) <= 0.0:
        raise BracketFailure("matching function is not positive near k = 0")
    if g(hi) >= 0.0:
        raise BracketFailure("matching function is not negative near cstar")
    k0 = 0.5 * (lo + hi)
    for _ in range(200):
        k0 = 0.5 * (lo + hi)
        gm = g(k0)
        if abs(gm) < match_tol:
            break
        if gm > 0.0:
            lo = k0
        else:
            hi = k0
    else:
        raise BracketFailure("speed matching failed to reach its tolerance")

    r, U, slope = solve_profile(p, k0)
    return SemiWaveResult(k0=k0, U0_slope=slope, cstar=cstar, r=r, U=U)
