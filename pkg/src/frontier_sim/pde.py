"""Front-fixed time integration of the free-boundary invasion model.

The model couples a logistic reaction-diffusion equation for the density
u(r, t) on the expanding ball 0 <= r < h(t) with the Stefan law
h'(t) = -mu u_r(h(t), t) for the front.  The moving domain is straightened
once and for all by s = r h0 / h(t), which maps [0, h(t)] to the fixed
interval [0, h0].  With v(s, t) = u(r, t) the equation becomes

    v_t = (h0^2 / h^2) D (v_ss + (n-1)/s v_s) + (h'/h) s v_s
          + v (b - d - beta v),

with v_s(0) = 0, v(h0) = 0, and coefficients evaluated at the physical
radius r = s h / h0 every step.

One step of :func:`step` applies a semi-implicit splitting: the stiff
diffusion term goes into a tridiagonal backward-Euler solve (with the axis
row using Lap v(0) = n v_ss(0)), while the dilution advection and the
logistic reaction are explicit.  The front speed is then refreshed from
the updated profile through a second-order one-sided difference and the
front advances by explicit Euler, lagged one step behind the profile.

Runtime guards enforce the a-priori box: v stays in [0, C1] up to
tolerance and the front speed stays in (0, C2], where

    C1 = max( sup(b - d) / inf beta, max u0 ),
    C2 = 2 mu M C1,  M = max( 1/h0, sqrt(b2 / 2D), 4 |u0|_C1 / (3 C1) ).

Violations raise StabilityFailure and :func:`run` halves dt and retries.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from . import eigen
from .errors import (
    BelowThreshold,
    InsufficientData,
    InvalidInitialData,
    NewtonDivergence,
    StabilityFailure,
)
from .habitat import Habitat, tail_limits

log = logging.getLogger(__name__)

PHI_KINDS = ("cosine", "quadratic")

_NEG_TOL = 1e-10        # accepted negative undershoot per step
_BOX_SLACK = 1e-3       # relative slack on the C1 ceiling before a step is rejected
_MAX_HALVINGS = 10


@dataclass
class SimConfig:
    """Solver parameters for one free-boundary run.

    ``dt`` defaults to 1e-3 h0^2 / D; ``phi_kind`` selects the initial
    shape phi with phi'(0) = 0, phi(h0) = 0, phi > 0 on [0, h0), scaled by
    the amplitude ``delta``.  ``mu = 0`` freezes the front (fixed-domain
    surrogate used by tests); the model proper requires mu > 0.
    """

    habitat: Habitat
    D: float = 1.0
    mu: float = 1.0
    h0: float = 1.0
    delta: float = 0.5
    phi_kind: str = "cosine"
    N: int = 800
    dt: Optional[float] = None
    T_max: float = 200.0
    output_interval: float = 0.5
    eigen_N: int = 256

    # derived, filled in __post_init__
    c1_bound: float = field(init=False, repr=False)
    c2_bound: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.D <= 0.0:
            raise ValueError("D must be positive")
        if self.mu < 0.0:
            raise ValueError("mu must be nonnegative")
        if self.h0 <= 0.0:
            raise ValueError("h0 must be positive")
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.phi_kind not in PHI_KINDS:
            raise ValueError(f"unknown phi_kind {self.phi_kind!r}")
        if self.dt is None:
            self.dt = 1e-3 * self.h0**2 / self.D
        if self.dt <= 0.0 or self.T_max <= 0.0 or self.output_interval <= 0.0:
            raise ValueError("dt, T_max and output_interval must be positive")
        self.c1_bound, self.c2_bound = a_priori_bounds(self)

    @property
    def s_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.h0, self.N + 1)

    @property
    def ds(self) -> float:
        return self.h0 / self.N

    def phi_values(self) -> np.ndarray:
        s = self.s_nodes
        if self.phi_kind == "cosine":
            v = np.cos(0.5 * math.pi * s / self.h0)
        else:
            v = 1.0 - (s / self.h0) ** 2
        v[-1] = 0.0
        return v


def a_priori_bounds(cfg: SimConfig) -> tuple[float, float]:
    """Box constants (C1, C2) of the run; see module docstring."""
    hab = cfg.habitat
    u0 = cfg.delta * cfg.phi_values()
    sup_u0 = float(np.max(np.abs(u0))) if cfg.delta > 0 else 0.0
    c1 = max(hab.sup_net_growth() / hab.inf_beta(), sup_u0)
    if cfg.phi_kind == "cosine":
        sup_du0 = cfg.delta * 0.5 * math.pi / cfg.h0
    else:
        sup_du0 = cfg.delta * 2.0 / cfg.h0
    u0_c1_norm = sup_u0 + sup_du0
    m = max(1.0 / cfg.h0, math.sqrt(hab.b2 / (2.0 * cfg.D)))
    if c1 > 0.0:
        m = max(m, 4.0 * u0_c1_norm / (3.0 * c1))
    c2 = 2.0 * cfg.mu * m * c1
    return c1, c2


@dataclass
class SimState:
    """Front-fixed solution snapshot: time, front radius/speed, profile v."""

    t: float
    h: float
    hp: float
    v: np.ndarray

    def physical_radii(self, cfg: SimConfig) -> np.ndarray:
        return cfg.s_nodes * (self.h / cfg.h0)


@dataclass
class RunDiagnostics:
    """Step-level extrema accumulated over one run (for the box checks)."""

    c1: float
    c2: float
    min_v: float = math.inf
    max_v: float = -math.inf
    min_hp: float = math.inf
    max_hp: float = -math.inf
    h_strictly_increasing: bool = True
    steps: int = 0
    halvings: int = 0

    def update(self, prev_h: float, state: SimState) -> None:
        self.min_v = min(self.min_v, float(state.v.min()))
        self.max_v = max(self.max_v, float(state.v.max()))
        self.min_hp = min(self.min_hp, state.hp)
        self.max_hp = max(self.max_hp, state.hp)
        if state.h <= prev_h:
            self.h_strictly_increasing = False
        self.steps += 1


@dataclass
class TimeSeries:
    """Sampled run history: (t, h, h', max u, mass, R0_front) per sample."""

    t: list[float] = field(default_factory=list)
    h: list[float] = field(default_factory=list)
    hp: list[float] = field(default_factory=list)
    max_u: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    R0_front: list[float] = field(default_factory=list)
    stop_reason: Optional[str] = None
    diagnostics: Optional[RunDiagnostics] = None

    def append(self, t, h, hp, max_u, mass, r0):
        if self.t and t <= self.t[-1]:
            raise ValueError("sample times must be strictly increasing")
        if self.h and h < self.h[-1]:
            raise ValueError("front radius must be nondecreasing")
        self.t.append(t)
        self.h.append(h)
        self.hp.append(hp)
        self.max_u.append(max_u)
        self.mass.append(mass)
        self.R0_front.append(r0)

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class SteadyState:
    """Positive steady profile on [0, R_trunc] (fixed ball or truncated space)."""

    r: np.ndarray
    u: np.ndarray
    variant: str
    R_trunc: float


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------


def front_speed_from_profile(v: np.ndarray, h: float, cfg: SimConfig) -> float:
    """Stefan speed -mu u_r(h) from the one-sided profile gradient.

    Uses the second-order stencil (3 v_N - 4 v_{N-1} + v_{N-2}) / (2 ds)
    with v_N = 0; first-order differencing measurably biases the speed.
    """
    ds = cfg.ds
    dv = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * ds)
    return float(-cfg.mu * (cfg.h0 / h) * dv)


def logistic_reaction(v: np.ndarray, b: np.ndarray, d: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Pointwise reaction rate v (b - d - beta v)."""
    return v * (b - d - beta * v)


def init_state(cfg: SimConfig) -> SimState:
    """Initial front-fixed state u0 = delta phi on the s-grid.

    Rejects data violating the admissibility conditions at grid resolution:
    the amplitude must be positive, the profile positive on [0, h0) with a
    flat axis and a zero boundary value.
    """
    if cfg.delta <= 0.0:
        raise InvalidInitialData("initial amplitude delta must be positive")
    v = cfg.delta * cfg.phi_values()
    if v[-1] != 0.0:
        raise InvalidInitialData("initial profile must vanish at the front")
    if np.any(v[:-1] <= 0.0):
        raise InvalidInitialData("initial profile must be positive inside the front")
    axis_slope = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * cfg.ds)
    # the one-sided stencil itself carries an O(ds^2) truncation error
    if abs(axis_slope) > max(1e-8, 4.0 * cfg.ds**2) * max(1.0, float(v.max())):
        raise InvalidInitialData("initial profile must be flat at the axis")
    hp0 = front_speed_from_profile(v, cfg.h0, cfg)
    return SimState(t=0.0, h=cfg.h0, hp=hp0, v=v)


def step(state: SimState, cfg: SimConfig, dt: Optional[float] = None) -> SimState:
    """Advance one semi-implicit step of size dt (default cfg.dt).

    Implicit tridiagonal diffusion, explicit advection and reaction, then
    the Stefan update of the front.  Raises StabilityFailure when the new
    profile leaves [-1e-10, C1 (1 + 1e-3)] or the front speed leaves its
    admissible range; the caller is expected to halve dt and retry.
    """
    if dt is None:
        dt = cfg.dt
    N = cfg.N
    ds = cfg.ds
    s = cfg.s_nodes
    h, hp = state.h, state.hp
    v = state.v

    r_phys = s * (h / cfg.h0)
    hab = cfg.habitat
    b = hab.b(r_phys)
    d = hab.d(r_phys)
    beta = hab.beta(r_phys)

    # explicit terms on the unknowns j = 0 .. N-1
    v_s = np.zeros(N)
    v_s[1:] = (v[2:] - v[:-2]) / (2.0 * ds)   # axis node: v_s(0) = 0 by symmetry
    adv = (hp / h) * s[:N] * v_s
    react = logistic_reaction(v[:N], b[:N], d[:N], beta[:N])
    rhs = v[:N] + dt * (adv + react)

    # implicit diffusion: (I + dt kappa (-Lap_s)) v_new = rhs
    kappa = cfg.D * (cfg.h0 / h) ** 2
    n = hab.n
    inv2 = kappa / ds**2
    sub = np.zeros(N)
    diag = np.ones(N)
    sup = np.zeros(N)
    diag[0] += dt * 2.0 * n * inv2
    sup[0] = -dt * 2.0 * n * inv2
    sj = s[1:N]
    drift = kappa * (n - 1) / (2.0 * sj * ds)
    sub[1:] = -dt * (inv2 - drift)
    diag[1:] += dt * 2.0 * inv2
    sup[1:] = -dt * (inv2 + drift)

    ab = np.zeros((3, N))
    ab[0, 1:] = sup[:-1]
    ab[1, :] = diag
    ab[2, :-1] = sub[1:]
    v_new = np.empty(N + 1)
    v_new[:N] = solve_banded((1, 1), ab, rhs)
    v_new[N] = 0.0

    vmin = float(v_new.min())
    if vmin < -_NEG_TOL:
        raise StabilityFailure(f"profile undershoot {vmin:.3e}; dt too large")
    if float(v_new.max()) > cfg.c1_bound * (1.0 + _BOX_SLACK):
        raise StabilityFailure("profile exceeded its a-priori ceiling; dt too large")
    np.clip(v_new, 0.0, None, out=v_new)

    hp_new = front_speed_from_profile(v_new, h, cfg)
    if cfg.mu > 0.0:
        if hp_new <= 0.0:
            raise StabilityFailure("front speed lost positivity; dt too large")
        if hp_new > cfg.c2_bound * (1.0 + 1e-6):
            raise StabilityFailure("front speed exceeded its a-priori ceiling")
    h_new = float(h + dt * hp_new)
    return SimState(t=float(state.t + dt), h=h_new, hp=hp_new, v=v_new)


StopRule = Callable[[TimeSeries, SimState], Optional[str]]


def _record(ts: TimeSeries, state: SimState, cfg: SimConfig) -> None:
    r = state.physical_radii(cfg)
    n = cfg.habitat.n
    mass = float(np.trapezoid(state.v * np.power(r, n - 1), r))
    r0 = eigen.R0_front(cfg.habitat, cfg.D, state.h, N=cfg.eigen_N)
    ts.append(state.t, state.h, state.hp, float(state.v.max()), mass, r0)


def run(
    cfg: SimConfig,
    stop: Optional[StopRule] = None,
    on_sample: Optional[Callable[[SimState], None]] = None,
) -> tuple[TimeSeries, SimState]:
    """Integrate until T_max or until the stop rule fires.

    Samples (and the optional ``on_sample`` hook) land exactly on multiples
    of ``output_interval``; the threshold value of the running domain is
    evaluated only at those times.  Step sizes respect the advection CFL
    dt (h'/h)(N/h0) <= 1/2 and the reaction accuracy cap dt b2 <= 0.1, and
    are halved persistently (up to 10 times) on StabilityFailure.

    Deterministic: identical configs reproduce bit-identical series.
    """
    state = init_state(cfg)
    diag = RunDiagnostics(c1=cfg.c1_bound, c2=cfg.c2_bound)
    ts = TimeSeries(diagnostics=diag)
    _record(ts, state, cfg)
    if on_sample is not None:
        on_sample(state)
    if stop is not None:
        reason = stop(ts, state)
        if reason:
            ts.stop_reason = reason
            return ts, state

    dt_base = cfg.dt
    dt_react = 0.1 / cfg.habitat.b2
    if cfg.c1_bound > 0.0:
        dt_react = min(dt_react, 0.5 / (cfg.habitat.b2 * max(1.0, cfg.c1_bound)))
    k_out = 1
    t_next = min(k_out * cfg.output_interval, cfg.T_max)
    log.info("run start: D=%g mu=%g h0=%g delta=%g N=%d", cfg.D, cfg.mu, cfg.h0, cfg.delta, cfg.N)

    while state.t < cfg.T_max * (1.0 - 1e-14):
        dt_cfl = 0.5 * state.h * cfg.h0 / (max(state.hp, 1e-300) * cfg.N)
        dt_step = min(dt_base, dt_react, dt_cfl, t_next - state.t)
        if dt_step <= 1e-15 * max(1.0, state.t):
            # float residue from the clipped step; snap onto the sample time
            state.t = t_next
        else:
            prev_h = state.h
            try:
                state = step(state, cfg, dt_step)
            except StabilityFailure:
                diag.halvings += 1
                if diag.halvings > _MAX_HALVINGS:
                    raise
                dt_base *= 0.5
                log.info("step rejected at t=%.6g; dt halved to %g", state.t, dt_base)
                continue
            diag.update(prev_h, state)
        if state.t >= t_next * (1.0 - 1e-14):
            _record(ts, state, cfg)
            if on_sample is not None:
                on_sample(state)
            if stop is not None:
                reason = stop(ts, state)
                if reason:
                    ts.stop_reason = reason
                    break
            k_out += 1
            t_next = min(k_out * cfg.output_interval, cfg.T_max)
    log.info("run end: t=%.6g h=%.6g stop=%s", state.t, state.h, ts.stop_reason)
    return ts, state


def front_speed_estimate(ts: TimeSeries, window: float = 0.2) -> float:
    """Least-squares slope of h(t) over the trailing ``window`` fraction."""
    if len(ts) < 10:
        raise InsufficientData("need at least 10 samples for a speed estimate")
    if not (0.0 < window <= 1.0):
        raise ValueError("window must lie in (0, 1]")
    m = max(2, math.ceil(window * len(ts)))
    t = np.asarray(ts.t[-m:])
    h = np.asarray(ts.h[-m:])
    slope, _ = np.polyfit(t, h, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# Steady states
# ---------------------------------------------------------------------------


def _steady_operator(D: float, n: int, r: np.ndarray, dr: float, variant: str):
    """Diagonals of -D Lap_r on the steady-state unknowns.

    fixed-ball: unknowns r_0 .. r_{N-1}, Dirichlet u(R) = 0.
    entire-space: unknowns r_0 .. r_N, Neumann ghost at the far end.
    """
    m = r.size
    inv2 = D / dr**2
    sub = np.zeros(m)
    diag = np.zeros(m)
    sup = np.zeros(m)
    diag[0] = 2.0 * n * inv2
    sup[0] = -2.0 * n * inv2
    ri = r[1:m if variant == "fixed-ball" else m - 1]
    drift = D * (n - 1) / (2.0 * ri * dr)
    end = m if variant == "fixed-ball" else m - 1
    sub[1:end] = -(inv2 - drift)
    diag[1:end] = 2.0 * inv2
    sup[1:end] = -(inv2 + drift)
    if variant != "fixed-ball":
        # far-end Neumann ghost: u_{N+1} = u_{N-1}
        sub[-1] = -2.0 * inv2
        diag[-1] = 2.0 * inv2
    return sub, diag, sup


def _banded(sub, diag, sup):
    m = diag.size
    ab = np.zeros((3, m))
    ab[0, 1:] = sup[:-1]
    ab[1, :] = diag
    ab[2, :-1] = sub[1:]
    return ab


def _steady_residual(sub, diag, sup, u, m_growth, beta):
    Au = diag * u
    Au[:-1] += sup[:-1] * u[1:]
    Au[1:] += sub[1:] * u[:-1]
    return Au - u * (m_growth - beta * u)


def solve_steady_state(
    hab: Habitat,
    D: float,
    R: float,
    N: int = 2000,
    variant: str = "fixed-ball",
    newton_maxiter: int = 100,
) -> SteadyState:
    """Positive steady profile of -D Lap u = u (b - d - beta u).

    fixed-ball imposes u(R) = 0 and requires R0(D, B_R) > 1 (otherwise the
    only nonnegative steady state is 0 and BelowThreshold is raised);
    entire-space imposes a far Neumann condition on the truncated domain
    and requires a favorable far field.  Newton iteration starts from
    max(b - d, eps) / beta and falls back to pseudo-timestepping if it
    strays; convergence is residual sup-norm < 1e-10.
    """
    if variant not in ("fixed-ball", "entire-space"):
        raise ValueError(f"unknown steady-state variant {variant!r}")
    if variant == "fixed-ball":
        r0 = eigen.compute_R0(hab, D, R, N=min(N, 1024))
        if r0 <= 1.0:
            raise BelowThreshold(f"threshold value {r0:.6g} <= 1 on the requested ball")
    else:
        tl = tail_limits(hab)
        if not tl.satisfies_H:
            raise BelowThreshold("far-field net growth must be positive for an entire-space state")

    nodes = np.linspace(0.0, R, N + 1)
    dr = R / N
    r = nodes[:N] if variant == "fixed-ball" else nodes
    sub, diag, sup = _steady_operator(D, hab.n, r, dr, variant)
    m_growth = hab.b(r) - hab.d(r)
    beta = hab.beta(r)

    u = np.maximum(m_growth, 1e-3) / beta
    u = _newton_polish(sub, diag, sup, u, m_growth, beta, newton_maxiter)
    if u is None or float(np.min(u[1:] if variant == "fixed-ball" else u)) <= 0.0:
        u = np.maximum(m_growth, 1e-3) / beta
        u = _pseudo_timestep(sub, diag, sup, u, m_growth, beta)
        u = _newton_polish(sub, diag, sup, u, m_growth, beta, newton_maxiter)
        if u is None:
            raise NewtonDivergence("steady-state Newton iteration failed to converge")

    if variant == "fixed-ball":
        full = np.append(u, 0.0)
    else:
        full = u
    if float(full[:N].min()) <= 0.0:
        raise NewtonDivergence("steady-state solve collapsed to a nonpositive profile")
    return SteadyState(r=nodes, u=full, variant=variant, R_trunc=R)


def _newton_polish(sub, diag, sup, u, m_growth, beta, maxiter):
    # converged on residual < 1e-10 or on a machine-scale Newton step (the
    # residual of a roundoff-stationary profile scales with D/dr^2 and can
    # sit above any fixed absolute tolerance on fine grids)
    u = u.copy()
    for _ in range(maxiter):
        F = _steady_residual(sub, diag, sup, u, m_growth, beta)
        res = float(np.max(np.abs(F)))
        if not math.isfinite(res):
            return None
        if res < 1e-10:
            return u
        jac_diag = diag - m_growth + 2.0 * beta * u
        ab = _banded(sub, jac_diag, sup)
        try:
            du = solve_banded((1, 1), ab, -F)
        except np.linalg.LinAlgError:
            return None
        u = u + du
        if float(np.max(np.abs(du))) < 1e-12 * max(1.0, float(np.max(np.abs(u)))):
            return u
    return None


def _pseudo_timestep(sub, diag, sup, u, m_growth, beta, steps: int = 800, dtau: float = 0.05):
    """Semi-implicit relaxation toward the attracting steady profile."""
    m = diag.size
    ab = _banded(dtau * sub, 1.0 + dtau * diag, dtau * sup)
    for _ in range(steps):
        rhs = u + dtau * u * (m_growth - beta * u)
        u = solve_banded((1, 1), ab, rhs)
        np.clip(u, 0.0, None, out=u)
    return u


def steady_residual_norm(state: SteadyState, hab: Habitat, D: float) -> float:
    """Sup-norm of the discrete steady equation at the stored samples."""
    N = state.r.size - 1
    dr = state.r[1] - state.r[0]
    if state.variant == "fixed-ball":
        r = state.r[:N]
        u = state.u[:N]
    else:
        r = state.r
        u = state.u
    sub, diag, sup = _steady_operator(D, hab.n, r, dr, state.variant)
    F = _steady_residual(sub, diag, sup, u, hab.b(r) - hab.d(r), hab.beta(r))
    return float(np.max(np.abs(F)))


def default_truncation_radius(hab: Habitat, D: float, N: int = 800) -> float:
    """Truncation radius max(10 h*, 50) for entire-space steady solves."""
    res = eigen.find_hstar(hab, D, N=N)
    if res.status != "ok":
        return 50.0
    return max(10.0 * res.value, 50.0)
