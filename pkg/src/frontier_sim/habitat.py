"""Radially symmetric habitat description.

The environment is encoded by three positive radial coefficients: a birth
rate b(r), a death rate d(r) and a crowding strength beta(r).  Each one is a
:class:`CoefficientProfile` drawn from a small set of closed-form kinds so
that tail limits, bounds and breakpoints are exact rather than sampled
guesses.  A :class:`Habitat` bundles the three profiles with the spatial
dimension ``n`` and the global bounds ``b1 <= coeff <= b2``.

Sites where b > d are favorable, sites where b < d are unfavorable;
:func:`classify_habitat` locates those intervals on a ball of radius R and
computes the volume-averaged birth/death rates with radial weight r^(n-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

PROFILE_KINDS = ("constant", "step", "linear-ramp", "tanh-transition", "tabulated")

_PARAM_COUNTS = {
    "constant": 1,       # (value,)
    "step": 3,           # (location, left, right)
    "linear-ramp": 4,    # (r_start, v_start, r_end, v_end)
    "tanh-transition": 4,  # (center, width, left, right)
}


@dataclass(frozen=True)
class CoefficientProfile:
    """One radial coefficient, defined and positive for every r >= 0.

    Tabulated profiles interpolate linearly between samples and extend
    constantly beyond the last one; all other kinds are closed forms.  The
    step kind carries a genuine jump and evaluates to the midpoint of its
    two levels exactly at the jump location (this makes trapezoid
    integration across the jump exact when the location is a mesh node).
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        p = self.params
        if self.kind == "tabulated":
            if len(p) < 4 or len(p) % 2 != 0:
                raise ValueError("tabulated profile needs at least two (r, value) pairs")
            radii = p[0::2]
            if any(r1 <= r0 for r0, r1 in zip(radii, radii[1:])):
                raise ValueError("tabulated radii must be strictly increasing")
            if radii[0] < 0.0:
                raise ValueError("tabulated radii must be nonnegative")
        else:
            if len(p) != _PARAM_COUNTS[self.kind]:
                raise ValueError(
                    f"{self.kind} profile expects {_PARAM_COUNTS[self.kind]} parameters, got {len(p)}"
                )
        if self.kind == "linear-ramp" and p[2] <= p[0]:
            raise ValueError("ramp end radius must exceed start radius")
        if self.kind == "tanh-transition" and p[1] <= 0.0:
            raise ValueError("tanh transition width must be positive")
        lo, _ = self.bounds()
        if lo <= 0.0:
            raise ValueError("profile values must stay positive")

    def __call__(self, r):
        return eval_profile(self, r)

    def breakpoints(self) -> tuple[float, ...]:
        """Radii where the profile is non-smooth (kinks, jumps, knots)."""
        p = self.params
        if self.kind == "constant":
            return ()
        if self.kind == "step":
            return (p[0],)
        if self.kind == "linear-ramp":
            return (p[0], p[2])
        if self.kind == "tanh-transition":
            # smooth, but the transition window matters for mesh refinement
            return (p[0] - 4.0 * p[1], p[0], p[0] + 4.0 * p[1])
        return tuple(p[0::2])

    def tail_value(self) -> float:
        """Limit of the profile as r -> infinity (exact for every kind)."""
        p = self.params
        if self.kind == "constant":
            return p[0]
        if self.kind == "step":
            return p[2]
        if self.kind == "linear-ramp":
            return p[3]
        if self.kind == "tanh-transition":
            return p[3]
        return p[-1]

    def bounds(self) -> tuple[float, float]:
        """Exact (inf, sup) of the profile over [0, infinity)."""
        p = self.params
        if self.kind == "constant":
            return p[0], p[0]
        if self.kind == "step":
            return min(p[1], p[2]), max(p[1], p[2])
        if self.kind == "linear-ramp":
            return min(p[1], p[3]), max(p[1], p[3])
        if self.kind == "tanh-transition":
            left, right = p[2], p[3]
            lo, hi = min(left, right), max(left, right)
            # value at r=0 may overshoot toward `left` only; range stays in [lo, hi]
            return lo, hi
        vals = p[1::2]
        return min(vals), max(vals)


def constant(value: float) -> CoefficientProfile:
    return CoefficientProfile("constant", (value,))


def step(location: float, left: float, right: float) -> CoefficientProfile:
    return CoefficientProfile("step", (location, left, right))


def linear_ramp(r_start: float, v_start: float, r_end: float, v_end: float) -> CoefficientProfile:
    return CoefficientProfile("linear-ramp", (r_start, v_start, r_end, v_end))


def tanh_transition(center: float, width: float, left: float, right: float) -> CoefficientProfile:
    return CoefficientProfile("tanh-transition", (center, width, left, right))


def tabulated(points: list[tuple[float, float]]) -> CoefficientProfile:
    flat: list[float] = []
    for r, v in points:
        flat.extend((r, v))
    return CoefficientProfile("tabulated", tuple(flat))


def eval_profile(p: CoefficientProfile, r: Union[float, np.ndarray]):
    """Evaluate a profile at radius r >= 0 (scalar or array).

    Constant extension beyond the tabulated/ramp range; the step kind
    returns the midpoint of its two levels exactly at the jump.
    """
    scalar = np.isscalar(r)
    rr = np.asarray(r, dtype=float)
    q = p.params
    if p.kind == "constant":
        out = np.full_like(rr, q[0])
    elif p.kind == "step":
        out = np.where(rr < q[0], q[1], q[2])
        out = np.where(rr == q[0], 0.5 * (q[1] + q[2]), out)
    elif p.kind == "linear-ramp":
        out = np.interp(rr, [q[0], q[2]], [q[1], q[3]])
    elif p.kind == "tanh-transition":
        center, width, left, right = q
        out = left + (right - left) * 0.5 * (1.0 + np.tanh((rr - center) / width))
    else:
        out = np.interp(rr, q[0::2], q[1::2])
    return float(out) if scalar else out


@dataclass(frozen=True)
class Habitat:
    """Coefficient triple plus spatial dimension and global bounds.

    Immutable after construction; safe to share across concurrent solves.
    Construction checks b1 <= b(r), d(r), beta(r) <= b2 on a dense mesh
    that includes every profile breakpoint, which is exact for the
    supported kinds (each is piecewise monotone between breakpoints).
    """

    b: CoefficientProfile
    d: CoefficientProfile
    beta: CoefficientProfile
    n: int = 1
    b1: float = 1e-3
    b2: float = 1e3

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError("spatial dimension n must be an integer >= 1")
        if not (0.0 < self.b1 <= self.b2):
            raise ValueError("bounds must satisfy 0 < b1 <= b2")
        mesh = self.validation_mesh()
        tol = 1e-12
        for name, prof in (("b", self.b), ("d", self.d), ("beta", self.beta)):
            vals = prof(mesh)
            if vals.min() < self.b1 - tol or vals.max() > self.b2 + tol:
                raise ValueError(
                    f"coefficient {name} leaves the declared range [{self.b1}, {self.b2}]"
                )

    def validation_mesh(self) -> np.ndarray:
        pts = [bp for prof in (self.b, self.d, self.beta) for bp in prof.breakpoints()]
        span = max(100.0, 2.0 * max(pts, default=0.0))
        mesh = np.linspace(0.0, span, 4096)
        if pts:
            mesh = np.union1d(mesh, [p for p in pts if 0.0 <= p <= span])
        return mesh

    def net_growth(self, r):
        """b(r) - d(r), the local net reproduction rate."""
        return self.b(r) - self.d(r)

    def sup_net_growth(self) -> float:
        mesh = self.validation_mesh()
        return float(np.max(self.b(mesh) - self.d(mesh)))

    def inf_beta(self) -> float:
        lo, _ = self.beta.bounds()
        return lo


@dataclass(frozen=True)
class TailLimits:
    """Limits of the coefficients at infinity.

    ``alpha`` is the net growth rate in the far field and ``beta_inf`` the
    far-field crowding strength; ``satisfies_H`` records whether the far
    field is favorable (alpha > 0), the standing assumption for entire-space
    steady states and spreading-speed analysis.
    """

    alpha: float
    beta_inf: float
    satisfies_H: bool


def tail_limits(hab: Habitat) -> TailLimits:
    alpha = hab.b.tail_value() - hab.d.tail_value()
    beta_inf = hab.beta.tail_value()
    return TailLimits(alpha=alpha, beta_inf=beta_inf, satisfies_H=alpha > 0.0)


@dataclass(frozen=True)
class HabitatReport:
    """Favorable/unfavorable structure of a ball of radius R.

    Intervals are disjoint, sorted, and together with the neutral set they
    tile [0, R].  Averages are volume averages with weight r^(n-1).
    """

    R: float
    favorable_intervals: tuple[tuple[float, float], ...]
    unfavorable_intervals: tuple[tuple[float, float], ...]
    average_birth: float
    average_death: float

    @property
    def is_favorable(self) -> bool:
        return self.average_birth > self.average_death


def _refine_crossing(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (flo > 0) == (fm > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def classify_habitat(hab: Habitat, R: float, mesh: int = 512) -> HabitatReport:
    """Locate favorable/unfavorable intervals and compute volume averages.

    Sign changes of b - d are detected on a mesh that includes all profile
    breakpoints and are sharpened by bisection; averages use the composite
    trapezoid rule with weight r^(n-1) on a 4x refined mesh.
    """
    if R <= 0.0:
        raise ValueError("R must be positive")
    if mesh < 16:
        raise ValueError("mesh must be at least 16")

    f = lambda r: hab.net_growth(r)
    grid = np.linspace(0.0, R, mesh + 1)
    bps = [bp for prof in (hab.b, hab.d) for bp in prof.breakpoints() if 0.0 < bp < R]
    if bps:
        grid = np.union1d(grid, bps)
    fv = f(grid)

    cuts = [0.0]
    for i in range(len(grid) - 1):
        if fv[i] == 0.0 or fv[i + 1] == 0.0:
            continue
        if (fv[i] > 0) != (fv[i + 1] > 0):
            cuts.append(_refine_crossing(f, grid[i], grid[i + 1]))
    cuts.append(R)

    favorable: list[tuple[float, float]] = []
    unfavorable: list[tuple[float, float]] = []
    for lo, hi in zip(cuts, cuts[1:]):
        if hi - lo <= 0.0:
            continue
        sign = f(0.5 * (lo + hi))
        if sign > 0.0:
            _append_merged(favorable, (lo, hi))
        elif sign < 0.0:
            _append_merged(unfavorable, (lo, hi))

    fine = np.linspace(0.0, R, 4 * mesh + 1)
    if bps:
        fine = np.union1d(fine, bps)
    w = np.power(fine, hab.n - 1)
    volume = R**hab.n / hab.n
    avg_b = float(np.trapezoid(hab.b(fine) * w, fine) / volume)
    avg_d = float(np.trapezoid(hab.d(fine) * w, fine) / volume)

    return HabitatReport(
        R=R,
        favorable_intervals=tuple(favorable),
        unfavorable_intervals=tuple(unfavorable),
        average_birth=avg_b,
        average_death=avg_d,
    )


def _append_merged(intervals: list[tuple[float, float]], item: tuple[float, float]) -> None:
    if intervals and math.isclose(intervals[-1][1], item[0], rel_tol=0.0, abs_tol=1e-12):
        intervals[-1] = (intervals[-1][0], item[1])
    else:
        intervals.append(item)
