"""Spreading/vanishing verdicts, the sharp amplitude threshold, and sweeps.

Every run ends in one of two ways: the front escapes to infinity and the
density locks onto the entire-space steady profile (spreading), or the
front stalls below the critical radius h* and the density decays to zero
(vanishing).  :func:`classify_outcome` turns a sampled time series into a
verdict using two certificates and one decay test:

  * spreading is certified as soon as the threshold value of the occupied
    ball reaches 1 (the domain can only grow, so the certificate is
    permanent), or as soon as the front itself passes h*;
  * vanishing is declared when the density maximum and the front speed
    stay below tiny tolerances over the trailing window while the front
    remains below h*;
  * anything else is undetermined (near-critical runs are reported as
    such rather than guessed).

:func:`find_delta0` bisects the initial amplitude between a vanishing and
a spreading endpoint; :func:`sweep` classifies a parameter sweep and
checks the verdict patterns that are guaranteed (all spreading at or below
the critical diffusion, all spreading at or above the critical radius,
and a single verdict flip along an amplitude sweep).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from . import eigen, pde
from .errors import BracketFailure, SweepConsistencyError

log = logging.getLogger(__name__)

SPREADING = "spreading"
VANISHING = "vanishing"
UNDETERMINED = "undetermined"

SWEEPABLE = ("D", "h0", "delta", "mu")


@dataclass(frozen=True)
class ClassifyRules:
    """Decision tolerances.

    ``eps_R0`` and ``eps_h`` guard the spreading certificates against
    grid-level false positives near criticality; ``eps_vanish`` and
    ``eps_front`` define numerical extinction, tested over the trailing
    ``trailing_window`` fraction of samples.
    """

    eps_R0: float = 1e-3
    eps_h: float = 1e-3
    eps_vanish: float = 1e-5
    eps_front: float = 1e-6
    trailing_window: float = 0.2
    min_samples: int = 10


@dataclass(frozen=True)
class Outcome:
    """Verdict with its evidence and an estimate of the final radius."""

    verdict: str
    h_inf_estimate: float
    t_decided: float
    evidence: str


@dataclass(frozen=True)
class DichotomyResult:
    """Sharp-amplitude bracket: vanishing at ``bracket[0]``, spreading at
    ``bracket[1]`` (except in the trivial delta0 = 0 case), delta0 at the
    midpoint.  ``aborted`` marks a bisection arm stopped on a persistent
    undetermined verdict; ``achieved_tol`` is the final bracket ratio - 1.
    """

    delta0: float
    bracket: tuple[float, float]
    runs: int
    achieved_tol: float
    aborted: bool = False


@dataclass(frozen=True)
class SweepRow:
    value: float
    verdict: str
    t_decided: float
    h_final: float


def classify_outcome(
    ts: pde.TimeSeries, hstar: float, rules: ClassifyRules = ClassifyRules()
) -> Outcome:
    """Verdict for a recorded time series given the critical radius h*.

    ``hstar`` may be ``math.inf`` when no finite critical radius exists;
    the front-radius certificate then never fires and vanishing needs only
    the decay test.
    """
    if len(ts) == 0:
        raise ValueError("cannot classify an empty time series")

    t_fire = math.inf
    evidence = ""
    for i, r0 in enumerate(ts.R0_front):
        if r0 >= 1.0 + rules.eps_R0:
            t_fire = ts.t[i]
            evidence = "R0_front >= 1"
            break
    if math.isfinite(hstar):
        for i, h in enumerate(ts.h):
            if h >= hstar * (1.0 + rules.eps_h):
                if ts.t[i] < t_fire:
                    t_fire = ts.t[i]
                    evidence = "h >= h_star"
                break
    if math.isfinite(t_fire):
        return Outcome(SPREADING, math.inf, t_fire, evidence)

    if len(ts) >= rules.min_samples:
        m = max(1, math.ceil(rules.trailing_window * len(ts)))
        tail_u = ts.max_u[-m:]
        tail_hp = ts.hp[-m:]
        if (
            max(tail_u) < rules.eps_vanish
            and max(tail_hp) < rules.eps_front
            and ts.h[-1] < hstar
        ):
            return Outcome(VANISHING, ts.h[-1], ts.t[-1], "sustained decay")

    return Outcome(UNDETERMINED, ts.h[-1], math.nan, "no rule fired")


class VerdictStopRule:
    """Run-time stop rule: halts a simulation as soon as it is classifiable.

    Evaluates :func:`classify_outcome` on the sampled prefix, so a stopped
    run classifies identically to the prefix it recorded.
    """

    def __init__(self, hstar: float, rules: ClassifyRules = ClassifyRules()):
        self.hstar = hstar
        self.rules = rules

    def __call__(self, ts: pde.TimeSeries, state: pde.SimState) -> Optional[str]:
        outcome = classify_outcome(ts, self.hstar, self.rules)
        if outcome.verdict != UNDETERMINED:
            return outcome.verdict
        return None


def critical_radius(cfg: pde.SimConfig, N: int = 1024, tol: float = 1e-8) -> float:
    """h* for the run's habitat and diffusion rate (inf when none exists)."""
    res = eigen.find_hstar(cfg.habitat, cfg.D, N=N, tol=tol)
    return res.value if res.status == "ok" else math.inf


def run_and_classify(
    cfg: pde.SimConfig,
    hstar: Optional[float] = None,
    rules: ClassifyRules = ClassifyRules(),
    stop_early: bool = True,
) -> tuple[Outcome, pde.TimeSeries]:
    """Run one simulation and classify it (with early stopping by default)."""
    if hstar is None:
        hstar = critical_radius(cfg)
    stop = VerdictStopRule(hstar, rules) if stop_early else None
    ts, _ = pde.run(cfg, stop=stop)
    return classify_outcome(ts, hstar, rules), ts


def find_delta0(
    cfg: pde.SimConfig,
    lo: float,
    hi: float,
    tol: float = 0.05,
    rules: ClassifyRules = ClassifyRules(),
    hstar: Optional[float] = None,
    hi_cap: float = 1e4,
    t_extension: float = 2.0,
) -> DichotomyResult:
    """Sharp initial-amplitude threshold by bisection on delta.

    Requires a vanishing verdict at ``lo``; the spreading endpoint ``hi``
    is grown geometrically if needed (BracketFailure once it reaches
    ``hi_cap`` while still not spreading, which is the expected outcome
    when no favorable site exists).  When the initial radius already meets
    the critical radius, spreading holds for every amplitude and delta0 = 0
    is returned without running anything.

    An undetermined midpoint is retried once with T_max extended by
    ``t_extension``; if still undetermined the arm is aborted and the
    current bracket returned with ``aborted=True``.
    """
    if not (0.0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    if hstar is None:
        hstar = critical_radius(cfg)
    if cfg.h0 >= hstar:
        return DichotomyResult(0.0, (0.0, 0.0), runs=0, achieved_tol=0.0)

    runs = 0

    def verdict_at(delta: float, extend: bool = False) -> str:
        nonlocal runs
        c = replace(cfg, delta=delta, dt=cfg.dt)
        if extend:
            c = replace(c, T_max=cfg.T_max * t_extension, dt=cfg.dt)
        runs += 1
        outcome, _ = run_and_classify(c, hstar=hstar, rules=rules)
        log.info("delta=%.6g -> %s (run %d)", delta, outcome.verdict, runs)
        return outcome.verdict

    v_lo = verdict_at(lo)
    while v_lo != VANISHING:
        lo *= 0.5
        if lo < 1e-10:
            raise BracketFailure("no vanishing amplitude found while shrinking lo")
        v_lo = verdict_at(lo)

    v_hi = verdict_at(hi)
    while v_hi != SPREADING:
        hi *= 2.0
        if hi > hi_cap:
            raise BracketFailure(
                f"no spreading amplitude up to the cap {hi_cap:g}; "
                "the habitat may have no favorable site"
            )
        v_hi = verdict_at(hi)

    aborted = False
    while hi / lo - 1.0 > tol:
        mid = 0.5 * (lo + hi)
        v = verdict_at(mid)
        if v == UNDETERMINED:
            v = verdict_at(mid, extend=True)
        if v == SPREADING:
            hi = mid
        elif v == VANISHING:
            lo = mid
        else:
            aborted = True
            break

    return DichotomyResult(
        delta0=0.5 * (lo + hi),
        bracket=(lo, hi),
        runs=runs,
        achieved_tol=hi / lo - 1.0,
        aborted=aborted,
    )


def sweep(
    parameter: str,
    values: Sequence[float],
    cfg: pde.SimConfig,
    rules: ClassifyRules = ClassifyRules(),
    check_guarantees: bool = True,
) -> list[SweepRow]:
    """Classify independent runs along one parameter axis.

    Where a verdict pattern is guaranteed it is asserted: spreading for
    every D at or below the critical diffusion of the initial ball,
    spreading for every h0 at or above the critical radius, and at most
    one vanishing-to-spreading flip along an amplitude sweep.
    """
    if parameter not in SWEEPABLE:
        raise ValueError(f"parameter must be one of {SWEEPABLE}")
    if list(values) != sorted(values):
        raise ValueError("sweep values must be sorted ascending")

    hstar_cache: Optional[float] = None
    rows: list[SweepRow] = []
    for value in values:
        c = replace(cfg, **{parameter: value}, dt=None if parameter in ("D", "h0") else cfg.dt)
        if parameter == "D" or hstar_cache is None:
            hstar_cache = critical_radius(c)
        outcome, ts = run_and_classify(c, hstar=hstar_cache, rules=rules)
        rows.append(SweepRow(value, outcome.verdict, outcome.t_decided, ts.h[-1]))

    if check_guarantees:
        _check_sweep_guarantees(parameter, rows, cfg)
    return rows


def _check_sweep_guarantees(parameter: str, rows: list[SweepRow], cfg: pde.SimConfig) -> None:
    margin = 1e-3
    if parameter == "D":
        dstar = eigen.find_Dstar(cfg.habitat, cfg.h0, N=1024)
        if dstar.status == "ok":
            for row in rows:
                if row.value <= dstar.value * (1.0 - margin) and row.verdict != SPREADING:
                    raise SweepConsistencyError(
                        f"D={row.value:g} is below the critical diffusion "
                        f"{dstar.value:g} but the verdict is {row.verdict}"
                    )
    elif parameter == "h0":
        hstar = critical_radius(cfg)
        if math.isfinite(hstar):
            for row in rows:
                if row.value >= hstar * (1.0 + margin) and row.verdict != SPREADING:
                    raise SweepConsistencyError(
                        f"h0={row.value:g} is above the critical radius "
                        f"{hstar:g} but the verdict is {row.verdict}"
                    )
    elif parameter == "delta":
        seen_spreading_at = None
        for row in rows:
            if row.verdict == SPREADING and seen_spreading_at is None:
                seen_spreading_at = row.value
            if row.verdict == VANISHING and seen_spreading_at is not None:
                raise SweepConsistencyError(
                    f"vanishing at delta={row.value:g} above a spreading "
                    f"verdict at delta={seen_spreading_at:g}"
                )
