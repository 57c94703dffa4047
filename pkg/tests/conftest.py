"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from frontier_sim import habitat as hb


@pytest.fixture(scope="session")
def const_habitat() -> hb.Habitat:
    """b = 2, d = 1, beta = 1 on the line: net growth 1, carrying capacity 1."""
    return hb.Habitat(
        b=hb.constant(2.0),
        d=hb.constant(1.0),
        beta=hb.constant(1.0),
        n=1,
        b1=0.5,
        b2=2.5,
    )


def random_profile(rng: np.random.Generator, lo: float = 0.6, hi: float = 2.4) -> hb.CoefficientProfile:
    kind = rng.choice(["constant", "step", "linear-ramp", "tanh-transition", "tabulated"])
    val = lambda: float(rng.uniform(lo, hi))
    if kind == "constant":
        return hb.constant(val())
    if kind == "step":
        return hb.step(float(rng.uniform(0.3, 2.5)), val(), val())
    if kind == "linear-ramp":
        r0 = float(rng.uniform(0.0, 1.5))
        return hb.linear_ramp(r0, val(), r0 + float(rng.uniform(0.3, 2.0)), val())
    if kind == "tanh-transition":
        return hb.tanh_transition(
            float(rng.uniform(0.5, 2.5)), float(rng.uniform(0.1, 1.0)), val(), val()
        )
    radii = np.cumsum(rng.uniform(0.2, 1.0, size=4))
    return hb.tabulated([(float(r), val()) for r in radii])


def random_habitat(rng: np.random.Generator, n: int | None = None) -> hb.Habitat:
    if n is None:
        n = int(rng.integers(1, 4))
    return hb.Habitat(
        b=random_profile(rng),
        d=random_profile(rng),
        beta=random_profile(rng),
        n=n,
        b1=0.3,
        b2=3.0,
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed"):
        for report in terminalreporter.stats.get(status, []):
            name = report.nodeid.rsplit("::", 1)[-1]
            if "test_acceptance" in report.nodeid and name.startswith("test_criterion"):
                lines.append((name, status.upper()))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{status:<6} {name}")
