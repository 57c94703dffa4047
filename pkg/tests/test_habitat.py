"""Coefficient profiles, tail limits and favorable/unfavorable structure."""

import math

import numpy as np
import pytest

from frontier_sim import habitat as hb

from conftest import random_habitat


def make_habitat(b, d, beta=None, n=1, b1=0.3, b2=3.0):
    return hb.Habitat(b=b, d=d, beta=beta or hb.constant(1.0), n=n, b1=b1, b2=b2)


class TestEvalProfile:
    def test_constant(self):
        assert hb.eval_profile(hb.constant(2.0), 5.0) == 2.0

    def test_tabulated_midpoint(self):
        p = hb.tabulated([(0.0, 1.0), (2.0, 3.0)])
        assert hb.eval_profile(p, 1.0) == pytest.approx(2.0, abs=1e-15)

    def test_tabulated_constant_extension(self):
        p = hb.tabulated([(0.0, 1.0), (2.0, 3.0)])
        assert hb.eval_profile(p, 10.0) == 3.0

    def test_tanh_midpoint(self):
        p = hb.tanh_transition(10.0, 1.0, 2.0, 1.0)
        assert hb.eval_profile(p, 10.0) == pytest.approx(1.5, abs=1e-15)

    def test_step_levels_and_jump_midpoint(self):
        p = hb.step(1.0, 2.0, 0.5)
        assert p(0.5) == 2.0
        assert p(1.5) == 0.5
        assert p(1.0) == pytest.approx(1.25)

    def test_vectorized(self):
        p = hb.linear_ramp(1.0, 1.0, 2.0, 3.0)
        out = p(np.array([0.0, 1.5, 5.0]))
        assert out == pytest.approx([1.0, 2.0, 3.0])

    def test_malformed_rejected_at_construction(self):
        with pytest.raises(ValueError):
            hb.CoefficientProfile("constant", (-1.0,))
        with pytest.raises(ValueError):
            hb.CoefficientProfile("nosuch", (1.0,))
        with pytest.raises(ValueError):
            hb.tabulated([(0.0, 1.0), (0.0, 2.0)])
        with pytest.raises(ValueError):
            hb.tanh_transition(1.0, -0.5, 1.0, 2.0)


class TestProfileInvariants:
    KINDS = [
        hb.constant(1.5),
        hb.step(1.0, 2.0, 0.5),
        hb.linear_ramp(0.5, 1.0, 2.0, 2.5),
        hb.tanh_transition(2.0, 0.5, 0.8, 2.2),
        hb.tabulated([(0.0, 1.0), (1.0, 2.0), (3.0, 0.7)]),
    ]

    @pytest.mark.parametrize("prof", KINDS, ids=lambda p: p.kind)
    def test_values_within_declared_bounds(self, prof):
        lo, hi = prof.bounds()
        mesh = np.union1d(np.linspace(0.0, 10.0, 2000), prof.breakpoints())
        mesh = mesh[mesh >= 0.0]
        vals = prof(mesh)
        assert vals.min() >= lo - 1e-12
        assert vals.max() <= hi + 1e-12

    @pytest.mark.parametrize(
        "prof",
        [k for k in KINDS if k.kind != "step"],
        ids=lambda p: p.kind,
    )
    def test_continuity_at_breakpoints(self, prof):
        eps = 1e-8
        for bp in prof.breakpoints():
            if bp < eps:
                continue
            v = prof(bp)
            assert abs(prof(bp + eps) - v) < 1e-6
            assert abs(prof(bp - eps) - v) < 1e-6

    def test_step_one_sided_limits(self):
        # the step kind is the one allowed jump; both one-sided limits are exact
        p = hb.step(1.0, 2.0, 0.5)
        assert p(1.0 - 1e-12) == 2.0
        assert p(1.0 + 1e-12) == 0.5


class TestHabitatValidation:
    def test_out_of_bounds_profile_rejected(self):
        with pytest.raises(ValueError, match="range"):
            make_habitat(hb.constant(5.0), hb.constant(1.0), b1=0.5, b2=2.5)

    def test_bad_dimension_rejected(self):
        with pytest.raises(ValueError):
            make_habitat(hb.constant(1.0), hb.constant(1.0), n=0)

    def test_bad_bounds_rejected(self):
        with pytest.raises(ValueError):
            hb.Habitat(hb.constant(1.0), hb.constant(1.0), hb.constant(1.0), n=1, b1=2.0, b2=1.0)


class TestTailLimits:
    def test_constants(self):
        h = make_habitat(hb.constant(2.0), hb.constant(1.0))
        tl = hb.tail_limits(h)
        assert tl.alpha == 1.0
        assert tl.beta_inf == 1.0
        assert tl.satisfies_H

    def test_tanh_tail(self):
        h = make_habitat(hb.tanh_transition(5.0, 1.0, 2.0, 1.5), hb.constant(1.0))
        assert hb.tail_limits(h).alpha == pytest.approx(0.5, abs=1e-15)

    def test_unfavorable_everywhere(self):
        h = make_habitat(hb.constant(1.0), hb.constant(2.0))
        tl = hb.tail_limits(h)
        assert tl.alpha == -1.0
        assert not tl.satisfies_H

    def test_constant_tail_exact(self):
        assert hb.constant(1.2345).tail_value() == 1.2345


class TestClassifyHabitat:
    def test_constant_sign(self):
        h = make_habitat(hb.constant(2.0), hb.constant(1.0))
        rep = hb.classify_habitat(h, 1.0)
        assert rep.favorable_intervals == ((0.0, 1.0),)
        assert rep.unfavorable_intervals == ()
        assert rep.average_birth - rep.average_death == pytest.approx(1.0, abs=1e-12)

    def test_single_step_crossing(self):
        h = make_habitat(hb.step(1.0, 2.0, 0.5), hb.constant(1.0))
        rep = hb.classify_habitat(h, 2.0)
        assert len(rep.favorable_intervals) == 1
        assert len(rep.unfavorable_intervals) == 1
        (flo, fhi), = rep.favorable_intervals
        (ulo, uhi), = rep.unfavorable_intervals
        assert (flo, fhi) == pytest.approx((0.0, 1.0), abs=1e-9)
        assert (ulo, uhi) == pytest.approx((1.0, 2.0), abs=1e-9)

    def test_step_volume_averages_exact(self):
        # piecewise integral by hand: mean b = (2*1 + 0.5*1)/2 = 1.25,
        # mean d = 1, so the ball is favorable even though b < d on (1, 2)
        h = make_habitat(hb.step(1.0, 2.0, 0.5), hb.constant(1.0))
        rep = hb.classify_habitat(h, 2.0)
        assert rep.average_birth == pytest.approx(1.25, abs=1e-9)
        assert rep.average_death == pytest.approx(1.0, abs=1e-12)
        assert rep.is_favorable
        assert rep.average_birth - rep.average_death == pytest.approx(0.25, abs=1e-9)

    def test_intervals_tile_the_ball(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            h = random_habitat(rng)
            R = float(rng.uniform(0.5, 4.0))
            rep = hb.classify_habitat(h, R)
            total = sum(b - a for a, b in rep.favorable_intervals)
            total += sum(b - a for a, b in rep.unfavorable_intervals)
            assert total <= R + 1e-9
            # neutral set has measure zero unless b == d on a whole interval
            if not np.isclose(total, R, atol=1e-6):
                mesh = np.linspace(0.0, R, 512)
                gap = np.abs(h.net_growth(mesh))
                assert np.any(gap < 1e-12)

    def test_neutral_habitat_has_no_intervals(self):
        h = make_habitat(hb.constant(1.0), hb.constant(1.0))
        rep = hb.classify_habitat(h, 2.0)
        assert rep.favorable_intervals == ()
        assert rep.unfavorable_intervals == ()

    def test_volume_weight_in_dimension_three(self):
        # b = 2 on [0, 1), 0.5 beyond; with weight r^2 the favorable core
        # holds only 1/8 of the volume of B_2
        h = make_habitat(hb.step(1.0, 2.0, 0.5), hb.constant(1.0), n=3)
        rep = hb.classify_habitat(h, 2.0)
        expected = (2.0 * 1.0 / 3.0 + 0.5 * 7.0 / 3.0) / (8.0 / 3.0)
        assert rep.average_birth == pytest.approx(expected, abs=1e-6)

    def test_preconditions(self):
        h = make_habitat(hb.constant(2.0), hb.constant(1.0))
        with pytest.raises(ValueError):
            hb.classify_habitat(h, -1.0)
        with pytest.raises(ValueError):
            hb.classify_habitat(h, 1.0, mesh=4)
