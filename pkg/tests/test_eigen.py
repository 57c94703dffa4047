"""Eigenvalue solves, threshold values and critical-parameter bisection."""

import math

import numpy as np
import pytest
from scipy.special import jn_zeros

from frontier_sim import eigen, habitat as hb
from frontier_sim.errors import NonConvergence

from conftest import random_habitat

PI = math.pi


def const_hab(bval=2.0, dval=1.0, n=1):
    return hb.Habitat(
        hb.constant(bval), hb.constant(dval), hb.constant(1.0), n=n, b1=0.3, b2=3.0
    )


def r0_exact(bval, dval, D, R, n=1):
    lam = (PI / (2.0 * R)) ** 2 if n == 1 else (PI / R) ** 2
    return bval / (lam * D + dval)


class TestPrincipalEigenvalue:
    def test_critical_radius_gives_zero(self):
        # closed form: eigenfunction cos(pi r / (2R)) gives
        # lambda = D (pi/2R)^2 - (b - d) = 0 at R = pi/2
        lam, _ = eigen.principal_eigenvalue(const_hab(), 1.0, PI / 2, N=1000)
        assert abs(lam) < 1e-6

    def test_pure_laplacian_line(self):
        lam, _ = eigen.principal_eigenvalue(const_hab(1.0, 1.0), 1.0, 1.0, N=1000)
        assert lam == pytest.approx(PI**2 / 4, rel=1e-6)

    def test_pure_laplacian_ball_3d(self):
        # radial eigenfunction sin(pi r / R) / r
        lam, _ = eigen.principal_eigenvalue(const_hab(1.0, 1.0, n=3), 1.0, 1.0, N=1000)
        assert lam == pytest.approx(PI**2, rel=1e-5)

    def test_pure_laplacian_disk_2d(self):
        lam = eigen.dirichlet_laplacian_eigenvalue(1.0, 2, N=2000)
        assert lam == pytest.approx(jn_zeros(0, 1)[0] ** 2, rel=1e-6)

    def test_eigenfunction_shape(self):
        _, psi = eigen.principal_eigenvalue(const_hab(), 1.0, 2.0, N=500)
        assert psi[-1] == 0.0
        assert psi.max() == pytest.approx(1.0)
        assert psi[:-1].min() > 0.0
        dr = 2.0 / 500
        one_sided = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * dr)
        assert abs(one_sided) < 1e-4

    def test_nonconvergence_guard(self):
        with pytest.raises(NonConvergence):
            eigen.principal_eigenvalue(const_hab(), 1.0, 1.0, N=200, maxiter=2)


class TestComputeR0:
    def test_constant_formula_critical(self):
        r0 = eigen.compute_R0(const_hab(), 1.0, PI / 2, N=1000)
        assert r0 == pytest.approx(1.0, abs=5e-6)

    def test_constant_formula_subcritical(self):
        # lambda(pi/4) = 4, so R0 = 2 / (4 + 1)
        r0 = eigen.compute_R0(const_hab(), 1.0, PI / 4, N=1000)
        assert r0 == pytest.approx(0.4, abs=5e-6)

    def test_large_diffusion_kills_R0(self):
        assert eigen.compute_R0(const_hab(), 1e6, 1.0, N=500) < 1e-3

    def test_small_diffusion_limit_is_b_over_d(self):
        r0 = eigen.compute_R0(const_hab(), 1e-6, 1.0, N=500)
        assert abs(r0 - 2.0) < 1e-3

    def test_grid_convergence_second_order(self):
        exact = r0_exact(2.0, 1.0, 1.0, 1.0)
        e1 = abs(eigen.compute_R0(const_hab(), 1.0, 1.0, N=500) - exact)
        e2 = abs(eigen.compute_R0(const_hab(), 1.0, 1.0, N=1000) - exact)
        order = math.log2(e1 / e2)
        assert order >= 1.9

    def test_sign_relation_random_habitats(self):
        # 1 - R0 and lambda_star always share their sign away from criticality
        rng = np.random.default_rng(42)
        for _ in range(15):
            h = random_habitat(rng)
            D = float(10.0 ** rng.uniform(-1.0, 0.6))
            R = float(rng.uniform(0.5, 3.0))
            r0 = eigen.compute_R0(h, D, R, N=400)
            lam, _ = eigen.principal_eigenvalue(h, D, R, N=400)
            if min(abs(1.0 - r0), abs(lam)) > 1e-6:
                assert math.copysign(1.0, 1.0 - r0) == math.copysign(1.0, lam)
            else:
                assert max(abs(1.0 - r0), abs(lam)) < 1e-4

    def test_monotone_in_D_and_R(self):
        rng = np.random.default_rng(3)
        h = random_habitat(rng)
        r0_d = [eigen.compute_R0(h, D, 1.5, N=400) for D in (0.25, 0.5, 1.0, 2.0, 4.0)]
        assert all(a > b + 1e-8 for a, b in zip(r0_d, r0_d[1:]))
        r0_r = [eigen.compute_R0(h, 1.0, R, N=400) for R in (0.6, 0.9, 1.2, 1.5, 1.8)]
        assert all(b > a + 1e-8 for a, b in zip(r0_r, r0_r[1:]))


class TestFindDstar:
    def test_closed_form_critical_diffusion(self):
        # solve 2 / (D (pi/2R)^2 + 1) = 1 for D
        res = eigen.find_Dstar(const_hab(), PI / 2, N=800, tol=1e-7)
        assert res.status == "ok"
        assert res.value == pytest.approx(1.0, rel=1e-5)

    def test_closed_form_small_ball(self):
        res = eigen.find_Dstar(const_hab(), PI / 4, N=800, tol=1e-7)
        assert res.value == pytest.approx(0.25, rel=1e-5)

    def test_bracket_straddles_one(self):
        res = eigen.find_Dstar(const_hab(), 1.0, N=400, tol=1e-6)
        lo, hi = res.bracket
        assert eigen.compute_R0(const_hab(), lo, 1.0, N=400) >= 1.0
        assert eigen.compute_R0(const_hab(), hi, 1.0, N=400) <= 1.0
        assert res.residual < 1e-4

    def test_no_favorable_site(self):
        res = eigen.find_Dstar(const_hab(1.0, 2.0), 1.0, N=400)
        assert res.status == "no_favorable_site"
        assert res.value == 0.0

    def test_variational_cross_check(self):
        direct = eigen.find_Dstar(const_hab(), PI / 2, N=800, tol=1e-8).value
        variational = eigen.critical_diffusion_variational(const_hab(), PI / 2, N=800)
        assert direct == pytest.approx(variational, abs=1e-4)


class TestFindHstar:
    def test_unit_diffusion(self):
        res = eigen.find_hstar(const_hab(), 1.0, N=800, tol=1e-7)
        assert res.value == pytest.approx(PI / 2, rel=1e-5)

    def test_diffusion_four(self):
        # h* = (pi/2) sqrt(D / (b - d))
        res = eigen.find_hstar(const_hab(), 4.0, N=800, tol=1e-7)
        assert res.value == pytest.approx(PI, rel=1e-5)

    def test_three_dimensions(self):
        res = eigen.find_hstar(const_hab(n=3), 1.0, N=800, tol=1e-7)
        assert res.value == pytest.approx(PI, rel=1e-5)

    def test_no_favorable_site_flag(self):
        res = eigen.find_hstar(const_hab(1.0, 2.0), 1.0, N=200, R_cap=30.0)
        assert res.status == "no_favorable_site"
        assert math.isinf(res.value)

    def test_infinite_flag_when_pocket_beyond_cap(self):
        h = hb.Habitat(
            hb.tanh_transition(80.0, 1.0, 0.5, 2.0),
            hb.constant(1.0),
            hb.constant(1.0),
            n=1,
            b1=0.3,
            b2=3.0,
        )
        res = eigen.find_hstar(h, 1.0, N=200, R_cap=20.0)
        assert res.status == "infinite"
        assert math.isinf(res.value)


class TestR0Front:
    def test_identity_at_initial_radius(self, const_habitat):
        h0 = 1.3
        assert eigen.R0_front(const_habitat, 1.0, h0, N=400) == pytest.approx(
            eigen.compute_R0(const_habitat, 1.0, h0, N=400), abs=1e-14
        )

    def test_equals_one_at_critical_radius(self, const_habitat):
        hstar = eigen.find_hstar(const_habitat, 1.0, N=800, tol=1e-8).value
        assert eigen.R0_front(const_habitat, 1.0, hstar, N=800) == pytest.approx(1.0, abs=1e-5)

    def test_monotone_in_front_radius(self, const_habitat):
        radii = (0.8, 1.1, 1.4, 1.7)
        vals = [eigen.R0_front(const_habitat, 1.0, r, N=400) for r in radii]
        assert all(b > a for a, b in zip(vals, vals[1:]))
