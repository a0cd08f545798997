import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gmmax.numerics import RngStream, normal_pdf, normal_tail, xi
from gmmax.potentials import (
    Potential,
    Prior,
    lambda_star_binary,
    lambda_star_general,
    lambda_star_sparse,
    moreau,
    project_l1_ball,
    prox,
    prox_statistics,
    prox_sup_norm,
)

from helpers import brute_force_prox


class TestProx:
    def test_l2_closed_form(self):
        out = prox(Potential.L2_SQUARED, np.array([2.0, -4.0]), 1.0)
        assert np.allclose(out, [1.0, -2.0])

    def test_l1_soft_threshold(self):
        out = prox(Potential.L1, np.array([3.0, -0.5]), 1.0)
        assert np.allclose(out, [2.0, 0.0])

    def test_sup_norm_effective_radius_one(self):
        # t*d = 1 on a 2-vector
        out = prox(Potential.LINF_SCALED, np.array([3.0, 1.0]), 0.5)
        assert np.allclose(out, [2.0, 1.0])

    def test_sup_norm_vs_dense_grid_oracle(self):
        v = np.array([3.0, 1.0])
        oracle = brute_force_prox(lambda x: np.max(np.abs(x)), v, 1.0,
                                  span=4.0, points=801)
        got = prox_sup_norm(v, 1.0)
        assert np.max(np.abs(got - oracle)) <= 2e-2  # grid resolution

    def test_rejects_nonpositive_t(self):
        with pytest.raises(ValueError):
            prox(Potential.L1, np.array([1.0]), 0.0)

    @settings(max_examples=100, deadline=None)
    @given(
        arrays(float, st.integers(2, 12),
               elements=st.floats(-5, 5, allow_nan=False)),
        arrays(float, st.integers(2, 12),
               elements=st.floats(-5, 5, allow_nan=False)),
        st.floats(0.05, 3.0),
        st.sampled_from(list(Potential)),
    )
    def test_nonexpansive(self, v1, v2, t, potential):
        d = min(len(v1), len(v2))
        v1, v2 = v1[:d], v2[:d]
        p1 = prox(potential, v1, t)
        p2 = prox(potential, v2, t)
        assert np.linalg.norm(p1 - p2) <= np.linalg.norm(v1 - v2) + 1e-12

    def test_l1_shrink_distance_bound(self):
        # ||v - prox_t(v)|| <= 2 t sqrt(d) for the l1 potential
        gen = RngStream(3).generator()
        for _ in range(50):
            d = int(gen.integers(1, 60))
            v = gen.normal(scale=4.0, size=d)
            t = float(gen.uniform(0.01, 2.0))
            p = prox(Potential.L1, v, t)
            assert np.linalg.norm(v - p) <= 2.0 * t * math.sqrt(d) + 1e-12


class TestL1BallProjection:
    def test_basic(self):
        assert np.allclose(project_l1_ball(np.array([3.0, 1.0]), 1.0), [1.0, 0.0])

    def test_interior_unchanged(self):
        v = np.array([0.2, -0.3])
        assert np.allclose(project_l1_ball(v, 1.0), v)

    def test_radius_attained(self):
        gen = RngStream(17).generator()
        for _ in range(20):
            v = gen.normal(scale=2.0, size=50)
            out = project_l1_ball(v, 1.0)
            if np.abs(v).sum() > 1.0:
                assert abs(np.abs(out).sum() - 1.0) <= 1e-10

    def test_rejects_bad_radius(self):
        with pytest.raises(ValueError):
            project_l1_ball(np.array([1.0]), 0.0)

    def test_moreau_decomposition_exact(self):
        gen = RngStream(19).generator()
        for _ in range(50):
            d = int(gen.integers(2, 40))
            v = gen.normal(scale=3.0, size=d)
            t = float(gen.uniform(0.05, 2.0))
            p = prox(Potential.LINF_SCALED, v, t)
            assert np.max(np.abs(p + project_l1_ball(v, t * d) - v)) <= 1e-12


class TestMoreau:
    def test_l2_example(self):
        value, grad, dt = moreau(Potential.L2_SQUARED, np.array([2.0]), 1.0)
        assert value == pytest.approx(1.0)
        assert np.allclose(grad, [1.0])
        assert dt == pytest.approx(-0.5)

    def test_l1_example(self):
        value, grad, dt = moreau(Potential.L1, np.array([0.5]), 1.0)
        assert value == pytest.approx(0.125)
        assert np.allclose(grad, [0.5])
        assert dt == pytest.approx(-0.125)

    def test_derivatives_match_finite_differences(self):
        gen = RngStream(23).generator()
        for case in range(100):
            potential = list(Potential)[case % 3]
            d = int(gen.integers(1, 15))
            v = gen.normal(scale=2.0, size=d)
            t = float(gen.uniform(0.1, 2.0))
            _, grad, dt = moreau(potential, v, t)
            h = 1e-5
            for j in range(d):
                vp, vm = v.copy(), v.copy()
                vp[j] += h
                vm[j] -= h
                fd = (moreau(potential, vp, t)[0] - moreau(potential, vm, t)[0]) / (2 * h)
                assert abs(grad[j] - fd) <= 1e-5
            fd_t = (moreau(potential, v, t + h)[0] - moreau(potential, v, t - h)[0]) / (2 * h)
            assert abs(dt - fd_t) <= 1e-5


class TestPrior:
    def test_second_moment_all_tags(self):
        gen = RngStream(29).generator()
        for prior in (Prior.gaussian(1.3), Prior.sparse_gaussian(0.1, 1.3),
                      Prior.binary(1.3)):
            w = prior.sample(gen, 10**6)
            sq = w**2
            se = sq.std() / math.sqrt(len(sq))
            assert abs(sq.mean() - prior.kappa**2) <= 4.0 * max(se, 1e-12)

    def test_sparse_zero_fraction(self):
        gen = RngStream(31).generator()
        w = Prior.sparse_gaussian(0.1, 2.0).sample(gen, 10**5)
        frac = np.mean(w == 0.0)
        assert frac == pytest.approx(0.9, abs=0.01)

    def test_binary_support(self):
        gen = RngStream(37).generator()
        w = Prior.binary(2.0).sample(gen, 1000)
        assert set(np.unique(w)) == {-2.0, 2.0}

    def test_validation(self):
        with pytest.raises(ValueError):
            Prior.gaussian(0.0)
        with pytest.raises(ValueError):
            Prior.sparse_gaussian(0.0, 1.0)
        with pytest.raises(ValueError):
            Prior("cauchy", 1.0)


class TestLambdaRoots:
    def test_point_mass_closed_form(self):
        # |W| = 2 a.s.: (2 - lam)_+ = 0.5 at lam = 1.5
        assert lambda_star_general(Prior.binary(2.0), 0.5) == pytest.approx(1.5, abs=1e-10)

    def test_inactive_above_abs_mean(self):
        prior = Prior.gaussian(1.0)
        assert lambda_star_general(prior, prior.abs_mean * 1.01) == 0.0
        assert lambda_star_general(prior, prior.abs_mean) == 0.0

    def test_gaussian_residual(self):
        lam = lambda_star_general(Prior.gaussian(1.0), 0.3)
        resid = 2.0 * float(xi(lam / 1.0)) - 0.3
        assert abs(resid) <= 1e-10

    def test_sparse_inactive_branch(self):
        t = 1.0 / math.sqrt(math.pi / 2.0) + 1e-6  # 1/t just below sqrt(pi/2)
        assert lambda_star_sparse(t, t, 0.5) == 0.0

    def test_sparse_residual(self):
        lam = lambda_star_sparse(0.1, 0.1, 0.5)
        lhs = (2 * 0.5 / 0.1) * float(xi(lam * 0.1)) + (2 * 0.5 / 0.1) * float(xi(lam * 0.1))
        assert abs(lhs - 1.0) <= 1e-10

    def test_sparse_s_one_matches_single_population(self):
        lam_a = lambda_star_sparse(0.3, 17.0, 1.0)  # t2 ignored at s=1
        lam_b = lambda_star_sparse(0.3, 0.001, 1.0)
        assert lam_a == pytest.approx(lam_b, abs=1e-12)

    def test_binary_inactive_for_large_negative_t3(self):
        assert lambda_star_binary(-50.0, 1.0, 1.0) == 0.0

    def test_binary_residual_and_bracket(self):
        t3, beta, delta = 2.0, 1.0, 1.0
        lam = lambda_star_binary(t3, beta, delta)
        scale = beta * math.sqrt(delta)
        u = (lam - t3) / scale
        resid = scale * float(normal_pdf(u)) + (t3 - lam) * float(normal_tail(u)) - 0.5
        assert abs(resid) <= 1e-10
        assert 0.0 <= lam <= t3 + 10.0 * scale

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            lambda_star_sparse(0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            lambda_star_binary(1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            lambda_star_general(Prior.gaussian(1.0), 0.0)


VARS = dict(alpha=0.8, sigma=1.3, beta=0.9, gamma=-0.7, tau=1.1, delta=2.5)
PRIORS = {
    "gaussian": Prior.gaussian(2.0),
    "sparse": Prior.sparse_gaussian(0.1, 2.0),
    "binary": Prior.binary(2.0),
}


class TestProxStatistics:
    def test_l2_closed_form_any_prior(self):
        T = VARS["sigma"] * VARS["tau"]
        a = VARS["alpha"] - T * VARS["gamma"]
        for prior in PRIORS.values():
            stats = prox_statistics(prior, Potential.L2_SQUARED, **VARS)
            assert stats.corr == pytest.approx(prior.kappa**2 * a / (1 + T), rel=1e-12)

    def test_l1_sparse_gauss_corr_closed_form(self):
        prior = PRIORS["sparse"]
        T = VARS["sigma"] * VARS["tau"]
        a = VARS["alpha"] - T * VARS["gamma"]
        b = VARS["beta"] * T * math.sqrt(VARS["delta"])
        s = prior.sparsity
        nu1 = math.sqrt((prior.kappa**2 / s) * a * a + b * b)
        t1, t2 = T / nu1, T / b
        expected = (2 * s * float(normal_tail(t1))
                    + 2 * (1 - s) * float(normal_tail(t2))) * b
        stats = prox_statistics(prior, Potential.L1, **VARS)
        assert stats.gauss_corr == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("prior_name", list(PRIORS))
    @pytest.mark.parametrize("potential", list(Potential))
    def test_closed_vs_quadrature(self, prior_name, potential):
        prior = PRIORS[prior_name]
        rule = "exact" if prior_name == "binary" else "near-tail"
        closed = prox_statistics(prior, potential, **VARS, binary_rule=rule)
        quad = prox_statistics(prior, potential, **VARS, method="quadrature")
        for field in ("corr", "gauss_corr", "sq_norm"):
            assert getattr(closed, field) == pytest.approx(
                getattr(quad, field), rel=1e-10, abs=1e-10)

    @pytest.mark.parametrize("prior_name", list(PRIORS))
    @pytest.mark.parametrize("potential", list(Potential))
    def test_closed_vs_monte_carlo(self, prior_name, potential):
        prior = PRIORS[prior_name]
        closed = prox_statistics(prior, potential, **VARS)
        mc = prox_statistics(prior, potential, **VARS, method="mc",
                             rng=RngStream(4242), samples=10**6)
        for i, field in enumerate(("corr", "gauss_corr", "sq_norm")):
            diff = abs(getattr(closed, field) - getattr(mc, field))
            assert diff <= 3.5 * mc.stderr[i], (prior_name, potential, field)

    def test_requires_positive_scales(self):
        with pytest.raises(ValueError):
            prox_statistics(PRIORS["gaussian"], Potential.L1, alpha=1.0,
                            sigma=-1.0, beta=1.0, gamma=0.0, tau=1.0, delta=1.0)

    def test_mc_requires_rng(self):
        with pytest.raises(ValueError):
            prox_statistics(PRIORS["gaussian"], Potential.L1, **VARS, method="mc")
