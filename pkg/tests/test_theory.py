import inspect
import math

import numpy as np
import pytest

from gmmax.numerics import DomainError, normal_tail
from gmmax.potentials import Potential, Prior
from gmmax.summary import SCALED_LOGISTIC, STANDARD_LOGISTIC
from gmmax.theory import (
    FixedPointVars,
    InfeasibleRegimeError,
    ModelSpec,
    delta_star,
    generalization_error,
    solve_general,
    solve_l1,
    solve_l2,
    solve_linf,
    solve_system,
    support_recovery,
    system_residuals,
    theory_report,
)

from helpers import grid_oracle_delta_star

KAPPA_GRID = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0]


class TestDeltaStar:
    def test_zero_kappa_is_half(self):
        assert delta_star(0.0) == pytest.approx(0.5, abs=0.005)

    def test_in_unit_interval(self):
        for kappa in (0.0, 1.0, 20.0):
            val = delta_star(kappa)
            assert 0.0 < val <= 0.5

    def test_monotone_decreasing(self):
        vals = [delta_star(k) for k in KAPPA_GRID]
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))

    def test_large_kappa_below_kappa_one(self):
        assert delta_star(20.0) < delta_star(1.0)

    @pytest.mark.parametrize("kappa", [0.0, 1.0, 4.0])
    def test_matches_grid_oracle(self, kappa):
        oracle = grid_oracle_delta_star(kappa, STANDARD_LOGISTIC)
        val = delta_star(kappa)
        assert val == pytest.approx(min(oracle, 0.5), rel=0.01)

    def test_link_variant_changes_threshold(self):
        assert delta_star(1.0, SCALED_LOGISTIC) != pytest.approx(
            delta_star(1.0, STANDARD_LOGISTIC), rel=1e-3)

    def test_no_potential_parameter(self):
        # threshold is potential-independent; the API must not admit one
        params = inspect.signature(delta_star).parameters
        assert "potential" not in params
        assert "psi" not in params

    def test_negative_kappa_rejected(self):
        with pytest.raises(DomainError):
            delta_star(-0.5)


SPEC22 = ModelSpec(kappa=2.0, delta=2.0)
SPEC23 = ModelSpec(kappa=2.0, delta=3.0)


class TestSolveL2:
    def test_residual_contract(self):
        vars = solve_l2(SPEC22)
        resid = system_residuals(vars, Prior.gaussian(2.0), Potential.L2_SQUARED, SPEC22)
        assert np.max(np.abs(resid)) <= 1e-8

    def test_gamma_beta_recovery(self):
        vars = solve_l2(SPEC22)
        assert vars.gamma == pytest.approx(-vars.alpha, rel=1e-12)
        st = vars.sigma * vars.tau
        assert vars.beta == pytest.approx((1 + st) / (vars.tau * math.sqrt(2.0)), rel=1e-12)

    def test_matches_general_solver(self):
        a = solve_l2(SPEC22).as_array()
        b = solve_general(Prior.gaussian(2.0), Potential.L2_SQUARED, SPEC22).as_array()
        assert np.max(np.abs(a - b)) <= 1e-3

    def test_infeasible_regime_raises(self):
        with pytest.raises(InfeasibleRegimeError):
            solve_l2(ModelSpec(kappa=2.0, delta=0.2))

    def test_near_boundary_warns(self):
        ds = delta_star(2.0)
        with pytest.warns(RuntimeWarning):
            solve_l2(ModelSpec(kappa=2.0, delta=1.03 * ds))


class TestSolveL1:
    def test_residual_contract(self):
        vars = solve_l1(SPEC23, 0.1)
        resid = system_residuals(vars, Prior.sparse_gaussian(0.1, 2.0), Potential.L1, SPEC23)
        assert np.max(np.abs(resid)) <= 1e-8

    def test_s_one_matches_general_gaussian(self):
        a = solve_l1(SPEC23, 1.0).as_array()
        b = solve_general(Prior.gaussian(2.0), Potential.L1, SPEC23).as_array()
        assert np.max(np.abs(a - b)) <= 1e-3

    def test_sparse_matches_general(self):
        a = solve_l1(SPEC23, 0.1).as_array()
        b = solve_general(Prior.sparse_gaussian(0.1, 2.0), Potential.L1, SPEC23).as_array()
        assert np.max(np.abs(a - b)) <= 1e-3

    def test_sparse_l1_beats_l2(self):
        ge_l1 = theory_report(solve_l1(SPEC23, 0.1), SPEC23).gen_error
        ge_l2 = theory_report(solve_l2(SPEC23), SPEC23).gen_error
        assert ge_l1 < ge_l2

    def test_sparsity_validation(self):
        with pytest.raises(ValueError):
            solve_l1(SPEC23, 0.0)


class TestSolveLinf:
    def test_binary_residual_contract(self):
        spec = ModelSpec(kappa=2.0, delta=0.8)
        vars = solve_linf(spec, Prior.binary(2.0))
        resid = system_residuals(vars, Prior.binary(2.0), Potential.LINF_SCALED, spec)
        assert np.max(np.abs(resid)) <= 1e-8

    def test_gaussian_matches_general(self):
        spec = ModelSpec(kappa=2.0, delta=1.5)
        a = solve_linf(spec, Prior.gaussian(2.0)).as_array()
        b = solve_general(Prior.gaussian(2.0), Potential.LINF_SCALED, spec).as_array()
        assert np.max(np.abs(a - b)) <= 1e-3

    def test_binary_beats_others_below_crossover(self):
        spec = ModelSpec(kappa=2.0, delta=0.5)
        gi = theory_report(solve_linf(spec, Prior.binary(2.0)), spec).gen_error
        g2 = theory_report(solve_l2(spec), spec).gen_error
        g1 = theory_report(solve_system(Prior.binary(2.0), Potential.L1, spec), spec).gen_error
        assert gi < min(g1, g2)


class TestSolveGeneral:
    def test_eq45_partial_equations_hold(self):
        vars = solve_general(Prior.gaussian(2.0), Potential.L2_SQUARED, SPEC22)
        resid = system_residuals(vars, Prior.gaussian(2.0), Potential.L2_SQUARED,
                                 SPEC22, stats_method="quadrature")
        assert np.max(np.abs(resid[3:])) <= 1e-8

    def test_solver_error_carries_residuals(self):
        # far side of the boundary trips the feasibility check instead
        with pytest.raises(InfeasibleRegimeError):
            solve_general(Prior.gaussian(2.0), Potential.L1, ModelSpec(2.0, 0.3))


class TestGeneralizationError:
    def test_perfect_alignment(self):
        assert generalization_error(1.0, 0.0, 1.0) == pytest.approx(0.0)

    def test_pure_noise(self):
        assert generalization_error(0.0, 1.0, 1.0) == pytest.approx(0.5)

    def test_equal_parts(self):
        assert generalization_error(1.0, 1.0, 1.0) == pytest.approx(0.25)

    def test_scale_invariance(self):
        base = generalization_error(0.7, 1.3, 2.0)
        for c in (0.1, 3.0, 100.0):
            assert generalization_error(0.7 * c, 1.3 * c, 2.0) == pytest.approx(base, abs=1e-12)

    def test_degenerate_rejected(self):
        with pytest.raises(DomainError):
            generalization_error(0.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            generalization_error(1.0, 1.0, 0.0)


class TestSupportRecovery:
    def test_quartile_algebra(self):
        # construct vars with t1 = Phi^{-1}(0.75) so P1 = 0.5, and t2 = 1
        from scipy.special import ndtri

        t1_target = float(ndtri(0.75))
        # sigma=tau=1, gamma=0, beta=1, delta=1, s=1, kappa=1:
        # t1 = 1/sqrt(alpha^2 + 1) -> alpha = sqrt(1/t1^2 - 1)
        alpha = math.sqrt(1.0 / t1_target**2 - 1.0)
        vars = FixedPointVars(alpha=alpha, sigma=1.0, beta=1.0, gamma=0.0, tau=1.0)
        spec = ModelSpec(kappa=1.0, delta=1.0)
        p1, p2 = support_recovery(vars, spec, 1.0)
        assert p1 == pytest.approx(0.5, abs=1e-12)
        assert p2 == pytest.approx(2.0 * float(normal_tail(1.0)), abs=1e-12)

    def test_t2_to_zero_gives_p2_one(self):
        # beta*sqrt(delta) huge -> t2 -> 0 -> P2 -> 1
        vars = FixedPointVars(alpha=1.0, sigma=1.0, beta=1e9, gamma=0.0, tau=1.0)
        p1, p2 = support_recovery(vars, ModelSpec(kappa=1.0, delta=1.0), 0.5)
        assert p2 == pytest.approx(1.0, abs=1e-6)

    def test_probabilities_in_range(self):
        vars = solve_l1(SPEC23, 0.1)
        p1, p2 = support_recovery(vars, SPEC23, 0.1)
        assert 0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0


class TestTheoryReport:
    def test_report_fields(self):
        vars = solve_l2(SPEC22)
        rep = theory_report(vars, SPEC22)
        assert rep.correlation == pytest.approx(4.0 * vars.alpha)
        assert rep.norm == pytest.approx(math.hypot(2.0 * vars.alpha, vars.sigma))
        assert rep.gen_error == pytest.approx(
            math.acos(rep.correlation / (2.0 * rep.norm)) / math.pi)
        assert rep.support is None

    def test_support_included_for_sparse(self):
        vars = solve_l1(SPEC23, 0.1)
        rep = theory_report(vars, SPEC23, s=0.1)
        assert rep.support is not None

    def test_vars_positivity_enforced(self):
        with pytest.raises(ValueError):
            FixedPointVars(alpha=1.0, sigma=-1.0, beta=1.0, gamma=0.0, tau=1.0)
