import numpy as np
import pytest
from numpy.testing import assert_allclose

from chaplygin import verify
from chaplygin.brackets import standard_coeffs
from chaplygin.model import ReducedState, SphereParams
from chaplygin.verify import (
    SampleSpec,
    VerificationReport,
    alpha_annihilation,
    bracket_dynamics_suite,
    casimir_suite,
    default_generic_state,
    default_multiplier_initial,
    involution_and_commutation,
    jacobi_suite,
    measure_suite,
    nonintegrability_functional,
    nonintegrability_oracle,
    nonintegrability_suite,
    reduction_consistency,
    reduction_order,
    run_all,
    sample_states,
)
from conftest import random_state, random_unit

SPEC = SampleSpec(count=150, seed=15)


class TestSampling:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SampleSpec(count=0)
        with pytest.raises(ValueError):
            SampleSpec(k_low=2.0, k_high=-2.0)

    def test_deterministic(self):
        a = sample_states(SPEC)
        b = sample_states(SPEC)
        assert all(np.array_equal(x.z, y.z) for x, y in zip(a, b))
        c = sample_states(SampleSpec(count=150, seed=16))
        assert not np.array_equal(a[0].z, c[0].z)

    def test_samples_on_sphere_and_in_box(self):
        for s in sample_states(SPEC):
            assert abs(np.linalg.norm(s.gamma) - 1.0) < 1e-12
            assert np.all(np.abs(s.K) <= 3.0)


class TestJacobiSuite:
    def test_scaled_passes(self, params):
        res = jacobi_suite(params, "scaled", SPEC)
        assert res.passed
        assert res.worst < 1e-12

    def test_standard_certified_non_jacobi(self, params):
        res = jacobi_suite(params, "standard", SPEC)
        assert res.passed
        assert res.fraction == 1.0
        assert res.worst > res.tol

    def test_affine_certified_non_jacobi(self, params):
        res = jacobi_suite(params, "affine", SPEC)
        assert res.passed

    def test_massless_limit_all_jacobi(self, free_params):
        res = jacobi_suite(free_params, "standard", SPEC)
        # the massless bracket satisfies Jacobi, so the non-Jacobi
        # certification must fail
        assert not res.passed
        assert res.worst < 1e-12
        assert res.witness


class TestCasimirSuite:
    def test_affine_and_scaled(self, params):
        for variant in ("affine", "scaled"):
            for res in casimir_suite(params, variant, SPEC):
                assert res.passed
                assert res.worst < 1e-12

    def test_standard(self, params):
        by_name = {r.name: r for r in casimir_suite(params, "standard", SPEC)}
        gamma_sq = by_name["casimir_gamma_sq_standard"]
        assert gamma_sq.passed and gamma_sq.worst < 1e-12
        kgamma = by_name["casimir_kgamma_standard"]
        assert kgamma.passed
        assert kgamma.fraction >= 0.99
        assert kgamma.worst > 1e-3


class TestNonintegrability:
    def test_uniform_inertia_closed_form(self, uniform_params):
        for gamma in np.eye(3):
            assert nonintegrability_functional(uniform_params, gamma) == 1.0
        rng = np.random.default_rng(80)
        for _ in range(50):
            val = nonintegrability_functional(uniform_params, random_unit(rng))
            assert abs(val - 1.0) < 1e-12

    def test_positive_on_samples(self, params):
        res = nonintegrability_suite(params, SampleSpec(count=500, seed=15))
        assert res[0].passed
        assert res[0].worst > 0.0

    def test_near_degenerate_inertia(self):
        p = SphereParams(1.0, 1.0, (1.0, 1.0, 1.0 + 1e-6))
        rng = np.random.default_rng(81)
        vals = [nonintegrability_functional(p, random_unit(rng)) for _ in range(500)]
        assert min(vals) > 0.0

    def test_oracle_consistency(self, params):
        rng = np.random.default_rng(82)
        for _ in range(10):
            s = random_state(rng)
            closed = nonintegrability_functional(params, s.gamma)
            assert abs(nonintegrability_oracle(params, s) - closed) < 1e-6

    def test_oracle_consistency_other_params(self):
        p = SphereParams(2.0, 0.5, (0.4, 0.7, 1.1))
        rng = np.random.default_rng(83)
        for _ in range(5):
            s = random_state(rng, k_scale=1.0)
            closed = nonintegrability_functional(p, s.gamma)
            assert abs(nonintegrability_oracle(p, s) - closed) < 1e-6


class TestAlphaAnnihilation:
    def test_passes(self, params):
        res = alpha_annihilation(params, SPEC)
        assert res.passed
        assert res.worst < 1e-12

    def test_negative_control_dropping_omega_term(self, params):
        # without the m r^2 w term the pairing with the momentum fields is
        # generically far from zero
        rng = np.random.default_rng(84)
        worst = 0.0
        for _ in range(20):
            s = random_state(rng)
            lam = standard_coeffs(params, s)
            broken = np.concatenate([s.gamma, s.K])
            worst = max(worst, np.abs(broken @ lam).max())
        assert worst > 1e-3


class TestInvolutionCommutation:
    def test_all_entries(self, params):
        s0 = default_generic_state()
        entries = {e.name: e for e in involution_and_commutation(params, s0, 0.05, 0.05, 1e-3)}
        assert entries["involution_hj"].passed
        assert entries["involution_hj"].worst < 1e-12
        assert entries["commute_scaled"].passed
        assert entries["commute_scaled"].worst < 1e-6
        control = entries["commute_unscaled_control"]
        assert control.passed
        assert control.worst > 1e-6

    def test_zero_time_flows_commute_trivially(self, params):
        s0 = default_generic_state()
        entries = {e.name: e for e in involution_and_commutation(params, s0, 1e-9, 1e-9, 1e-9)}
        assert entries["commute_scaled"].worst < 1e-12


class TestMeasureSuite:
    def test_entries(self, params):
        entries = {e.name: e for e in measure_suite(params, SampleSpec(count=200, seed=15))}
        weighted = entries["measure_weighted"]
        assert weighted.passed and weighted.worst < 1e-6
        control = entries["measure_unweighted_control"]
        assert control.passed
        assert control.fraction >= 0.99


class TestBracketDynamics:
    def test_agreement(self, params):
        res = bracket_dynamics_suite(params, SPEC)
        assert res.passed
        assert res.worst < 1e-12


class TestReductionConsistency:
    def test_short_horizon(self, params):
        initial = default_multiplier_initial(params)
        res = reduction_consistency(params, initial, 2.0, 1e-3)
        assert res.passed
        assert res.worst < 1e-6

    def test_fourth_order_defect(self, params):
        initial = default_multiplier_initial(params)
        res = reduction_order(params, initial)
        assert res.passed
        assert res.worst >= 3.5


@pytest.fixture(scope="module")
def report():
    params = SphereParams(1.0, 1.0, (1.0, 2.0, 3.0))
    return run_all(params, SampleSpec(count=100, seed=15),
                   commute_times=(0.05, 0.05), commute_dt=1e-3,
                   consistency_horizon=1.0, consistency_dt=1e-3,
                   nonintegrability_count=500)


class TestRunAll:
    def test_all_pass(self, report):
        failures = [e.name for e in report.entries if not e.passed]
        assert report.passed, f"failing checks: {failures}"

    def test_expected_checks_present(self, report):
        names = {e.name for e in report.entries}
        expected = {
            "jacobi_standard", "jacobi_affine", "jacobi_scaled",
            "casimir_kgamma_standard", "casimir_kgamma_affine", "casimir_kgamma_scaled",
            "casimir_gamma_sq_standard", "casimir_gamma_sq_affine", "casimir_gamma_sq_scaled",
            "nonintegrability_positive", "nonintegrability_oracle",
            "alpha_annihilation",
            "involution_hj", "commute_scaled", "commute_unscaled_control",
            "measure_weighted", "measure_unweighted_control",
            "bracket_dynamics",
            "consistency_multiplier", "consistency_order",
        }
        assert expected <= names

    def test_deterministic(self, params, report):
        again = run_all(params, SampleSpec(count=100, seed=15),
                        commute_times=(0.05, 0.05), commute_dt=1e-3,
                        consistency_horizon=1.0, consistency_dt=1e-3,
                        nonintegrability_count=500)
        assert [e.worst for e in again.entries] == [e.worst for e in report.entries]

    def test_report_lines_format(self, report):
        for line in report.to_lines():
            assert line.startswith("check=")
            assert " status=" in line and " worst=" in line
            assert " tol=" in line and " seed=" in line

    def test_forced_failure_carries_witness(self, params):
        res = jacobi_suite(params, "scaled", SampleSpec(count=20, seed=15),
                           {"tol_jacobi_scaled": 1e-30})
        assert not res.passed
        assert res.witness.startswith("(")
        report = VerificationReport(params, SPEC, [res])
        assert not report.passed
        assert "witness=(" in report.to_lines()[0]

    def test_errors_become_failed_entries(self, params, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(verify, "alpha_annihilation", boom)
        report = run_all(params, SampleSpec(count=5, seed=15),
                         commute_times=(0.01, 0.01), commute_dt=1e-3,
                         consistency_horizon=0.05, consistency_dt=1e-3,
                         nonintegrability_count=5)
        entry = next(e for e in report.entries if e.name == "alpha_annihilation")
        assert not entry.passed
        assert "synthetic failure" in entry.witness
        assert not report.passed
