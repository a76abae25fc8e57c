import warnings

import numpy as np
import pytest
from scipy import stats

from scoredriven import (
    ConstraintSpec,
    ConvergenceWarning,
    EstimationStartError,
    ModelSpec,
    SpecificationError,
    build_structure,
    estimate,
    filter_pass,
    fit,
    grid_start,
    infer,
    info_criteria,
    negative_objective,
    simulate_series,
)

POIS = ModelSpec.build("pois")


@pytest.fixture(scope="module")
def pois_series():
    return simulate_series(POIS, [0.1, 0.08, 0.85], 600, seed=21).y_sim


def test_negbin_labels():
    spec = ModelSpec.build("negbin", m=7)
    names = build_structure(spec).names
    assert len(names) == 11
    assert names[0] == "log(mean)_omega"
    assert names[1:8] == [f"log(mean)_beta{j}" for j in range(1, 8)]
    assert names[-3:] == ["log(mean)_alpha1", "log(mean)_phi1", "dispersion"]


def test_fix_value_expansion():
    spec = ModelSpec.build("negbin", m=7)
    s = build_structure(spec, ConstraintSpec(fix_value={"log(mean)_alpha1": 0.05}))
    assert s.n_free == 10
    full = s.expand(np.arange(10.0))
    assert full.size == 11
    assert full[8] == 0.05
    np.testing.assert_array_equal(np.delete(full, 8), np.arange(10.0))


def test_fix_value_vector_form():
    s = build_structure(POIS, ConstraintSpec(fix_value=[np.nan, 0.0, np.nan]))
    np.testing.assert_array_equal(s.free, [0, 2])


def test_random_walk_lowering():
    s = build_structure(POIS, ConstraintSpec(special=["random_walk"]))
    np.testing.assert_array_equal(s.free, [1])
    full = s.expand([0.3])
    np.testing.assert_array_equal(full, [0.0, 0.3, 1.0])


def test_zero_sum_intercept():
    spec = ModelSpec.build("norm", par_static=[False, False])
    s = build_structure(spec, ConstraintSpec(special=["zero_sum_intercept"]))
    full = s.expand(np.arange(1.0, s.n_free + 1))
    omega = [full[s.names.index("mean_omega")], full[s.names.index("log(var)_omega")]]
    assert sum(omega) == 0.0


def test_panel_structure():
    spec = ModelSpec.build("norm", par_static=[False, False])
    s = build_structure(spec, ConstraintSpec(special=["panel_structure"]))
    full = s.expand(np.arange(1.0, s.n_free + 1))
    ix = s.names.index
    assert full[ix("log(var)_alpha1")] == full[ix("mean_alpha1")]
    assert full[ix("log(var)_phi1")] == full[ix("mean_phi1")]


def test_zero_sum_needs_two_tv_parameters():
    with pytest.raises(SpecificationError):
        build_structure(POIS, ConstraintSpec(special=["zero_sum_intercept"]))


def test_unknown_special():
    with pytest.raises(SpecificationError):
        build_structure(POIS, ConstraintSpec(special=["garch"]))


def test_tie_matrix_and_triples_agree():
    spec = ModelSpec.build("norm", par_static=[False, False])
    names = build_structure(spec).names
    n = len(names)
    mat = np.full((n, n), np.nan)
    mat[names.index("log(var)_alpha1"), names.index("mean_alpha1")] = 2.0
    a = build_structure(spec, ConstraintSpec(fix_other=mat))
    b = build_structure(spec, ConstraintSpec(fix_other=[("log(var)_alpha1", "mean_alpha1", 2.0)]))
    np.testing.assert_array_equal(a.amap, b.amap)
    full = a.expand(np.ones(a.n_free))
    assert full[names.index("log(var)_alpha1")] == 2.0


def test_tie_to_fixed_coefficient_rejected():
    c = ConstraintSpec(fix_value={"log(mean)_alpha1": 0.1},
                       fix_other=[("log(mean)_phi1", "log(mean)_alpha1", 1.0)])
    with pytest.raises(SpecificationError):
        build_structure(POIS, c)


def test_cyclic_tie_rejected():
    c = ConstraintSpec(fix_other=[("log(mean)_phi1", "log(mean)_alpha1", 1.0),
                                  ("log(mean)_alpha1", "log(mean)_phi1", 1.0)])
    with pytest.raises(SpecificationError):
        build_structure(POIS, c)


def test_bounds_checks():
    with pytest.raises(SpecificationError):
        build_structure(POIS, ConstraintSpec(lower={"log(mean)_phi1": 1.0}, upper={"log(mean)_phi1": 0.0}))
    with pytest.raises(SpecificationError):
        build_structure(POIS, ConstraintSpec(fix_value={"log(mean)_phi1": 2.0}, upper={"log(mean)_phi1": 1.0}))
    with pytest.raises(SpecificationError):
        build_structure(POIS, ConstraintSpec(fix_value={"nonsense": 1.0}))


def test_grid_start_omega():
    y = np.array([1.0, 3.0, 2.0, 2.0, 1.0, 3.0])
    s = build_structure(POIS, ConstraintSpec(fix_value={"log(mean)_alpha1": 0.0, "log(mean)_phi1": 0.5}))
    free, ll = grid_start(POIS, s, y)
    assert free[0] == pytest.approx(0.5 * np.log(2.0))
    assert np.isfinite(ll)


def test_grid_start_is_best_grid_point():
    y = simulate_series(POIS, [0.1, 0.08, 0.85], 300, seed=5).y_sim
    s = build_structure(POIS)
    free, ll = grid_start(POIS, s, y)
    level = np.log(np.mean(y))
    values = [-negative_objective(POIS, [level * (1 - ph), a, ph], y)
              for a in (0.0, 0.05) for ph in (0.0, 0.5, 0.9)]
    assert ll == pytest.approx(max(values))


def test_grid_start_constant_bernoulli():
    spec = ModelSpec.build("bernoulli")
    free, ll = grid_start(spec, build_structure(spec), np.zeros(30))
    assert np.isfinite(ll)
    omega, _, phi = free
    assert omega / (1 - phi) == pytest.approx(np.log(1e-6 / (1 - 1e-6)), rel=1e-9)


def test_grid_start_fails_without_finite_point():
    s = build_structure(POIS, ConstraintSpec(fix_value={"log(mean)_alpha1": 1e6}))
    with pytest.raises(EstimationStartError):
        grid_start(POIS, s, np.array([0.0, 400.0, 0.0, 400.0]))


def test_negative_objective_single_observation():
    expected = -(5 * 2.0 - np.exp(2.0) - np.log(120.0))
    assert negative_objective(POIS, [0.2, 0.1, 0.9], [5.0]) == pytest.approx(expected)
    # the quoted 2.176 is truncated, not rounded
    assert expected == pytest.approx(2.176, abs=1e-3)


def test_negative_objective_out_of_bounds():
    c = ConstraintSpec(upper={"log(mean)_phi1": 0.99})
    assert negative_objective(POIS, [0.2, 0.1, 1.2], [5.0, 3.0], constraints=c) == np.inf


def test_negative_objective_last_term_only(pois_series):
    T = pois_series.size
    out = filter_pass(POIS, [0.1, 0.08, 0.85], pois_series)
    val = negative_objective(POIS, [0.1, 0.08, 0.85], pois_series, lik_skip=T - 1)
    assert val == pytest.approx(-out.loglik_t[-1])


def test_infer_scalar():
    inf = infer([1.0], [[-4.0]])
    assert inf.vcov[0, 0] == pytest.approx(0.25)
    assert inf.sd[0] == pytest.approx(0.5)
    assert inf.z[0] == pytest.approx(2.0)
    assert not inf.degenerate


def test_infer_z_and_p():
    sd = 0.0121071
    inf = infer([0.9818186], [[-1.0 / sd**2]])
    assert inf.z[0] == pytest.approx(81.09, abs=0.01)
    inf = infer([1.959964], [[-1.0]])
    assert inf.p[0] == pytest.approx(0.05, abs=1e-6)
    assert inf.p[0] == pytest.approx(2 * stats.norm.sf(1.959964), rel=1e-12)


def test_infer_maps_ties_and_fixes():
    amap = np.array([[1.0], [0.0], [-2.0]])
    inf = infer([0.5, 0.1, -1.0], [[-4.0]], amap)
    np.testing.assert_allclose(inf.vcov, [[0.25, 0, -0.5], [0, 0, 0], [-0.5, 0, 1.0]])
    assert inf.sd[1] == 0.0
    assert np.isnan(inf.p[1])
    assert inf.sd[2] == pytest.approx(1.0)


def test_infer_singular_flags_degenerate():
    inf = infer([1.0, 1.0], [[-1.0, -1.0], [-1.0, -1.0]])
    assert inf.degenerate
    np.testing.assert_allclose(inf.vcov, np.full((2, 2), 0.25))


def test_infer_nonfinite_hessian():
    inf = infer([1.0], [[np.nan]])
    assert not inf.ok
    assert np.isnan(inf.sd[0])


def test_info_criteria_examples():
    assert info_criteria(-2111.266, 10)[0] == pytest.approx(4242.532)
    assert info_criteria(-2059.834, 11)[0] == pytest.approx(4141.668)
    assert info_criteria(0.0, 0, 5) == (0.0, 0.0)
    aic, bic = info_criteria(-10.0, 3, 100)
    assert bic == pytest.approx(3 * np.log(100) + 20.0)


def test_iid_poisson_mle():
    y = stats.poisson(3.3).rvs(size=500, random_state=np.random.default_rng(2)).astype(float)
    spec = ModelSpec.build("pois", par_static=[True])
    res = estimate(y, spec)
    assert res.coef_est.values[0] == pytest.approx(y.mean(), abs=1e-5)
    assert res.coef_sd[0] == pytest.approx(np.sqrt(y.mean() / y.size), rel=1e-3)


def test_no_dynamics_recovers_iid_mle():
    y = stats.poisson(3.3).rvs(size=500, random_state=np.random.default_rng(3)).astype(float)
    c = ConstraintSpec(fix_value={"log(mean)_alpha1": 0.0, "log(mean)_phi1": 0.0})
    res = estimate(y, POIS, constraints=c)
    assert np.exp(res.coef_est["log(mean)_omega"]) == pytest.approx(y.mean(), abs=1e-4)
    assert res.coef_sd[1] == 0.0 and res.coef_sd[2] == 0.0
    assert res.k == 1


def test_all_fixed():
    y = np.array([5.0, 3.0, 4.0])
    c = ConstraintSpec(fix_value=[0.2, 0.1, 0.9])
    res = estimate(y, POIS, constraints=c)
    assert res.k == 0
    assert -res.loglik == pytest.approx(negative_objective(POIS, [], y, constraints=c))
    np.testing.assert_array_equal(res.coef_sd, 0.0)
    assert res.aic == pytest.approx(-2 * res.loglik)


def test_estimate_contract(pois_series):
    res = estimate(pois_series, POIS)
    assert res.optim["converged"]
    assert res.loglik >= res.optim["start_loglik"]
    assert res.aic == 2 * res.k - 2 * res.loglik
    assert res.bic == res.k * np.log(res.t_eff) - 2 * res.loglik
    np.testing.assert_allclose(res.coef_sd, np.sqrt(np.diag(res.coef_vcov)))
    np.testing.assert_allclose(res.z_stat, res.coef_est.values / res.coef_sd)
    assert res.filter.loglik_sum == res.loglik
    text = res.summary()
    assert "log(mean)_phi1" in text and "AIC:" in text


def test_coef_start_bypasses_grid(pois_series):
    start = [0.12, 0.07, 0.8]
    with pytest.warns(ConvergenceWarning):
        res = estimate(pois_series, POIS, coef_start=start, max_eval=1, hessian=False)
    np.testing.assert_array_equal(res.optim["start"], start)


def test_coef_start_free_length(pois_series):
    c = ConstraintSpec(fix_value={"log(mean)_alpha1": 0.05})
    res = estimate(pois_series, POIS, constraints=c, coef_start=[0.1, 0.8], hessian=False)
    assert res.coef_est["log(mean)_alpha1"] == 0.05
    with pytest.raises(SpecificationError):
        estimate(pois_series, POIS, coef_start=[0.1, 0.2, 0.3, 0.4])


def test_convergence_warning(pois_series):
    with pytest.warns(ConvergenceWarning):
        estimate(pois_series, POIS, max_eval=10, hessian=False)


def test_random_walk_estimation(pois_series):
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        res = estimate(pois_series, POIS, constraints=ConstraintSpec(special=["random_walk"]))
    assert res.coef_est["log(mean)_omega"] == 0.0
    assert res.coef_est["log(mean)_phi1"] == 1.0
    assert res.spec.par_init == pytest.approx((np.log(np.mean(pois_series)),))
    assert res.k == 1


def test_fit_infers_regressor_count():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(300, 2))
    y = rng.poisson(np.exp(0.5 + 0.3 * x[:, 0])).astype(float)
    res = fit(y, "pois", x=x, hessian=False)
    assert res.coef_est.names[:3] == ["log(mean)_omega", "log(mean)_beta1", "log(mean)_beta2"]
    assert res.coef_est["log(mean)_beta1"] == pytest.approx(0.3, abs=0.1)


def test_conditional_likelihood(pois_series):
    res = estimate(pois_series, POIS, lik_skip="conditional", hessian=False)
    assert res.lik_skip == 1
    assert res.t_eff == pois_series.size - 1
