import numpy as np
import pytest
from scipy import stats

from scoredriven import (
    BACKENDS,
    ModelSpec,
    SpecificationError,
    UnitRootError,
    filter_pass,
    long_term_init,
    scale_score,
    simulate_series,
)
from scoredriven.model import SCALINGS

POIS = ModelSpec.build("pois")
WORKED = [0.2, 0.1, 0.9]


def test_long_term_joint():
    assert long_term_init(POIS, WORKED)[0] == pytest.approx(2.0)


def test_long_term_with_regressor():
    spec = ModelSpec.build("pois", m=1)
    # omega, beta, alpha, phi
    assert long_term_init(spec, [1.0, 2.0, 0.1, 0.5], [np.array([0.5])])[0] == pytest.approx(4.0)


def test_long_term_sep():
    spec = ModelSpec.build("pois", m=1, regress="sep")
    assert long_term_init(spec, [1.0, 2.0, 0.1, 0.5], [np.array([0.5])])[0] == pytest.approx(2.0)


def test_long_term_static_uses_level():
    spec = ModelSpec.build("norm")
    f_bar = long_term_init(spec, [0.2, 0.1, 0.5, 3.0])
    assert f_bar[1] == 3.0


def test_unit_root_needs_init():
    with pytest.raises(UnitRootError, match="par_init"):
        long_term_init(POIS, [0.0, 0.1, 1.0])


def test_scale_score_examples():
    unit = ModelSpec.build("pois")
    assert scale_score(unit, [1.0], [[4.0]])[0] == 1.0
    assert scale_score(unit.replace(scaling="fisher_inv"), [1.0], [[4.0]])[0] == pytest.approx(0.25)
    assert scale_score(unit.replace(scaling="fisher_inv_sqrt"), [1.0], [[4.0]])[0] == pytest.approx(0.5)


def test_scale_score_pseudo_inverse_singular():
    spec = ModelSpec.build("norm", par_static=[False, False], scaling="fisher_inv")
    out = scale_score(spec, [1.0, 1.0], [[1.0, 1.0], [1.0, 1.0]])
    # Moore-Penrose inverse of the all-ones matrix is itself divided by 4
    np.testing.assert_allclose(out, [0.5, 0.5])


def test_diag_scaling_ignores_off_diagonal():
    spec = ModelSpec.build("norm", par_static=[False, False], scaling="diag_fisher_inv")
    np.testing.assert_allclose(scale_score(spec, [1.0, 1.0], [[2.0, 0.7], [0.7, 4.0]]), [0.5, 0.25])


def test_full_scaling_restricts_to_tv_rows():
    spec = ModelSpec.build("norm", scaling="full_fisher_inv")
    fisher = np.array([[2.0, 1.0], [1.0, 2.0]])
    expected = np.linalg.inv(fisher)[0, 0]
    assert scale_score(spec, [1.0], fisher)[0] == pytest.approx(expected)


@pytest.mark.parametrize("backend", BACKENDS)
def test_worked_poisson_step(backend):
    out = filter_pass(POIS, WORKED, [5.0, 3.0, 4.0], backend=backend)
    score_1 = 5 - np.exp(2.0)
    assert out.par_tv[0, 0] == pytest.approx(2.0)
    assert out.score_tv[0, 0] == pytest.approx(score_1)
    assert out.par_tv[1, 0] == pytest.approx(0.2 + 0.1 * score_1 + 0.9 * 2.0)
    assert out.par_tv[1, 0] == pytest.approx(1.7610944, abs=1e-7)
    assert out.loglik_t[0] == pytest.approx(stats.poisson(np.exp(2.0)).logpmf(5))


@pytest.mark.parametrize("backend", BACKENDS)
def test_missing_observation_advances_without_score(backend):
    out = filter_pass(POIS, WORKED, [5.0, np.nan, 4.0], backend=backend)
    assert np.isnan(out.loglik_t[1])
    assert out.score_tv[1, 0] == 0.0
    assert out.par_tv[2, 0] == pytest.approx(0.2 + 0.9 * out.par_tv[1, 0])
    assert out.loglik_sum == pytest.approx(out.loglik_t[0] + out.loglik_t[2])
    assert out.n_used == 2


def test_no_dynamics_stays_at_omega():
    y = simulate_series(POIS, WORKED, 40, seed=2).y_sim
    out = filter_pass(POIS, [0.7, 0.0, 0.0], y)
    assert np.all(out.par_tv == 0.7)


def test_lik_skip_drops_leading_terms():
    y = simulate_series(POIS, WORKED, 60, seed=4).y_sim
    y[1] = np.nan
    full = filter_pass(POIS, WORKED, y)
    skipped = filter_pass(POIS, WORKED, y, lik_skip=3)
    assert skipped.loglik_sum == pytest.approx(full.loglik_sum - full.loglik_t[0] - full.loglik_t[2])
    np.testing.assert_array_equal(skipped.par_tv, full.par_tv)


def test_lik_skip_out_of_range():
    with pytest.raises(SpecificationError):
        filter_pass(POIS, WORKED, [1.0, 2.0], lik_skip=2)


def test_unused_regressor_with_zero_beta():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(80, 1))
    y = simulate_series(POIS, WORKED, 80, seed=8).y_sim
    base = filter_pass(POIS, WORKED, y)
    spec = ModelSpec.build("pois", m=1)
    extra = filter_pass(spec, [0.2, 0.0, 0.1, 0.9], y, x=x)
    np.testing.assert_allclose(extra.par_tv, base.par_tv, rtol=0, atol=1e-14)


def test_regressor_enters_joint_recursion():
    spec = ModelSpec.build("pois", m=1)
    x = np.array([[1.0], [2.0], [0.0]])
    out = filter_pass(spec, [0.2, 0.3, 0.0, 0.5], [1.0, 1.0, 1.0], x=x)
    f_bar = (0.2 + 0.3 * 1.0) / 0.5
    assert out.par_tv[0, 0] == pytest.approx(f_bar)
    assert out.par_tv[1, 0] == pytest.approx(0.2 + 0.3 * 2.0 + 0.5 * f_bar)


def test_sep_mode_error_rows():
    spec = ModelSpec.build("pois", m=1, regress="sep")
    x = np.array([[1.0], [2.0], [0.0]])
    out = filter_pass(spec, [0.2, 0.3, 0.0, 0.5], [1.0, 1.0, 1.0], x=x)
    assert out.err_tv[0, 0] == 0.0
    np.testing.assert_allclose(out.par_tv[:, 0], 0.2 + 0.3 * x[:, 0])


@pytest.mark.parametrize("backend", BACKENDS)
def test_joint_sep_equivalence(backend):
    y = simulate_series(POIS, WORKED, 200, seed=6).y_sim
    joint = filter_pass(POIS, WORKED, y, backend=backend)
    sep = filter_pass(POIS.replace(regress="sep"), [2.0, 0.1, 0.9], y, backend=backend)
    np.testing.assert_allclose(sep.par_tv, joint.par_tv, rtol=0, atol=1e-10)
    np.testing.assert_allclose(sep.loglik_t, joint.loglik_t, rtol=0, atol=1e-10)


def test_orthogonal_scalings_fall_into_three_classes():
    spec = ModelSpec.build("norm")
    coef = [0.1, 0.2, 0.7, 1.5]
    y = simulate_series(spec, coef, 100, seed=3).y_sim
    paths = {s: filter_pass(spec.replace(scaling=s), coef, y).par_tv for s in SCALINGS}
    for group in (("fisher_inv", "full_fisher_inv", "diag_fisher_inv"),
                  ("fisher_inv_sqrt", "full_fisher_inv_sqrt", "diag_fisher_inv_sqrt")):
        for s in group[1:]:
            np.testing.assert_allclose(paths[s], paths[group[0]], rtol=0, atol=1e-10)


def test_par_init_overrides_first_rows():
    spec = ModelSpec.build("pois", par_init=[1.0])
    out = filter_pass(spec, [0.0, 0.1, 1.0], [2.0, 3.0])
    assert out.par_tv[0, 0] == 1.0
    assert out.par_tv[1, 0] == pytest.approx(1.0 + 0.1 * (2.0 - np.e))


def test_unit_root_raises_without_init():
    with pytest.raises(UnitRootError):
        filter_pass(POIS, [0.0, 0.1, 1.0], [2.0, 3.0])


def test_explosive_path_signals_failure():
    out = filter_pass(POIS, [0.0, 50.0, 0.5], [0.0, 400.0, 0.0, 400.0, 0.0])
    assert not out.ok
    assert out.loglik_sum == -np.inf


def test_filter_reproduces_simulated_path():
    sim = simulate_series(POIS, WORKED, 300, seed=12)
    out = filter_pass(POIS, WORKED, sim.y_sim)
    np.testing.assert_allclose(out.par_tv, sim.par_tv_sim, rtol=0, atol=1e-12)
