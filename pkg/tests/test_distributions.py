import numpy as np
import pytest
from scipy import special

import oracles
from scoredriven import DomainError, ModelSpec, SpecificationError, distributions as sdd
from scoredriven.distributions import links


def test_registry_lists_twelve_sorted():
    descs = sdd.list_distributions()
    keys = [(d.label, d.parametrization) for d in descs]
    assert len(keys) == 12
    assert keys == sorted(keys)


def test_filter_by_type():
    labels = [d.label for d in sdd.list_distributions(filter_type="count")]
    assert labels == ["geom", "negbin", "pois"]


def test_default_filter():
    assert len(sdd.list_distributions(filter_default=True)) == 12
    assert sdd.list_distributions(filter_default=False) == []


def test_unknown_distribution():
    with pytest.raises(SpecificationError):
        sdd.get_distribution("cauchy")


@pytest.mark.parametrize("label", oracles.LABELS)
def test_loglik_matches_scipy(label):
    rng = np.random.default_rng(oracles.LABELS.index(label))
    for _ in range(10):
        theta = oracles.random_point(label, rng)
        y = oracles.draw(label, theta, 5, rng)
        ours = sdd.loglik(label, y, np.broadcast_to(theta, (5, theta.size)))
        np.testing.assert_allclose(ours, oracles.logdensity(label, y, theta), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("label", oracles.LABELS)
def test_moments_match_scipy(label):
    rng = np.random.default_rng(5)
    theta = oracles.random_point(label, rng)
    ref = oracles.frozen(label, theta)
    if label == "vonmises":
        a = special.i1e(theta[1]) / special.i0e(theta[1])
        expected_var = 1.0 - a
        expected_mean = theta[0]
    else:
        expected_mean, expected_var = ref.mean(), ref.var()
    assert sdd.dist_mean(label, theta) == pytest.approx(expected_mean, rel=1e-9, abs=1e-12)
    assert sdd.dist_variance(label, theta) == pytest.approx(expected_var, rel=1e-9)


@pytest.mark.parametrize("label", oracles.LABELS)
def test_random_moments_and_determinism(label):
    rng = np.random.default_rng(9)
    theta = oracles.random_point(label, rng)
    n = 100_000
    a = sdd.random(label, theta, n, seed=3)
    b = sdd.random(label, theta, n, seed=3)
    assert np.array_equal(a, b)
    if label == "vonmises":
        resultant = np.mean(np.exp(1j * (a - theta[0])))
        assert abs(resultant.imag) < 4 / np.sqrt(n)
        return
    se = np.sqrt(sdd.dist_variance(label, theta) / n)
    assert abs(a.mean() - sdd.dist_mean(label, theta)) <= 4 * se


def test_random_degenerate_bernoulli():
    assert np.all(sdd.random("bernoulli", [1.0], 50, seed=1) == 1.0)


def test_random_zero_draws():
    assert sdd.random("pois", [2.0], 0).shape == (0,)


def test_start_clamps_constant_bernoulli():
    assert sdd.start("bernoulli", np.zeros(20))[0] == pytest.approx(1e-6)


def test_start_ignores_missing():
    assert sdd.start("pois", [1.0, np.nan, 3.0])[0] == pytest.approx(2.0)


def test_start_needs_data():
    with pytest.raises(DomainError):
        sdd.start("pois", [np.nan])


def test_poisson_fisher_and_score():
    assert sdd.fisher("pois", [4.0])[0, 0] == pytest.approx(0.25)
    assert sdd.score("pois", 5.0, [np.exp(2.0)])[0] == pytest.approx(5 / np.exp(2.0) - 1)
    # log link: score y - lambda, Fisher lambda
    assert sdd.score("pois", 5.0, [np.exp(2.0)], linked=True)[0] == pytest.approx(5 - np.exp(2.0))
    assert sdd.fisher("pois", [3.0], linked=True)[0, 0] == pytest.approx(3.0)


def test_normal_fisher_closed_form():
    np.testing.assert_allclose(sdd.fisher("norm", [0.3, 2.0]), [[0.5, 0.0], [0.0, 0.125]])


def test_vonmises_mean_score():
    assert sdd.score("vonmises", np.pi / 2, [0.0, 2.0])[0] == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("label", oracles.LABELS)
def test_linked_quantities_follow_the_jacobian(label):
    d = sdd.get_distribution(label)
    rng = np.random.default_rng(2)
    theta = oracles.random_point(label, rng)
    y = oracles.draw(label, theta, 1, rng)[0]
    kinds = links.link_kinds(d.param_supports, list(d.default_links))
    jac = links.jacobian(theta, kinds)
    np.testing.assert_allclose(sdd.score(d, y, theta, linked=kinds != 0), sdd.score(d, y, theta) * jac)
    np.testing.assert_allclose(sdd.fisher(d, theta, linked=kinds != 0),
                               sdd.fisher(d, theta) * np.outer(jac, jac))


def test_links_round_trip():
    kinds = np.array([links.LOG, links.LOGIT, links.IDENTITY], dtype=np.intc)
    p = np.array([2.5, 0.3, -1.2])
    np.testing.assert_allclose(links.inverse(links.forward(p, kinds), kinds), p)
    assert links.wrap_name("mean", links.LOG) == "log(mean)"
    assert links.wrap_name("prob", links.LOGIT) == "logit(prob)"


def test_link_on_real_parameter_rejected():
    with pytest.raises(SpecificationError):
        sdd.link_apply("norm", [0.0, 1.0], [True, False])


def test_continuous_observation_outside_support():
    with pytest.raises(DomainError):
        sdd.loglik("exp", -1.0, [1.0])


def test_discrete_observation_outside_support():
    assert sdd.loglik("pois", 2.5, [1.0]) == -np.inf
    assert sdd.loglik("bernoulli", 2.0, [0.5]) == -np.inf


def test_parameter_outside_support():
    with pytest.raises(DomainError):
        sdd.loglik("pois", 1.0, [-1.0])
    with pytest.raises(DomainError):
        sdd.dist_mean("t", [0.0, 1.0, 1.5])


def test_t_degrees_of_freedom_static_only():
    with pytest.raises(SpecificationError):
        ModelSpec.build("t", par_static=[False, False, False])


def test_t_variance_parametrization():
    assert sdd.dist_variance("t", [1.0, 2.5, 7.0]) == pytest.approx(2.5)
