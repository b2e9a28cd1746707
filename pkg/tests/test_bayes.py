"""Beta-binomial inference unit and property tests."""
from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from driftwatch.bayes import (
    BetaDist,
    BinomialObservation,
    likelihood,
    posterior,
    prior_from_dev_metrics,
)


class TestPriorFromDevMetrics:
    def test_worked_example_prior(self):
        prior = prior_from_dev_metrics(24, 8)
        assert prior == BetaDist(24, 8)
        assert prior.mean == 0.75
        assert prior.variance == pytest.approx(0.0057, abs=1e-4)

    def test_uniform_prior(self):
        prior = prior_from_dev_metrics(1, 1)
        assert prior == BetaDist(1, 1)
        assert prior.mean == 0.5
        assert prior.variance == pytest.approx(1 / 12)

    def test_zero_failures_gets_floor(self):
        prior = prior_from_dev_metrics(10, 0)
        assert prior == BetaDist(10, 0.5)
        # perfect observations keep pushing the posterior mean toward 1
        current = prior
        means = []
        for _ in range(4):
            current = posterior(current, BinomialObservation(100, 100, 0))
            means.append(current.mean)
        assert means == sorted(means)
        assert means[-1] > 0.998

    def test_zero_successes_gets_floor(self):
        assert prior_from_dev_metrics(0, 7) == BetaDist(0.5, 7)

    def test_both_zero_rejected(self):
        with pytest.raises(ValueError):
            prior_from_dev_metrics(0, 0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            prior_from_dev_metrics(-1, 5)


class TestBetaDist:
    def test_posterior_moments(self):
        dist = BetaDist(30, 12)
        assert dist.mean == pytest.approx(0.7143, abs=1e-4)
        assert dist.variance == pytest.approx(0.0047, abs=1e-4)

    def test_shape_positivity(self):
        with pytest.raises(ValueError):
            BetaDist(0, 1)
        with pytest.raises(ValueError):
            BetaDist(1, -2)


class TestPosterior:
    def test_worked_example_update(self):
        post = posterior(BetaDist(24, 8), BinomialObservation(10, 6, 4))
        assert post == BetaDist(30, 12)

    def test_threat_event_update(self):
        post = posterior(BetaDist(10, 190), BinomialObservation(10, 4, 6))
        assert post == BetaDist(14, 196)
        assert post.mean == pytest.approx(0.0667, abs=1e-4)

    def test_no_data_is_identity(self):
        prior = BetaDist(3.5, 2.5)
        assert posterior(prior, BinomialObservation(0, 0, 0)) == prior

    def test_observation_consistency_enforced(self):
        with pytest.raises(ValueError):
            BinomialObservation(10, 6, 5)
        with pytest.raises(ValueError):
            BinomialObservation(-1, 0, -1)


class TestLikelihood:
    def test_worked_example_value(self):
        value = likelihood(0.75, BinomialObservation(10, 6, 4))
        assert value == pytest.approx(math.comb(10, 6) * 0.75**6 * 0.25**4)
        assert value == pytest.approx(0.1460, abs=1e-4)

    def test_certain_success(self):
        assert likelihood(1.0, BinomialObservation(7, 7, 0)) == 1.0

    def test_certain_failure(self):
        assert likelihood(0.0, BinomialObservation(7, 0, 7)) == 1.0

    def test_probability_domain(self):
        with pytest.raises(ValueError):
            likelihood(1.5, BinomialObservation(1, 1, 0))


@given(
    alpha=st.integers(1, 50),
    beta=st.integers(1, 50),
    first=st.tuples(st.integers(0, 20), st.integers(0, 20)),
    second=st.tuples(st.integers(0, 20), st.integers(0, 20)),
)
def test_batch_equals_sequential(alpha, beta, first, second):
    prior = BetaDist(alpha, beta)
    obs_a = BinomialObservation(sum(first), first[0], first[1])
    obs_b = BinomialObservation(sum(second), second[0], second[1])
    combined = BinomialObservation(
        obs_a.trials + obs_b.trials,
        obs_a.successes + obs_b.successes,
        obs_a.failures + obs_b.failures,
    )
    assert posterior(prior, combined) == posterior(posterior(prior, obs_a), obs_b)


def test_posterior_mean_between_prior_and_empirical():
    rng = random.Random(20260809)
    for _ in range(300):
        prior = BetaDist(rng.randint(1, 40), rng.randint(1, 40))
        trials = rng.randint(1, 50)
        successes = rng.randint(0, trials)
        rate = successes / trials
        if rate == pytest.approx(prior.mean):
            continue
        post_mean = posterior(prior, BinomialObservation(trials, successes, trials - successes)).mean
        low, high = sorted((prior.mean, rate))
        assert low < post_mean < high


def test_posterior_variance_shrinks_in_expectation():
    """Law of total variance: E[Var(p|Y)] < Var(p), enumerated exactly over the
    beta-binomial predictive. (Pointwise shrinkage is false: Beta(1, 30) plus a
    single surprising success *raises* the variance.)"""
    surprising = posterior(BetaDist(1, 30), BinomialObservation(1, 1, 0))
    assert surprising.variance > BetaDist(1, 30).variance

    rng = random.Random(7)
    for _ in range(200):
        prior = BetaDist(rng.uniform(1.0, 30), rng.uniform(1.0, 30))
        trials = rng.randint(1, 25)
        expected_var = 0.0
        for successes in range(trials + 1):
            # predictive pmf: C(n,y) B(a+y, b+n-y) / B(a, b)
            log_pmf = (
                math.lgamma(trials + 1)
                - math.lgamma(successes + 1)
                - math.lgamma(trials - successes + 1)
                + math.lgamma(prior.alpha + successes)
                + math.lgamma(prior.beta + trials - successes)
                - math.lgamma(prior.alpha + prior.beta + trials)
                - math.lgamma(prior.alpha)
                - math.lgamma(prior.beta)
                + math.lgamma(prior.alpha + prior.beta)
            )
            post = posterior(prior, BinomialObservation(trials, successes, trials - successes))
            expected_var += math.exp(log_pmf) * post.variance
        assert expected_var < prior.variance


def test_posterior_variance_shrinks_for_prior_consistent_data():
    rng = random.Random(8)
    for _ in range(300):
        prior = BetaDist(rng.uniform(0.5, 30), rng.uniform(0.5, 30))
        if prior.alpha + prior.beta < 1:
            continue
        trials = rng.randint(1, 40)
        successes = round(trials * prior.mean)
        post = posterior(prior, BinomialObservation(trials, successes, trials - successes))
        assert post.variance < prior.variance


def test_unnormalized_posterior_integral_matches_closed_form():
    """Trapezoid integration of prior-density x likelihood against the exact
    Beta normalization (independent of the conjugate-update code path)."""
    rng = random.Random(99)
    grid = np.linspace(0.0, 1.0, 100_001)
    trapezoid = getattr(np, "trapezoid", np.trapz)
    for _ in range(20):
        alpha, beta = rng.randint(1, 12), rng.randint(1, 12)
        trials = rng.randint(1, 10)
        successes = rng.randint(0, trials)
        obs = BinomialObservation(trials, successes, trials - successes)
        with np.errstate(divide="ignore", invalid="ignore"):
            density = grid ** (alpha - 1) * (1 - grid) ** (beta - 1)
            density = np.nan_to_num(density, nan=0.0, posinf=0.0)
            lik = math.comb(trials, successes) * grid**successes * (1 - grid) ** obs.failures
        numeric = trapezoid(density * lik, grid)
        a_post, b_post = alpha + successes, beta + obs.failures
        exact = math.comb(trials, successes) * math.exp(
            math.lgamma(a_post) + math.lgamma(b_post) - math.lgamma(a_post + b_post)
        )
        assert numeric == pytest.approx(exact, rel=1e-6)
