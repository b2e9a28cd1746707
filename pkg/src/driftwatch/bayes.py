"""Conjugate beta-binomial inference for barrier integrities and event probabilities.

Development test campaigns give beta priors (successes/failures become the two
shape parameters); operational observations arrive as binomial counts and the
posterior stays in closed form. Point values handed to risk propagation are
distribution means.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

# Beta shape parameters must be positive; a zero observed count is replaced by
# this Jeffreys-style floor when building a prior from development metrics.
ZERO_COUNT_FLOOR = 0.5


@dataclass(frozen=True)
class BetaDist:
    """Beta distribution over a barrier integrity or event probability."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"beta shape parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1.0))


@dataclass(frozen=True)
class BinomialObservation:
    """Counts from a Bernoulli sequence: trials = successes + failures."""

    trials: int
    successes: int
    failures: int

    def __post_init__(self) -> None:
        if self.trials < 0 or self.successes < 0 or self.failures < 0:
            raise ValueError("observation counts must be non-negative")
        if self.successes + self.failures != self.trials:
            raise ValueError(
                f"successes ({self.successes}) + failures ({self.failures}) != trials ({self.trials})"
            )

    @classmethod
    def from_counts(cls, trials: int, successes: int) -> BinomialObservation:
        return cls(trials=trials, successes=successes, failures=trials - successes)


def prior_from_dev_metrics(
    successes: float, failures: float, *, zero_floor: float = ZERO_COUNT_FLOOR
) -> BetaDist:
    """Prior from development test counts: alpha := successes, beta := failures.

    A zero count maps to `zero_floor` so the distribution stays proper; both
    counts zero is an error (no prior information at all).
    """
    if successes < 0 or failures < 0:
        raise ValueError("development metric counts must be non-negative")
    if successes + failures <= 0:
        raise ValueError("cannot build a prior from zero successes and zero failures")
    return BetaDist(successes or zero_floor, failures or zero_floor)


def posterior(prior: BetaDist, obs: BinomialObservation) -> BetaDist:
    """Conjugate update: Beta(a, b) + (s, f) -> Beta(a + s, b + f)."""
    return BetaDist(prior.alpha + obs.successes, prior.beta + obs.failures)


def likelihood(p: float, obs: BinomialObservation) -> float:
    """Binomial likelihood C(n, y) * p^y * (1-p)^x of the observed counts at p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {p}")
    coeff = math.comb(obs.trials, obs.successes)
    return coeff * p**obs.successes * (1.0 - p) ** obs.failures
