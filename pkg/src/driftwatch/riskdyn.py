"""Risk dynamics: safety-target conversion, risk revision, ratios, and drift.

Safety targets become indicators (threshold over an exposure); development
priors become operational indicators via a one-sided credible bound; logged
operational observations revise element posteriors which propagate to revised
consequence probabilities; risk ratios against the approved baseline quantify
the change, and their trend yields a drift verdict.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .architecture import (
    EventKind,
    RiskClassification,
    RiskLevel,
    RiskMatrixConfig,
    SafetyArchitecture,
    classify_risk,
    propagate_risk,
)
from .bayes import BetaDist, BinomialObservation, posterior
from .ingest import DataRun, LifetimeStore
from .smb import (
    Exposure,
    ExposureKind,
    Comparator,
    Indicator,
    LinkKind,
    Smb,
    evaluate_metric,
)


@dataclass(frozen=True)
class Tlos:
    """Maximum acceptable probability of a safety effect per unit of exposure."""

    probability: float
    exposure_unit: str = "operation"

    def __post_init__(self) -> None:
        if not 0.0 < self.probability < 1.0:
            raise ValueError(f"TLOS probability must be in (0, 1), got {self.probability}")


class ReferenceKind(str, enum.Enum):
    BASELINE = "baseline"
    TARGET = "target"
    PREVIOUS_REVISION = "previousRevision"


@dataclass(frozen=True)
class RiskRatio:
    event_id: str
    value: float
    reference: ReferenceKind
    at_exposure: float = 0.0

    def __post_init__(self) -> None:
        if not self.value > 0:
            raise ValueError(f"risk ratio must be positive, got {self.value}")


@dataclass(frozen=True)
class TrendEstimate:
    slope: float  # per exposure unit
    intercept: float
    points: int

    def __post_init__(self) -> None:
        if self.points < 2:
            raise ValueError("a trend needs at least 2 points")


class DriftVerdict(str, enum.Enum):
    STABLE = "stable"
    DRIFTING = "drifting"
    THRESHOLD_VIOLATED = "thresholdViolated"


@dataclass(frozen=True)
class DriftConfig:
    slope_eps: float = 0.0
    min_points: int = 3
    rr_limit: float = 1.0


# ---------------------------------------------------------------------------
# Indicator derivation
# ---------------------------------------------------------------------------

def tlos_to_indicator(
    tlos: Tlos,
    exposure: float,
    metric: str,
    *,
    indicator_id: str,
    unit_event: str | None = None,
    links: Sequence = (),
    flight_hour_factor: float | None = None,
) -> Indicator:
    """Convert a safety target into an event-frequency indicator.

    Threshold = floor(probability x exposure) events with comparator <=.
    With `flight_hour_factor` t the exposure is expressed as a duration of
    exposure x t flight hours instead of a unit-event count.
    """
    threshold = math.floor(tlos.probability * exposure)
    if threshold < 1:
        raise ValueError(
            f"exposure {exposure:g} is too small to express one event at "
            f"probability {tlos.probability:g} (needs >= {1.0 / tlos.probability:g})"
        )
    if flight_hour_factor is not None:
        exp = Exposure(kind=ExposureKind.DURATION, amount=exposure * flight_hour_factor)
    else:
        exp = Exposure(kind=ExposureKind.EVENT_COUNT, amount=exposure, unit_event=unit_event)
    return Indicator(
        id=indicator_id,
        metric=metric,
        comparator=Comparator.LE,
        threshold=float(threshold),
        exposure=exp,
        links=tuple(links),
    )


def allocate_scenario(indicator: Indicator, fraction: float) -> Indicator:
    """Scale an indicator's exposure to the share of operations in one scenario."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"scenario fraction must be in (0, 1], got {fraction}")
    exposure = replace(indicator.exposure, amount=indicator.exposure.amount * fraction)
    return replace(indicator, exposure=exposure)


def derive_barrier_si(prior: BetaDist, n: int) -> tuple[float, int]:
    """Failure threshold y over n demands from a one-sided prior bound.

    The conservative integrity range is [mean + stddev, 1]; observing at most
    y = n - floor(n x bound) failures over n demands keeps performance inside
    that range.
    """
    if n < 1:
        raise ValueError(f"exposure n must be >= 1, got {n}")
    bound = prior.mean + math.sqrt(prior.variance)
    y = max(0, n - math.floor(n * bound))
    return bound, y


# ---------------------------------------------------------------------------
# Risk revision
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ElementUpdate:
    element_id: str
    element_kind: str  # 'barrier' or 'event'
    prior: BetaDist
    observation: BinomialObservation
    posterior: BetaDist

    @property
    def point_value(self) -> float:
        return self.posterior.mean


@dataclass
class RevisionRecord:
    timestamp: datetime
    at_exposure: float
    overrides: dict[str, float]
    elements: dict[str, ElementUpdate]
    probabilities: dict[str, float]
    classifications: dict[str, dict[str, RiskClassification]]  # event -> {before, after}
    risk_ratios: dict[str, dict[str, Optional[float]]]  # event -> {baseline, target, previousRevision}

    def to_json(self) -> dict:
        return {
            "timestamp": self.timestamp.isoformat(),
            "atExposure": self.at_exposure,
            "overrides": dict(sorted(self.overrides.items())),
            "elements": {
                eid: {
                    "kind": u.element_kind,
                    "prior": [u.prior.alpha, u.prior.beta],
                    "observation": {
                        "trials": u.observation.trials,
                        "successes": u.observation.successes,
                        "failures": u.observation.failures,
                    },
                    "posterior": [u.posterior.alpha, u.posterior.beta],
                    "pointValue": u.point_value,
                }
                for eid, u in sorted(self.elements.items())
            },
            "probabilities": dict(sorted(self.probabilities.items())),
            "classifications": {
                eid: {side: {"category": c.category, "level": c.level.value} for side, c in pair.items()}
                for eid, pair in sorted(self.classifications.items())
            },
            "riskRatios": {eid: dict(r) for eid, r in sorted(self.risk_ratios.items())},
        }

    @classmethod
    def from_json(cls, doc: dict) -> RevisionRecord:
        elements = {
            eid: ElementUpdate(
                element_id=eid,
                element_kind=raw["kind"],
                prior=BetaDist(*raw["prior"]),
                observation=BinomialObservation(
                    trials=raw["observation"]["trials"],
                    successes=raw["observation"]["successes"],
                    failures=raw["observation"]["failures"],
                ),
                posterior=BetaDist(*raw["posterior"]),
            )
            for eid, raw in doc.get("elements", {}).items()
        }
        classifications = {
            eid: {
                side: RiskClassification(category=c["category"], level=RiskLevel(c["level"]))
                for side, c in pair.items()
            }
            for eid, pair in doc.get("classifications", {}).items()
        }
        ts = datetime.fromisoformat(doc["timestamp"])
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        return cls(
            timestamp=ts,
            at_exposure=float(doc.get("atExposure", 0.0)),
            overrides={k: float(v) for k, v in doc.get("overrides", {}).items()},
            elements=elements,
            probabilities={k: float(v) for k, v in doc.get("probabilities", {}).items()},
            classifications=classifications,
            risk_ratios={
                eid: {k: (float(v) if v is not None else None) for k, v in r.items()}
                for eid, r in doc.get("riskRatios", {}).items()
            },
        )


class RevisionError(ValueError):
    """Missing metric linkage or an empty observation window."""


def baseline_probabilities(arch: SafetyArchitecture) -> dict[str, float]:
    """Approved-baseline event probabilities from the declared point values."""
    values = arch.point_values()
    merged: dict[str, float] = {}
    for bowtie in arch.bowties:
        merged.update(propagate_risk(bowtie, values))
    return merged


def _consequence_events(arch: SafetyArchitecture) -> list[str]:
    seen: list[str] = []
    for bowtie in arch.bowties:
        for chain in bowtie.consequence_chains:
            if chain.consequence not in seen:
                seen.append(chain.consequence)
    return seen


def _revisable_elements(arch: SafetyArchitecture, smb: Smb) -> dict[str, tuple[str, BetaDist, Indicator]]:
    """Elements eligible for Bayesian update: Beta-valued barrier/threat with a linked indicator.

    The linked indicator's metric counts unwanted outcomes (barrier failures,
    event occurrences); its exposure unitEvent measure counts trials.
    """
    eligible: dict[str, tuple[str, BetaDist, Indicator]] = {}
    for barrier in arch.barriers.values():
        if not isinstance(barrier.integrity, BetaDist):
            continue
        for indicator in smb.indicators_linked_to(LinkKind.BARRIER, barrier.id):
            if indicator.exposure.kind is ExposureKind.EVENT_COUNT and indicator.exposure.unit_event:
                eligible[barrier.id] = ("barrier", barrier.integrity, indicator)
                break
    for event in arch.events.values():
        if event.kind is not EventKind.THREAT or not isinstance(event.probability, BetaDist):
            continue
        for indicator in smb.indicators_linked_to(LinkKind.EVENT, event.id):
            if indicator.exposure.kind is ExposureKind.EVENT_COUNT and indicator.exposure.unit_event:
                eligible[event.id] = ("event", event.probability, indicator)
                break
    return eligible


def _observe(
    smb: Smb,
    indicator: Indicator,
    runs: Sequence[DataRun],
    arch: SafetyArchitecture,
    element_kind: str,
) -> BinomialObservation | None:
    """Build the binomial observation for one element from the lifetime store.

    Returns None when no trials have accrued (identity update). The metric is
    evaluated with its original, unmodified definition over all stored runs.
    """
    trials = sum(run.samples.get(indicator.exposure.unit_event, 0.0) for run in runs)
    if trials <= 0:
        return None
    unwanted = evaluate_metric(smb, indicator.metric, runs, arch, window_runs=tuple(runs))
    n, bad = int(round(trials)), int(round(unwanted))
    if bad < 0 or bad > n:
        raise RevisionError(
            f"metric {indicator.metric!r} yields {bad} unwanted outcomes over {n} trials"
        )
    if element_kind == "barrier":
        return BinomialObservation(trials=n, successes=n - bad, failures=bad)
    return BinomialObservation(trials=n, successes=bad, failures=n - bad)


def revise_risk(
    arch: SafetyArchitecture,
    smb: Smb,
    store: LifetimeStore | Sequence[DataRun],
    *,
    overrides: Mapping[str, float] | None = None,
    previous: RevisionRecord | None = None,
    slate: Sequence[str] | None = None,
    timestamp: datetime | None = None,
    config: RiskMatrixConfig | None = None,
) -> RevisionRecord:
    """Revise the operational risk assessment from logged observations.

    Posteriors are rebuilt from the declared development priors plus all
    operational observations in the store (plus point `overrides`, e.g. an
    operationally relaxed barrier), then propagated and reclassified. With
    `slate`, only the named elements are updated and each must have a metric
    linkage and data.
    """
    config = config or arch.risk_matrix
    overrides = dict(overrides or {})
    runs = store.snapshot() if isinstance(store, LifetimeStore) else tuple(store)

    eligible = _revisable_elements(arch, smb)
    if slate is not None:
        missing = [e for e in slate if e not in eligible]
        if missing:
            raise RevisionError(f"no success/failure metric linkage for {missing}")
        eligible = {e: eligible[e] for e in slate}

    updates: dict[str, ElementUpdate] = {}
    for element_id, (kind, prior, indicator) in sorted(eligible.items()):
        obs = _observe(smb, indicator, runs, arch, kind)
        if obs is None:
            if slate is not None:
                raise RevisionError(f"exposure window for {element_id!r} is empty")
            obs = BinomialObservation(0, 0, 0)
        updates[element_id] = ElementUpdate(
            element_id=element_id,
            element_kind=kind,
            prior=prior,
            observation=obs,
            posterior=posterior(prior, obs),
        )

    values = arch.point_values()
    for element_id, update in updates.items():
        values[element_id] = update.point_value
    for element_id, value in overrides.items():
        if element_id not in values:
            raise RevisionError(f"override for unknown element {element_id!r}")
        if not 0.0 <= value <= 1.0:
            raise RevisionError(f"override for {element_id!r} outside [0, 1]: {value}")
        values[element_id] = value

    probabilities: dict[str, float] = {}
    for bowtie in arch.bowties:
        probabilities.update(propagate_risk(bowtie, values))

    baseline = baseline_probabilities(arch)
    classifications: dict[str, dict[str, RiskClassification]] = {}
    ratios: dict[str, dict[str, Optional[float]]] = {}
    at_exposure = max((u.observation.trials for u in updates.values()), default=0)
    for event_id in _consequence_events(arch):
        event = arch.events[event_id]
        if event.severity is None:
            continue
        current = probabilities[event_id]
        before_prob = previous.probabilities[event_id] if previous else baseline[event_id]
        classifications[event_id] = {
            "before": classify_risk(before_prob, event.severity, config),
            "after": classify_risk(current, event.severity, config),
        }
        target = event.target_probability if event.target_probability else baseline[event_id]
        ratios[event_id] = {
            "baseline": current / baseline[event_id] if baseline[event_id] > 0 else None,
            "target": current / target if target > 0 else None,
            "previousRevision": (
                current / previous.probabilities[event_id]
                if previous and previous.probabilities.get(event_id, 0) > 0
                else None
            ),
        }

    return RevisionRecord(
        timestamp=timestamp or datetime.now(timezone.utc),
        at_exposure=float(at_exposure),
        overrides=overrides,
        elements=updates,
        probabilities=probabilities,
        classifications=classifications,
        risk_ratios=ratios,
    )


class RevisionLog:
    """Append-only revision history, one JSON record per line."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.records: list[RevisionRecord] = []
        if self.path and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self.records.append(RevisionRecord.from_json(json.loads(line)))

    def append(self, record: RevisionRecord) -> None:
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_json()) + "\n")
        self.records.append(record)

    @property
    def latest(self) -> RevisionRecord | None:
        return self.records[-1] if self.records else None

    def current_overrides(self) -> dict[str, float]:
        return dict(self.latest.overrides) if self.latest else {}

    def ratio_series(self, event_id: str, reference: str = "baseline") -> list[tuple[float, float]]:
        series: list[tuple[float, float]] = []
        for record in self.records:
            rr = record.risk_ratios.get(event_id, {}).get(reference)
            if rr is not None:
                series.append((record.at_exposure, rr))
        return series


# ---------------------------------------------------------------------------
# Ratios, trends, drift
# ---------------------------------------------------------------------------

def risk_ratio(
    current: float,
    reference: float,
    kind: ReferenceKind = ReferenceKind.BASELINE,
    *,
    event_id: str = "",
    at_exposure: float = 0.0,
) -> RiskRatio:
    """Relative risk of an event against a reference probability."""
    if reference <= 0:
        raise ValueError(f"reference probability must be positive, got {reference}")
    return RiskRatio(event_id=event_id, value=current / reference, reference=kind, at_exposure=at_exposure)


def fit_trend(series: Sequence[tuple[float, float]]) -> TrendEstimate:
    """Ordinary least squares over (exposure, risk ratio) pairs."""
    if len(series) < 2:
        raise ValueError(f"trend fitting needs at least 2 points, got {len(series)}")
    xs = [x for x, _ in series]
    ys = [y for _, y in series]
    n = float(len(series))
    x_mean = sum(xs) / n
    y_mean = sum(ys) / n
    sxx = sum((x - x_mean) ** 2 for x in xs)
    if sxx == 0:
        raise ValueError("all exposures are equal; the slope is undefined")
    sxy = sum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return TrendEstimate(slope=slope, intercept=y_mean - slope * x_mean, points=len(series))


def drift_verdict(
    trend: TrendEstimate | None,
    latest_ratios: Iterable[float],
    config: DriftConfig = DriftConfig(),
) -> DriftVerdict:
    """Practical-drift decision from the latest ratios and their trend.

    Any consequence ratio above the limit trips thresholdViolated; otherwise a
    positive slope over enough points means drifting; otherwise stable.
    """
    if any(rr > config.rr_limit for rr in latest_ratios):
        return DriftVerdict.THRESHOLD_VIOLATED
    if trend is not None and trend.points >= config.min_points and trend.slope > config.slope_eps:
        return DriftVerdict.DRIFTING
    return DriftVerdict.STABLE
