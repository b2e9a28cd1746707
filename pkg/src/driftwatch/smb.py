"""Safety measurement basis: measures, expression metrics, and indicators.

Indicators pair a metric with a comparator, threshold, and exposure window,
and carry traceability links back to assurance artifacts (events, barriers,
argument goals, requirements, evidence). Evaluation is pure over a run-store
snapshot plus the current architecture point values.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import yaml

from . import expr as expr_mod
from .architecture import SafetyArchitecture
from .expr import Expr, ExpressionSyntaxError, parse_expression
from .ingest import DataRun, LifetimeStore, Window, select_runs


class MetricScope(str, enum.Enum):
    LATEST_RUN = "latestRun"
    LIFETIME = "lifetime"


class Comparator(str, enum.Enum):
    LE = "<="
    LT = "<"
    GE = ">="
    GT = ">"
    EQ = "="

    def holds(self, value: float, threshold: float) -> bool:
        if self is Comparator.LE:
            return value <= threshold
        if self is Comparator.LT:
            return value < threshold
        if self is Comparator.GE:
            return value >= threshold
        if self is Comparator.GT:
            return value > threshold
        return value == threshold


class Verdict(str, enum.Enum):
    MET = "met"
    VIOLATED = "violated"
    INSUFFICIENT_EXPOSURE = "insufficientExposure"


class LinkKind(str, enum.Enum):
    EVENT = "event"
    BARRIER = "barrier"
    GOAL = "goal"
    ASSUMPTION = "assumption"
    REQUIREMENT = "requirement"
    EVIDENCE = "evidence"


@dataclass(frozen=True)
class Measure:
    id: str
    unit: str = ""
    source: str = ""


@dataclass(frozen=True)
class Metric:
    id: str
    expression: Expr
    scope: MetricScope = MetricScope.LIFETIME

    @property
    def expression_text(self) -> str:
        return self.expression.to_text()


class ExposureKind(str, enum.Enum):
    DURATION = "duration"  # hours
    EVENT_COUNT = "eventCount"


@dataclass(frozen=True)
class Exposure:
    kind: ExposureKind
    amount: float
    unit_event: Optional[str] = None  # measure counting the unit event, e.g. taxi operations

    def __post_init__(self) -> None:
        if not self.amount > 0:
            raise ValueError(f"exposure amount must be positive, got {self.amount}")

    def window(self) -> Window:
        if self.kind is ExposureKind.EVENT_COUNT:
            return Window(kind="events", amount=self.amount, unit_measure=self.unit_event)
        return Window(kind="duration", amount=self.amount)


@dataclass(frozen=True)
class ArtifactLink:
    kind: LinkKind
    ref: str


@dataclass(frozen=True)
class Indicator:
    id: str
    metric: str
    comparator: Comparator
    threshold: float
    exposure: Exposure
    links: tuple[ArtifactLink, ...] = ()

    def links_of(self, kind: LinkKind) -> tuple[str, ...]:
        return tuple(link.ref for link in self.links if link.kind is kind)


@dataclass(frozen=True)
class IndicatorStatus:
    indicator: str
    value: Optional[float]
    verdict: Optional[Verdict]
    exposure_observed: float
    error: Optional[str] = None


@dataclass
class Smb:
    measures: dict[str, Measure] = field(default_factory=dict)
    metrics: dict[str, Metric] = field(default_factory=dict)
    indicators: dict[str, Indicator] = field(default_factory=dict)

    def indicator_ids(self) -> set[str]:
        return set(self.indicators)

    def indicators_linked_to(self, kind: LinkKind, ref: str) -> list[Indicator]:
        return [
            ind
            for ind in self.indicators.values()
            if any(link.kind is kind and link.ref == ref for link in ind.links)
        ]

    def subset(self, indicator_ids: Sequence[str]) -> Smb:
        """SMB restricted to the given indicators (measures/metrics retained)."""
        missing = [i for i in indicator_ids if i not in self.indicators]
        if missing:
            raise KeyError(f"unknown indicator ids {missing}")
        return Smb(
            measures=dict(self.measures),
            metrics=dict(self.metrics),
            indicators={i: self.indicators[i] for i in sorted(indicator_ids)},
        )


class SmbFileError(ValueError):
    """Malformed SMB document."""


class MetricEvaluationError(ValueError):
    """Unresolved identifier, division by zero, or cyclic metric reference."""


def validate_smb(smb: Smb, architecture: SafetyArchitecture | None = None) -> list[str]:
    """Structural diagnostics: reference resolution, metric cycles, link targets."""
    diags: list[str] = []
    for metric in smb.metrics.values():
        for name in expr_mod.references(metric.expression):
            if name not in smb.measures and name not in smb.metrics:
                diags.append(f"{metric.id}: unresolved identifier {name!r}")
        for fn, target in expr_mod.accessor_refs(metric.expression):
            if fn in ("count", "sum") and target not in smb.measures:
                diags.append(f"{metric.id}: {fn}() needs a declared measure, got {target!r}")
            if architecture is not None:
                if fn == "integrity" and target not in architecture.barriers:
                    diags.append(f"{metric.id}: integrity() of unknown barrier {target!r}")
                if fn == "prob" and target not in architecture.events:
                    diags.append(f"{metric.id}: prob() of unknown event {target!r}")

    cycle = _find_metric_cycle(smb)
    if cycle:
        diags.append("cyclic metric reference: " + " -> ".join(cycle))

    for indicator in smb.indicators.values():
        if indicator.metric not in smb.metrics:
            diags.append(f"{indicator.id}: unresolved metric {indicator.metric!r}")
        if not indicator.links:
            diags.append(f"{indicator.id}: indicator has no artifact links")
        exposure = indicator.exposure
        if exposure.kind is ExposureKind.EVENT_COUNT:
            if not exposure.unit_event:
                diags.append(f"{indicator.id}: eventCount exposure needs a unitEvent measure")
            elif exposure.unit_event not in smb.measures:
                diags.append(f"{indicator.id}: unitEvent {exposure.unit_event!r} is not a declared measure")
        if architecture is not None:
            for link in indicator.links:
                if link.kind is LinkKind.EVENT and link.ref not in architecture.events:
                    diags.append(f"{indicator.id}: link to unknown event {link.ref!r}")
                if link.kind is LinkKind.BARRIER and link.ref not in architecture.barriers:
                    diags.append(f"{indicator.id}: link to unknown barrier {link.ref!r}")
    return diags


def _find_metric_cycle(smb: Smb) -> list[str] | None:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {m: WHITE for m in smb.metrics}
    stack: list[str] = []

    def visit(mid: str) -> list[str] | None:
        color[mid] = GREY
        stack.append(mid)
        for name in expr_mod.references(smb.metrics[mid].expression):
            if name not in smb.metrics:
                continue
            if color[name] == GREY:
                return stack[stack.index(name):] + [name]
            if color[name] == WHITE:
                found = visit(name)
                if found:
                    return found
        color[mid] = BLACK
        stack.pop()
        return None

    for mid in smb.metrics:
        if color[mid] == WHITE:
            found = visit(mid)
            if found:
                return found
    return None


def evaluate_metric(
    smb: Smb,
    metric: Metric | str,
    store: LifetimeStore | Sequence[DataRun],
    architecture: SafetyArchitecture | None = None,
    *,
    window_runs: Sequence[DataRun] | None = None,
    point_values: Mapping[str, float] | None = None,
) -> float:
    """Evaluate a metric over the store (or an explicit exposure window).

    Bare measure identifiers aggregate by sum over the metric's scope;
    metric identifiers evaluate recursively; `integrity(id)` / `prob(id)`
    read current point values from the architecture (overridable via
    `point_values`, e.g. after a Bayesian revision).
    """
    if isinstance(metric, str):
        if metric not in smb.metrics:
            raise MetricEvaluationError(f"unknown metric {metric!r}")
        metric = smb.metrics[metric]

    runs = store.snapshot() if isinstance(store, LifetimeStore) else tuple(store)
    if window_runs is not None:
        scope_runs = tuple(window_runs)
    elif metric.scope is MetricScope.LATEST_RUN:
        scope_runs = runs[-1:]
    else:
        scope_runs = runs

    evaluating: set[str] = set()

    def resolve_ident(name: str, metric_scope_runs: tuple[DataRun, ...]) -> float:
        if name in smb.measures:
            return sum(run.samples.get(name, 0.0) for run in metric_scope_runs)
        if name in smb.metrics:
            if name in evaluating:
                raise MetricEvaluationError(f"cyclic metric reference through {name!r}")
            evaluating.add(name)
            try:
                inner = smb.metrics[name]
                if window_runs is not None:
                    inner_runs = tuple(window_runs)
                else:
                    inner_runs = runs[-1:] if inner.scope is MetricScope.LATEST_RUN else runs
                return expr_mod.evaluate(
                    inner.expression,
                    lambda n: resolve_ident(n, inner_runs),
                    resolve_accessor,
                )
            finally:
                evaluating.discard(name)
        raise MetricEvaluationError(f"unresolved identifier {name!r}")

    def resolve_accessor(fn: str, target: str) -> float:
        if fn in ("sum", "count"):
            if target not in smb.measures:
                raise MetricEvaluationError(f"{fn}() of undeclared measure {target!r}")
            if fn == "sum":
                return sum(run.samples.get(target, 0.0) for run in scope_runs)
            return float(sum(1 for run in scope_runs if target in run.samples))
        if architecture is None:
            raise MetricEvaluationError(f"{fn}({target}) needs a safety architecture")
        if point_values and target in point_values:
            return point_values[target]
        if fn == "integrity":
            barrier = architecture.barriers.get(target)
            if barrier is None:
                raise MetricEvaluationError(f"integrity() of unknown barrier {target!r}")
            return barrier.point_integrity()
        if fn == "prob":
            event = architecture.events.get(target)
            if event is None:
                raise MetricEvaluationError(f"prob() of unknown event {target!r}")
            p = event.point_probability()
            if p is None:
                raise MetricEvaluationError(f"event {target!r} has no declared probability")
            return p
        raise MetricEvaluationError(f"unknown accessor {fn!r}")

    evaluating.add(metric.id)
    try:
        return expr_mod.evaluate(
            metric.expression,
            lambda n: resolve_ident(n, scope_runs),
            resolve_accessor,
        )
    except ZeroDivisionError as exc:
        raise MetricEvaluationError(str(exc)) from None


def evaluate_indicator(
    smb: Smb,
    indicator: Indicator | str,
    store: LifetimeStore | Sequence[DataRun],
    architecture: SafetyArchitecture | None = None,
    *,
    point_values: Mapping[str, float] | None = None,
) -> IndicatorStatus:
    """Metric value over the exposure window, compared against the threshold."""
    if isinstance(indicator, str):
        indicator = smb.indicators[indicator]
    runs = store.snapshot() if isinstance(store, LifetimeStore) else tuple(store)
    window_runs, observed = select_runs(runs, indicator.exposure.window())
    value = evaluate_metric(
        smb,
        indicator.metric,
        runs,
        architecture,
        window_runs=window_runs,
        point_values=point_values,
    )
    if observed < indicator.exposure.amount:
        verdict = Verdict.INSUFFICIENT_EXPOSURE
    elif indicator.comparator.holds(value, indicator.threshold):
        verdict = Verdict.MET
    else:
        verdict = Verdict.VIOLATED
    return IndicatorStatus(
        indicator=indicator.id,
        value=value,
        verdict=verdict,
        exposure_observed=observed,
    )


def list_statuses(
    smb: Smb,
    store: LifetimeStore | Sequence[DataRun],
    architecture: SafetyArchitecture | None = None,
    *,
    point_values: Mapping[str, float] | None = None,
) -> list[IndicatorStatus]:
    """One status per indicator, ordered by id; per-indicator errors never abort."""
    statuses: list[IndicatorStatus] = []
    for indicator_id in sorted(smb.indicators):
        try:
            statuses.append(
                evaluate_indicator(smb, indicator_id, store, architecture, point_values=point_values)
            )
        except (MetricEvaluationError, ValueError) as exc:
            statuses.append(
                IndicatorStatus(
                    indicator=indicator_id,
                    value=None,
                    verdict=None,
                    exposure_observed=0.0,
                    error=str(exc),
                )
            )
    return statuses


# ---------------------------------------------------------------------------
# File loading
# ---------------------------------------------------------------------------

def exposure_from_dict(raw: dict, where: str = "exposure") -> Exposure:
    try:
        return Exposure(
            kind=ExposureKind(raw["kind"]),
            amount=float(raw["amount"]),
            unit_event=raw.get("unitEvent"),
        )
    except (KeyError, ValueError) as exc:
        raise SmbFileError(f"{where}: bad exposure {raw!r}: {exc}") from None


def smb_from_dict(doc: dict) -> Smb:
    smb = Smb()
    for raw in doc.get("measures") or []:
        measure = Measure(id=str(raw["id"]), unit=str(raw.get("unit", "")), source=str(raw.get("source", "")))
        if measure.id in smb.measures:
            raise SmbFileError(f"duplicate measure id {measure.id!r}")
        smb.measures[measure.id] = measure

    for raw in doc.get("metrics") or []:
        mid = str(raw["id"])
        try:
            expression = parse_expression(str(raw["expression"]))
        except ExpressionSyntaxError as exc:
            raise SmbFileError(f"metric {mid}: {exc}") from None
        if mid in smb.metrics or mid in smb.measures:
            raise SmbFileError(f"duplicate metric id {mid!r}")
        smb.metrics[mid] = Metric(
            id=mid,
            expression=expression,
            scope=MetricScope(raw.get("scope", "lifetime")),
        )

    for raw in doc.get("indicators") or []:
        iid = str(raw["id"])
        if iid in smb.indicators:
            raise SmbFileError(f"duplicate indicator id {iid!r}")
        links = tuple(
            ArtifactLink(kind=LinkKind(link["kind"]), ref=str(link["ref"]))
            for link in raw.get("links", [])
        )
        try:
            smb.indicators[iid] = Indicator(
                id=iid,
                metric=str(raw["metric"]),
                comparator=Comparator(raw["comparator"]),
                threshold=float(raw["threshold"]),
                exposure=exposure_from_dict(raw["exposure"], where=iid),
                links=links,
            )
        except (KeyError, ValueError) as exc:
            raise SmbFileError(f"bad indicator record {iid}: {exc}") from None
    return smb


def load_smb(path: str | Path) -> Smb:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise SmbFileError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise SmbFileError(f"{path}: expected a mapping at the top level")
    return smb_from_dict(doc)
