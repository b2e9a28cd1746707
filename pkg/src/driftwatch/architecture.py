"""Safety architecture: bow-tie views, risk propagation, risk-matrix classification.

A bow-tie view chains threat events through prevention barriers into a top
event, and the top event through recovery barriers into consequence events.
Propagation uses frequency semantics: each chain contributes its threat
probability times the breach probabilities of its barriers, chains sum, and
the result is clamped to [0, 1].
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

import yaml

from .bayes import BetaDist

ProbabilityValue = Union[BetaDist, float]


class EventKind(str, enum.Enum):
    THREAT = "threat"
    INTERMEDIATE = "intermediate"
    TOP = "top"
    CONSEQUENCE = "consequence"


class BarrierRole(str, enum.Enum):
    PREVENTION = "prevention"
    RECOVERY = "recovery"


class RiskLevel(str, enum.Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"


CATEGORIES = ("A", "B", "C", "D", "E")


@dataclass(frozen=True)
class OperatingContext:
    """Hazardous activity, environmental condition, and system state of a scenario."""

    activity: str
    environment: str
    system_state: str
    operation_fraction: float  # share of all operations occurring in this context


@dataclass
class Event:
    id: str
    name: str
    kind: EventKind
    severity: Optional[int] = None  # 1 (catastrophic) .. 5 (minimal); consequence events only
    probability: Optional[ProbabilityValue] = None
    target_probability: Optional[float] = None

    def point_probability(self) -> Optional[float]:
        if isinstance(self.probability, BetaDist):
            return self.probability.mean
        return self.probability


@dataclass
class Barrier:
    id: str
    name: str
    role: BarrierRole
    integrity: ProbabilityValue
    controls: list[str] = field(default_factory=list)
    nested_architecture: Optional[str] = None  # stored, never auto-propagated

    def point_integrity(self) -> float:
        if isinstance(self.integrity, BetaDist):
            return self.integrity.mean
        return self.integrity


@dataclass(frozen=True)
class ThreatChain:
    """One left-side chain: threat -> barriers -> top event.

    `intermediates` maps a barrier count k to the event that occurs once the
    first k barriers of the chain have been breached.
    """

    threat: str
    barriers: tuple[str, ...] = ()
    intermediates: Mapping[int, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ConsequenceChain:
    """One right-side chain: top event -> recovery barriers -> consequence."""

    barriers: tuple[str, ...]
    consequence: str


@dataclass
class BowTieView:
    context: str  # named operating context
    top_event: str
    threat_chains: list[ThreatChain]
    consequence_chains: list[ConsequenceChain]

    def barrier_ids(self) -> set[str]:
        ids: set[str] = set()
        for chain in self.threat_chains:
            ids.update(chain.barriers)
        for chain in self.consequence_chains:
            ids.update(chain.barriers)
        return ids

    def event_ids(self) -> set[str]:
        ids = {self.top_event}
        for chain in self.threat_chains:
            ids.add(chain.threat)
            ids.update(chain.intermediates.values())
        for chain in self.consequence_chains:
            ids.add(chain.consequence)
        return ids


# Default 5x5 level map. Row = severity (1 catastrophic .. 5 minimal),
# column = probability category (A frequent .. E extremely improbable).
# Pinned cells: (4,A)=Medium, (4,C)=Medium, (4,D)=Low; the rest follow the
# usual diagonal shape and are fully user-configurable.
DEFAULT_LEVELS: dict[tuple[int, str], RiskLevel] = {}
for _sev, _row in {
    1: ("High", "High", "High", "Medium", "Low"),
    2: ("High", "High", "Medium", "Medium", "Low"),
    3: ("High", "Medium", "Medium", "Low", "Low"),
    4: ("Medium", "Medium", "Medium", "Low", "Low"),
    5: ("Medium", "Low", "Low", "Low", "Low"),
}.items():
    for _cat, _lvl in zip(CATEGORIES, _row):
        DEFAULT_LEVELS[(_sev, _cat)] = RiskLevel(_lvl)

DEFAULT_PROBABILITY_BOUNDS = (1e-2, 1e-3, 1e-4, 1e-6)


@dataclass(frozen=True)
class RiskMatrixConfig:
    """Probability-category bounds plus the (severity, category) -> level map."""

    probability_bounds: tuple[float, float, float, float] = DEFAULT_PROBABILITY_BOUNDS
    level_of: Mapping[tuple[int, str], RiskLevel] = field(
        default_factory=lambda: dict(DEFAULT_LEVELS)
    )

    def category(self, probability: float) -> str:
        for bound, letter in zip(self.probability_bounds, CATEGORIES):
            if probability >= bound:
                return letter
        return CATEGORIES[-1]


@dataclass(frozen=True)
class RiskClassification:
    category: str  # e.g. "4D": severity digit + probability letter
    level: RiskLevel

    def __str__(self) -> str:
        return f"{self.category} ({self.level.value})"


@dataclass
class SafetyArchitecture:
    contexts: dict[str, OperatingContext] = field(default_factory=dict)
    events: dict[str, Event] = field(default_factory=dict)
    barriers: dict[str, Barrier] = field(default_factory=dict)
    bowties: list[BowTieView] = field(default_factory=list)
    risk_matrix: RiskMatrixConfig = field(default_factory=RiskMatrixConfig)

    def point_values(self) -> dict[str, float]:
        """Declared point values (distribution means) for threats and barriers."""
        values: dict[str, float] = {}
        for event in self.events.values():
            p = event.point_probability()
            if p is not None:
                values[event.id] = p
        for barrier in self.barriers.values():
            values[barrier.id] = barrier.point_integrity()
        return values

    def sole_consequence(self, bowtie: BowTieView) -> str:
        ids = sorted({c.consequence for c in bowtie.consequence_chains})
        if len(ids) != 1:
            raise ValueError(
                f"bow-tie for top event {bowtie.top_event} has {len(ids)} consequence "
                "events; pass an explicit consequence id"
            )
        return ids[0]


@dataclass(frozen=True)
class Diagnostic:
    element: str
    message: str

    def __str__(self) -> str:
        return f"{self.element}: {self.message}"


def _check_probability(diags: list[Diagnostic], element: str, what: str, value: ProbabilityValue) -> None:
    if isinstance(value, BetaDist):
        return  # shape positivity enforced by the type itself
    if not 0.0 <= value <= 1.0:
        diags.append(Diagnostic(element, f"{what} {value} outside [0, 1]"))


def validate(arch: SafetyArchitecture) -> list[Diagnostic]:
    """Structural and invariant diagnostics; empty list means the model is sound."""
    diags: list[Diagnostic] = []

    for name, ctx in arch.contexts.items():
        if not 0.0 <= ctx.operation_fraction <= 1.0:
            diags.append(Diagnostic(name, f"operationFraction {ctx.operation_fraction} outside [0, 1]"))
        for label, value in (
            ("activity", ctx.activity),
            ("environment", ctx.environment),
            ("systemState", ctx.system_state),
        ):
            if not value or not value.strip():
                diags.append(Diagnostic(name, f"operating context {label} is empty"))

    for event in arch.events.values():
        if event.kind is EventKind.CONSEQUENCE:
            if event.severity is None:
                diags.append(Diagnostic(event.id, "consequence event is missing a severity"))
            elif not 1 <= event.severity <= 5:
                diags.append(Diagnostic(event.id, f"severity {event.severity} outside 1..5"))
        elif event.severity is not None:
            diags.append(Diagnostic(event.id, f"severity only applies to consequence events (kind={event.kind.value})"))
        if event.probability is not None:
            _check_probability(diags, event.id, "probability", event.probability)
        if event.target_probability is not None and not event.target_probability > 0:
            diags.append(Diagnostic(event.id, f"targetProbability {event.target_probability} must be > 0"))

    for barrier in arch.barriers.values():
        _check_probability(diags, barrier.id, "integrity", barrier.integrity)

    bounds = arch.risk_matrix.probability_bounds
    if len(bounds) != 4 or any(b2 >= b1 for b1, b2 in zip(bounds, bounds[1:])):
        diags.append(Diagnostic("riskMatrix", f"probabilityBounds {bounds} must be four strictly descending values"))
    if any(not 0.0 < b < 1.0 for b in bounds):
        diags.append(Diagnostic("riskMatrix", f"probabilityBounds {bounds} must lie in (0, 1)"))
    missing = [(s, c) for s in range(1, 6) for c in CATEGORIES if (s, c) not in arch.risk_matrix.level_of]
    if missing:
        diags.append(Diagnostic("riskMatrix", f"level map is not total; missing {missing[:5]}"))

    computed_events: dict[str, int] = {}
    for index, bowtie in enumerate(arch.bowties):
        where = f"bowtie[{index}]"
        if bowtie.context not in arch.contexts:
            diags.append(Diagnostic(where, f"unresolved operating context {bowtie.context!r}"))
        _validate_bowtie(arch, bowtie, where, diags)
        for event_id in bowtie.event_ids():
            event = arch.events.get(event_id)
            if event is not None and event.kind is not EventKind.THREAT:
                computed_events[event_id] = computed_events.get(event_id, 0) + 1
    for event_id, count in computed_events.items():
        if count > 1:
            diags.append(Diagnostic(event_id, f"event is computed by {count} bow-tie views; cross-scenario composition is unsupported"))

    return diags


def _validate_bowtie(arch: SafetyArchitecture, bowtie: BowTieView, where: str, diags: list[Diagnostic]) -> None:
    def check_event(event_id: str, expected: EventKind, role: str) -> None:
        event = arch.events.get(event_id)
        if event is None:
            diags.append(Diagnostic(where, f"unresolved {role} event {event_id!r}"))
        elif event.kind is not expected:
            diags.append(Diagnostic(event_id, f"{role} position requires kind {expected.value}, found {event.kind.value}"))

    check_event(bowtie.top_event, EventKind.TOP, "top")
    if not bowtie.consequence_chains:
        diags.append(Diagnostic(where, "bow-tie declares no consequence chain"))

    for chain in bowtie.threat_chains:
        check_event(chain.threat, EventKind.THREAT, "threat")
        seen: set[str] = {chain.threat}
        for barrier_id in chain.barriers:
            barrier = arch.barriers.get(barrier_id)
            if barrier is None:
                diags.append(Diagnostic(where, f"unresolved barrier {barrier_id!r}"))
            elif barrier.role is not BarrierRole.PREVENTION:
                diags.append(Diagnostic(barrier_id, "recovery barrier placed left of the top event"))
            if barrier_id in seen:
                diags.append(Diagnostic(where, f"chain revisits {barrier_id!r} (chains must be acyclic)"))
            seen.add(barrier_id)
        for position, event_id in chain.intermediates.items():
            check_event(event_id, EventKind.INTERMEDIATE, "intermediate")
            if not 0 <= position <= len(chain.barriers):
                diags.append(Diagnostic(where, f"intermediate {event_id!r} position {position} outside the chain"))
            if event_id in seen:
                diags.append(Diagnostic(where, f"chain revisits {event_id!r} (chains must be acyclic)"))
            seen.add(event_id)

    for chain in bowtie.consequence_chains:
        check_event(chain.consequence, EventKind.CONSEQUENCE, "consequence")
        seen = set()
        for barrier_id in chain.barriers:
            barrier = arch.barriers.get(barrier_id)
            if barrier is None:
                diags.append(Diagnostic(where, f"unresolved barrier {barrier_id!r}"))
            elif barrier.role is not BarrierRole.RECOVERY:
                diags.append(Diagnostic(barrier_id, "prevention barrier placed right of the top event"))
            if barrier_id in seen:
                diags.append(Diagnostic(where, f"chain revisits {barrier_id!r} (chains must be acyclic)"))
            seen.add(barrier_id)


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def propagate_risk(bowtie: BowTieView, point_values: Mapping[str, float]) -> dict[str, float]:
    """Propagate threat probabilities and barrier integrities through a bow tie.

    Returns probabilities for every event in the view. The top event collects
    the sum over threat chains of threat probability times the product of the
    chain's barrier breach probabilities; intermediates receive the partial
    product up to their position; consequences multiply the recovery barriers'
    breach probabilities after the top event. Everything is clamped to [0, 1].
    """
    def value_of(element_id: str, what: str) -> float:
        if element_id not in point_values:
            raise KeyError(f"no point value supplied for {what} {element_id!r}")
        value = point_values[element_id]
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"point value for {element_id!r} outside [0, 1]: {value}")
        return value

    result: dict[str, float] = {}
    intermediate_sums: dict[str, float] = {}
    top = 0.0
    for chain in bowtie.threat_chains:
        running = value_of(chain.threat, "threat")
        result[chain.threat] = _clamp(running)
        if 0 in chain.intermediates:
            event_id = chain.intermediates[0]
            intermediate_sums[event_id] = intermediate_sums.get(event_id, 0.0) + running
        for crossed, barrier_id in enumerate(chain.barriers, start=1):
            running *= 1.0 - value_of(barrier_id, "barrier")
            if crossed in chain.intermediates:
                event_id = chain.intermediates[crossed]
                intermediate_sums[event_id] = intermediate_sums.get(event_id, 0.0) + running
        top += running

    for event_id, total in intermediate_sums.items():
        result[event_id] = _clamp(total)
    result[bowtie.top_event] = _clamp(top)

    for chain in bowtie.consequence_chains:
        running = top
        for barrier_id in chain.barriers:
            running *= 1.0 - value_of(barrier_id, "barrier")
        result[chain.consequence] = _clamp(result.get(chain.consequence, 0.0) + running)
    return result


def classify_risk(probability: float, severity: int, config: RiskMatrixConfig) -> RiskClassification:
    """Bucket a probability into A..E and map (severity, category) to a level."""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {probability}")
    if not 1 <= severity <= 5:
        raise ValueError(f"severity must be in 1..5, got {severity}")
    letter = config.category(probability)
    level = config.level_of[(severity, letter)]
    return RiskClassification(category=f"{severity}{letter}", level=level)


def initial_risk_level(
    arch: SafetyArchitecture,
    bowtie: BowTieView,
    point_values: Mapping[str, float],
    config: RiskMatrixConfig | None = None,
    consequence_id: str | None = None,
) -> RiskClassification:
    """Unmitigated (all barrier integrities forced to 0) consequence classification."""
    config = config or arch.risk_matrix
    consequence_id = consequence_id or arch.sole_consequence(bowtie)
    unmitigated = dict(point_values)
    for barrier_id in bowtie.barrier_ids():
        unmitigated[barrier_id] = 0.0
    probabilities = propagate_risk(bowtie, unmitigated)
    event = arch.events[consequence_id]
    if event.severity is None:
        raise ValueError(f"consequence event {consequence_id!r} has no severity")
    return classify_risk(probabilities[consequence_id], event.severity, config)


# ---------------------------------------------------------------------------
# File loading (YAML or JSON; see docs/file-formats.md)
# ---------------------------------------------------------------------------

class ArchitectureFileError(ValueError):
    """Malformed architecture document."""


def _parse_probability(raw, where: str) -> ProbabilityValue:
    if isinstance(raw, dict):
        try:
            return BetaDist(float(raw["alpha"]), float(raw["beta"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ArchitectureFileError(f"{where}: bad beta distribution {raw!r}: {exc}") from None
    if isinstance(raw, (int, float)):
        return float(raw)
    raise ArchitectureFileError(f"{where}: expected a number or {{alpha, beta}}, got {raw!r}")


def _parse_risk_matrix(raw: dict | None) -> RiskMatrixConfig:
    if not raw:
        return RiskMatrixConfig()
    bounds = tuple(float(b) for b in raw.get("probabilityBounds", DEFAULT_PROBABILITY_BOUNDS))
    if len(bounds) != 4:
        raise ArchitectureFileError(f"riskMatrix.probabilityBounds needs 4 values, got {len(bounds)}")
    levels = dict(DEFAULT_LEVELS)
    for sev_key, row in (raw.get("levels") or {}).items():
        severity = int(sev_key)
        for letter, level in row.items():
            if letter not in CATEGORIES:
                raise ArchitectureFileError(f"riskMatrix category {letter!r} unknown")
            levels[(severity, letter)] = RiskLevel(level)
    return RiskMatrixConfig(probability_bounds=bounds, level_of=levels)


def architecture_from_dict(doc: dict) -> SafetyArchitecture:
    arch = SafetyArchitecture(risk_matrix=_parse_risk_matrix(doc.get("riskMatrix")))

    for name, raw in (doc.get("contexts") or {}).items():
        arch.contexts[name] = OperatingContext(
            activity=str(raw.get("activity", "")),
            environment=str(raw.get("environment", "")),
            system_state=str(raw.get("systemState", "")),
            operation_fraction=float(raw.get("operationFraction", 1.0)),
        )

    for raw in doc.get("events") or []:
        try:
            event = Event(
                id=str(raw["id"]),
                name=str(raw.get("name", raw["id"])),
                kind=EventKind(raw["kind"]),
                severity=int(raw["severity"]) if "severity" in raw else None,
                probability=_parse_probability(raw["probability"], raw["id"]) if "probability" in raw else None,
                target_probability=float(raw["targetProbability"]) if "targetProbability" in raw else None,
            )
        except (KeyError, ValueError) as exc:
            raise ArchitectureFileError(f"bad event record {raw!r}: {exc}") from None
        if event.id in arch.events:
            raise ArchitectureFileError(f"duplicate event id {event.id!r}")
        arch.events[event.id] = event

    for raw in doc.get("barriers") or []:
        try:
            barrier = Barrier(
                id=str(raw["id"]),
                name=str(raw.get("name", raw["id"])),
                role=BarrierRole(raw["role"]),
                integrity=_parse_probability(raw["integrity"], raw["id"]),
                controls=[str(c) for c in raw.get("controls", [])],
                nested_architecture=raw.get("nestedArchitecture"),
            )
        except (KeyError, ValueError) as exc:
            raise ArchitectureFileError(f"bad barrier record {raw!r}: {exc}") from None
        if barrier.id in arch.barriers:
            raise ArchitectureFileError(f"duplicate barrier id {barrier.id!r}")
        arch.barriers[barrier.id] = barrier

    for raw in doc.get("bowties") or []:
        threat_chains = [
            ThreatChain(
                threat=str(c["threat"]),
                barriers=tuple(str(b) for b in c.get("barriers", [])),
                intermediates={int(k): str(v) for k, v in (c.get("intermediates") or {}).items()},
            )
            for c in raw.get("threatChains", [])
        ]
        consequence_chains = [
            ConsequenceChain(
                barriers=tuple(str(b) for b in c.get("barriers", [])),
                consequence=str(c["consequence"]),
            )
            for c in raw.get("consequenceChains", [])
        ]
        arch.bowties.append(
            BowTieView(
                context=str(raw.get("context", "")),
                top_event=str(raw["topEvent"]),
                threat_chains=threat_chains,
                consequence_chains=consequence_chains,
            )
        )
    return arch


def load_architecture(path: str | Path) -> SafetyArchitecture:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ArchitectureFileError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ArchitectureFileError(f"{path}: expected a mapping at the top level")
    return architecture_from_dict(doc)
