"""Project wiring: configuration file, loaded artifacts, and snapshot reports.

A project file names the architecture, SMB, and argument documents plus the
run and revision logs. The Project object is the single source of truth: the
CLI report and every API payload are rendered from the same builders here, so
the two can never disagree.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Mapping, Optional

import yaml

from . import architecture as arch_mod
from .architecture import SafetyArchitecture, classify_risk, load_architecture
from .argument import Argument, check_consistency, load_argument
from .bayes import BetaDist
from .ingest import DataRun, IngestError, LifetimeStore, build_run, parse_csv_records, runs_from_jsonl
from .riskdyn import (
    DriftConfig,
    ReferenceKind,
    RevisionLog,
    RevisionRecord,
    TrendEstimate,
    baseline_probabilities,
    drift_verdict,
    fit_trend,
    revise_risk,
)
from .smb import Smb, load_smb, list_statuses, validate_smb

SCHEMA_VERSION = "1"


class ProjectError(ValueError):
    """Missing or unparseable project artifacts."""


@dataclass
class ProjectConfig:
    architecture: Path
    smb: Path
    argument: Optional[Path] = None
    risk_matrix: Optional[Path] = None
    run_log: Path = Path("state/runs.jsonl")
    revision_log: Path = Path("state/revisions.jsonl")
    drift: DriftConfig = field(default_factory=DriftConfig)
    rr_reference: ReferenceKind = ReferenceKind.BASELINE
    server_port: int = 8099
    default_context: str = ""

    @classmethod
    def load(cls, path: str | Path) -> ProjectConfig:
        path = Path(path)
        try:
            doc = yaml.safe_load(path.read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as exc:
            raise ProjectError(f"{path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ProjectError(f"{path}: expected a mapping at the top level")
        base = path.parent

        def resolve(key: str, default: str | None = None) -> Optional[Path]:
            raw = doc.get(key, default)
            return (base / raw) if raw else None

        for key in ("architecture", "smb"):
            if not doc.get(key):
                raise ProjectError(f"{path}: missing required key {key!r}")
        drift_raw = doc.get("drift") or {}
        drift = DriftConfig(
            slope_eps=float(drift_raw.get("slopeEps", 0.0)),
            min_points=int(drift_raw.get("minPoints", 3)),
            rr_limit=float(drift_raw.get("rrLimit", 1.0)),
        )
        server = doc.get("server") or {}
        return cls(
            architecture=resolve("architecture"),
            smb=resolve("smb"),
            argument=resolve("argument"),
            risk_matrix=resolve("riskMatrix"),
            run_log=resolve("runLog", "state/runs.jsonl"),
            revision_log=resolve("revisionLog", "state/revisions.jsonl"),
            drift=drift,
            rr_reference=ReferenceKind(doc.get("rrReference", "baseline")),
            server_port=int(server.get("port", 8099)),
            default_context=str(doc.get("defaultContext", "")),
        )


def _fmt_probability(p: float) -> str:
    return f"{p:.4g}"


def _fmt_ratio(r: Optional[float]) -> str:
    return "-" if r is None else f"{r:.2f}"


class Project:
    """Loaded artifacts plus the mutable stores (runs, revisions)."""

    def __init__(self, config: ProjectConfig):
        self.config = config
        if not config.architecture.exists():
            raise ProjectError(f"architecture file not found: {config.architecture}")
        if not config.smb.exists():
            raise ProjectError(f"SMB file not found: {config.smb}")
        self.architecture: SafetyArchitecture = load_architecture(config.architecture)
        if config.risk_matrix:
            if not config.risk_matrix.exists():
                raise ProjectError(f"risk matrix file not found: {config.risk_matrix}")
            matrix_doc = yaml.safe_load(config.risk_matrix.read_text(encoding="utf-8"))
            self.architecture.risk_matrix = arch_mod._parse_risk_matrix(matrix_doc)
        self.smb: Smb = load_smb(config.smb)
        self.argument: Optional[Argument] = None
        if config.argument:
            if not config.argument.exists():
                raise ProjectError(f"argument file not found: {config.argument}")
            self.argument = load_argument(config.argument)
        self.store = LifetimeStore(config.run_log)
        self.revisions = RevisionLog(config.revision_log)

    @classmethod
    def open(cls, path: str | Path) -> Project:
        return cls(ProjectConfig.load(path))

    # -- validation ---------------------------------------------------------

    def validate(self) -> list[str]:
        diags = [str(d) for d in arch_mod.validate(self.architecture)]
        diags.extend(validate_smb(self.smb, self.architecture))
        if self.argument is not None:
            diags.extend(self.argument.validate())
        return diags

    # -- ingestion ----------------------------------------------------------

    def declared_measures(self) -> set[str]:
        return set(self.smb.measures)

    def ingest_file(
        self,
        path: str | Path,
        *,
        run_id: str | None = None,
        context: str | None = None,
        timestamp: datetime | None = None,
    ) -> list[DataRun]:
        """Ingest one file (CSV => one run; JSON lines => one run per run id)."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        return self.ingest_text(
            text,
            format="jsonl" if path.suffix in (".jsonl", ".ndjson", ".json") else "csv",
            run_id=run_id or path.stem,
            context=context,
            timestamp=timestamp,
        )

    def ingest_text(
        self,
        text: str,
        *,
        format: str = "csv",
        run_id: str = "run",
        context: str | None = None,
        timestamp: datetime | None = None,
    ) -> list[DataRun]:
        context = context or self.config.default_context
        if format == "csv":
            records = parse_csv_records(text)
            runs = [
                build_run(
                    records,
                    run_id=run_id,
                    context=context,
                    timestamp=timestamp,
                    declared_measures=self.declared_measures(),
                )
            ]
        else:
            runs = runs_from_jsonl(text, context=context, declared_measures=self.declared_measures())
        for run in runs:
            self.store.append(run)
        return runs

    def ingest_run_payload(self, doc: dict) -> DataRun:
        """Ingest one run from an API body {run, timestamp, context, samples}."""
        try:
            run = DataRun.from_json(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError(f"malformed run payload: {exc}") from None
        unknown = set(run.samples) - self.declared_measures()
        if unknown:
            raise IngestError(f"unknown measures {sorted(unknown)}")
        self.store.append(run)
        return run

    # -- revision -----------------------------------------------------------

    def revise(
        self,
        *,
        overrides: Mapping[str, float] | None = None,
        slate: list[str] | None = None,
        timestamp: datetime | None = None,
    ) -> RevisionRecord:
        """Run a risk revision and append it to the revision log.

        Overrides accumulate: the new revision keeps every previously applied
        override unless explicitly re-set.
        """
        merged = self.revisions.current_overrides()
        merged.update(overrides or {})
        record = revise_risk(
            self.architecture,
            self.smb,
            self.store,
            overrides=merged,
            previous=self.revisions.latest,
            slate=slate,
            timestamp=timestamp,
        )
        self.revisions.append(record)
        return record

    def current_point_values(self, extra_overrides: Mapping[str, float] | None = None) -> dict[str, float]:
        """Declared values, then the latest revision's posteriors and overrides."""
        values = self.architecture.point_values()
        latest = self.revisions.latest
        if latest is not None:
            for element_id, update in latest.elements.items():
                values[element_id] = update.point_value
            values.update(latest.overrides)
        if extra_overrides:
            for element_id, value in extra_overrides.items():
                if element_id not in values:
                    raise KeyError(f"unknown element {element_id!r}")
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"override for {element_id!r} outside [0, 1]: {value}")
                values[element_id] = value
        return values

    # -- payload builders (shared by CLI report and API) ----------------------

    def indicators_payload(self) -> dict:
        point_values = self.current_point_values()
        rows = []
        for status in list_statuses(self.smb, self.store, self.architecture, point_values=point_values):
            indicator = self.smb.indicators[status.indicator]
            unit = indicator.exposure.unit_event or "hours"
            rows.append(
                {
                    "id": status.indicator,
                    "metric": indicator.metric,
                    "expression": self.smb.metrics[indicator.metric].expression_text
                    if indicator.metric in self.smb.metrics
                    else None,
                    "comparator": indicator.comparator.value,
                    "threshold": indicator.threshold,
                    "thresholdDisplay": f"{indicator.comparator.value} {indicator.threshold:g}",
                    "value": status.value,
                    "valueDisplay": "-" if status.value is None else f"{status.value:g}",
                    "exposureRequired": indicator.exposure.amount,
                    "exposureObserved": status.exposure_observed,
                    "exposureUnit": unit,
                    "exposureDisplay": f"{status.exposure_observed:g}/{indicator.exposure.amount:g} {unit}",
                    "verdict": status.verdict.value if status.verdict else "error",
                    "links": [{"kind": l.kind.value, "ref": l.ref} for l in indicator.links],
                    "error": status.error,
                }
            )
        return {"schemaVersion": SCHEMA_VERSION, "indicators": rows}

    def _risk_rows(self, values: Mapping[str, float], previous: RevisionRecord | None) -> list[dict]:
        baseline = baseline_probabilities(self.architecture)
        probabilities: dict[str, float] = {}
        for bowtie in self.architecture.bowties:
            probabilities.update(arch_mod.propagate_risk(bowtie, dict(values)))
        rows = []
        for event_id, probability in sorted(probabilities.items()):
            event = self.architecture.events[event_id]
            row: dict = {
                "id": event_id,
                "name": event.name,
                "kind": event.kind.value,
                "probability": probability,
                "probabilityDisplay": _fmt_probability(probability),
            }
            if event.kind is arch_mod.EventKind.CONSEQUENCE and event.severity is not None:
                classification = classify_risk(probability, event.severity, self.architecture.risk_matrix)
                base = baseline.get(event_id)
                target = event.target_probability or base
                prev = previous.probabilities.get(event_id) if previous else None
                rr_baseline = probability / base if base else None
                rr_target = probability / target if target else None
                rr_previous = probability / prev if prev else None
                row.update(
                    {
                        "severity": event.severity,
                        "category": classification.category,
                        "level": classification.level.value,
                        "classificationDisplay": str(classification),
                        "baselineProbability": base,
                        "baselineDisplay": _fmt_probability(base) if base is not None else "-",
                        "riskRatios": {
                            "baseline": rr_baseline,
                            "target": rr_target,
                            "previousRevision": rr_previous,
                        },
                        "riskRatioDisplays": {
                            "baseline": _fmt_ratio(rr_baseline),
                            "target": _fmt_ratio(rr_target),
                            "previousRevision": _fmt_ratio(rr_previous),
                        },
                    }
                )
            rows.append(row)
        level_rank = {"High": 0, "Medium": 1, "Low": 2}
        rows.sort(
            key=lambda r: (
                0 if "level" in r else 1,
                level_rank.get(r.get("level"), 3),
                -r["probability"],
                r["id"],
            )
        )
        return rows

    def risk_payload(self, extra_overrides: Mapping[str, float] | None = None) -> dict:
        """Current risk picture; with overrides it is a scratch what-if copy."""
        latest = self.revisions.latest
        if extra_overrides:
            # a what-if compares against the current state, so "previous" is the latest revision
            previous = latest
        else:
            previous = self.revisions.records[-2] if len(self.revisions.records) >= 2 else None
        values = self.current_point_values(extra_overrides)
        barriers = [
            {
                "id": barrier_id,
                "name": self.architecture.barriers[barrier_id].name,
                "role": self.architecture.barriers[barrier_id].role.value,
                "integrity": values[barrier_id],
                "integrityDisplay": f"{values[barrier_id]:.4g}",
                "distribution": _beta_json(self.architecture.barriers[barrier_id].integrity),
            }
            for barrier_id in sorted(self.architecture.barriers)
        ]
        barriers.sort(key=lambda b: (b["integrity"], b["id"]))
        payload = {
            "schemaVersion": SCHEMA_VERSION,
            "events": self._risk_rows(values, previous),
            "barriers": barriers,
            "revisionCount": len(self.revisions.records),
            "overridesApplied": dict(self.revisions.current_overrides()),
        }
        if extra_overrides:
            payload["whatIfOverrides"] = dict(extra_overrides)
        return payload

    def trend_payload(self, event_id: str) -> dict:
        if event_id not in self.architecture.events:
            raise KeyError(f"unknown event {event_id!r}")
        reference = self.config.rr_reference.value
        series = self.revisions.ratio_series(event_id, reference)
        trend: TrendEstimate | None = None
        trend_error: str | None = None
        if len(series) >= 2:
            try:
                trend = fit_trend(series)
            except ValueError as exc:
                trend_error = str(exc)
        else:
            trend_error = "insufficient history"
        latest = self.revisions.latest
        latest_ratios = []
        if latest is not None:
            # the drift limit is checked against the scenario target (baseline fallback)
            for ratios in latest.risk_ratios.values():
                rr = ratios.get("target")
                if rr is not None:
                    latest_ratios.append(rr)
        verdict = drift_verdict(trend, latest_ratios, self.config.drift)
        return {
            "schemaVersion": SCHEMA_VERSION,
            "event": event_id,
            "reference": reference,
            "points": [{"exposure": x, "rr": y, "rrDisplay": _fmt_ratio(y)} for x, y in series],
            "trend": (
                {
                    "slope": trend.slope,
                    "intercept": trend.intercept,
                    "points": trend.points,
                    "slopeDisplay": f"{trend.slope:.4g}",
                }
                if trend
                else None
            ),
            "trendError": trend_error,
            "verdict": verdict.value,
        }

    def consistency_payload(self) -> dict:
        if self.argument is None:
            raise ProjectError("project declares no argument file")
        verdict = check_consistency(self.smb, self.argument, self.architecture)
        return {
            "schemaVersion": SCHEMA_VERSION,
            "fgRefines": verdict.fg_refines,
            "gfIdentity": verdict.gf_identity,
            "consistent": verdict.consistent,
            "witness": verdict.witness,
            "discrepancies": {
                "orphanIndicators": list(verdict.orphan_indicators),
                "unquantifiedClaims": list(verdict.unquantified_claims),
                "unmappedSkeletonNodes": list(verdict.unmapped_nodes),
                "unknownQuantRefs": list(verdict.unknown_quant_refs),
            },
        }

    def revisions_payload(self) -> dict:
        return {
            "schemaVersion": SCHEMA_VERSION,
            "revisions": [r.to_json() for r in self.revisions.records],
        }

    def baseline_payload(self) -> dict:
        baseline = baseline_probabilities(self.architecture)
        values = self.architecture.point_values()
        initial: dict[str, str] = {}
        for bowtie in self.architecture.bowties:
            for chain in bowtie.consequence_chains:
                initial[chain.consequence] = str(
                    arch_mod.initial_risk_level(
                        self.architecture, bowtie, values, consequence_id=chain.consequence
                    )
                )
        rows = {}
        for event_id, probability in sorted(baseline.items()):
            event = self.architecture.events[event_id]
            entry = {"probability": probability, "probabilityDisplay": _fmt_probability(probability)}
            if event.kind is arch_mod.EventKind.CONSEQUENCE and event.severity is not None:
                classification = classify_risk(probability, event.severity, self.architecture.risk_matrix)
                entry["classification"] = str(classification)
                entry["initialClassification"] = initial.get(event_id)
            rows[event_id] = entry
        return {"schemaVersion": SCHEMA_VERSION, "events": rows}

    def derived_indicators_payload(self) -> dict:
        """Per Beta-valued element: prior moments and the one-sided SI derivation."""
        from .riskdyn import _revisable_elements, derive_barrier_si

        rows = []
        for element_id, (kind, prior, indicator) in sorted(
            _revisable_elements(self.architecture, self.smb).items()
        ):
            n = int(indicator.exposure.amount)
            source = prior if kind == "barrier" else BetaDist(prior.beta, prior.alpha)
            bound, threshold = derive_barrier_si(source, n)
            rows.append(
                {
                    "element": element_id,
                    "kind": kind,
                    "indicator": indicator.id,
                    "prior": {"alpha": prior.alpha, "beta": prior.beta},
                    "mean": prior.mean,
                    "variance": prior.variance,
                    "bound": bound,
                    "exposure": n,
                    "threshold": threshold,
                }
            )
        return {"schemaVersion": SCHEMA_VERSION, "derived": rows}

    def report_payload(self) -> dict:
        """The full machine-readable report; sections match the API payloads."""
        consequences = [
            e.id
            for e in self.architecture.events.values()
            if e.kind is arch_mod.EventKind.CONSEQUENCE
        ]
        report = {
            "schemaVersion": SCHEMA_VERSION,
            "baseline": self.baseline_payload(),
            "risk": self.risk_payload(),
            "indicators": self.indicators_payload(),
            "derivedIndicators": self.derived_indicators_payload(),
            "revisions": self.revisions_payload(),
            "trends": {event_id: self.trend_payload(event_id) for event_id in consequences},
        }
        if self.argument is not None:
            report["consistency"] = self.consistency_payload()
        return report


def _beta_json(value) -> Optional[dict]:
    if isinstance(value, BetaDist):
        return {"alpha": value.alpha, "beta": value.beta, "mean": value.mean, "variance": value.variance}
    return None
