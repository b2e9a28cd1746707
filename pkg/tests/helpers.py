"""Shared test fixtures: the demo project, random model generators, and oracles."""
from __future__ import annotations

import itertools
import random
import shutil
from pathlib import Path

from driftwatch.architecture import (
    Barrier,
    BarrierRole,
    BowTieView,
    ConsequenceChain,
    Event,
    EventKind,
    OperatingContext,
    SafetyArchitecture,
    ThreatChain,
)
from driftwatch.expr import parse_expression
from driftwatch.smb import (
    ArtifactLink,
    Comparator,
    Exposure,
    ExposureKind,
    Indicator,
    LinkKind,
    Measure,
    Metric,
    MetricScope,
    Smb,
)

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "autotaxi"


def copy_fixture_project(tmp_path: Path) -> Path:
    """Fresh copy of the demo project; returns the project.yaml path."""
    target = tmp_path / "autotaxi"
    shutil.copytree(FIXTURE_DIR, target)
    return target / "project.yaml"


# ---------------------------------------------------------------------------
# Random bow-tie models for propagation properties
# ---------------------------------------------------------------------------

def random_bowtie(rng: random.Random, *, max_threats: int = 3, max_barriers: int = 4):
    """Random small bow tie plus point values (threats kept small enough that
    the clamp stays inactive unless the caller wants otherwise)."""
    n_threats = rng.randint(1, max_threats)
    n_barriers = rng.randint(0, max_barriers)
    n_recovery = rng.randint(0, min(2, n_barriers))
    prevention = [f"P{i}" for i in range(n_barriers - n_recovery)]
    recovery = [f"R{i}" for i in range(n_recovery)]

    chains = []
    for t in range(n_threats):
        chosen = rng.sample(prevention, rng.randint(0, len(prevention))) if prevention else []
        intermediates = {}
        if chosen and rng.random() < 0.4:
            position = rng.randint(1, len(chosen))
            intermediates[position] = f"I{t}"
        chains.append(ThreatChain(threat=f"T{t}", barriers=tuple(chosen), intermediates=intermediates))

    bowtie = BowTieView(
        context="ctx",
        top_event="TOP",
        threat_chains=chains,
        consequence_chains=[ConsequenceChain(barriers=tuple(recovery), consequence="C")],
    )
    values = {f"T{t}": rng.uniform(0.0, 1.0 / max_threats) for t in range(n_threats)}
    for barrier in prevention + recovery:
        values[barrier] = rng.uniform(0.0, 1.0)
    return bowtie, values


def enumerate_expected(bowtie: BowTieView, values: dict[str, float]) -> dict[str, float]:
    """Brute-force oracle: expected occurrence counts over all Bernoulli outcomes.

    Enumerates every joint outcome of threat occurrences and barrier breaches,
    weighs it by its probability, and counts, per event, how many chains fire
    it in that outcome. Independent of the propagation code path; clamps at 1
    exactly like the engine.
    """
    threats = sorted({c.threat for c in bowtie.threat_chains})
    barriers = sorted(bowtie.barrier_ids())
    totals: dict[str, float] = {bowtie.top_event: 0.0}
    for chain in bowtie.threat_chains:
        for event in chain.intermediates.values():
            totals[event] = 0.0
    for chain in bowtie.consequence_chains:
        totals[chain.consequence] = 0.0

    for threat_bits in itertools.product((0, 1), repeat=len(threats)):
        occurred = {t for t, bit in zip(threats, threat_bits) if bit}
        p_threats = 1.0
        for t, bit in zip(threats, threat_bits):
            p_threats *= values[t] if bit else 1.0 - values[t]
        for breach_bits in itertools.product((0, 1), repeat=len(barriers)):
            breached = {b for b, bit in zip(barriers, breach_bits) if bit}
            weight = p_threats
            for b, bit in zip(barriers, breach_bits):
                weight *= (1.0 - values[b]) if bit else values[b]
            top_count = 0
            for chain in bowtie.threat_chains:
                if chain.threat not in occurred:
                    continue
                for position, event in chain.intermediates.items():
                    if all(b in breached for b in chain.barriers[:position]):
                        totals[event] += weight
                if all(b in breached for b in chain.barriers):
                    top_count += 1
            totals[bowtie.top_event] += weight * top_count
            for chain in bowtie.consequence_chains:
                if all(b in breached for b in chain.barriers):
                    totals[chain.consequence] += weight * top_count
    for t in threats:
        totals[t] = values[t]
    return {event: min(1.0, total) for event, total in totals.items()}


# ---------------------------------------------------------------------------
# Random architecture + SMB pairs for the consistency round-trip
# ---------------------------------------------------------------------------

def random_arch_smb(rng: random.Random) -> tuple[SafetyArchitecture, Smb]:
    """Random single-bowtie architecture with indicators on a random subset of
    elements (at most one indicator per threat so the skeleton-shape property
    stays exact; barriers may get several)."""
    arch = SafetyArchitecture()
    arch.contexts["ctx"] = OperatingContext("act", "env", "state", 1.0)

    n_threats = rng.randint(1, 3)
    chains = []
    barrier_counter = 0
    for t in range(n_threats):
        threat_id = f"T{t}"
        arch.events[threat_id] = Event(threat_id, threat_id, EventKind.THREAT, probability=0.01)
        chain_barriers = []
        for _ in range(rng.randint(0, 3)):
            bid = f"B{barrier_counter}"
            barrier_counter += 1
            arch.barriers[bid] = Barrier(bid, bid, BarrierRole.PREVENTION, integrity=0.9)
            chain_barriers.append(bid)
        intermediates = {}
        if chain_barriers and rng.random() < 0.35:
            position = rng.randint(1, len(chain_barriers))
            iid = f"I{t}"
            arch.events[iid] = Event(iid, iid, EventKind.INTERMEDIATE)
            intermediates[position] = iid
        chains.append(ThreatChain(threat=threat_id, barriers=tuple(chain_barriers), intermediates=intermediates))

    arch.events["TOP"] = Event("TOP", "TOP", EventKind.TOP)
    recovery = []
    for _ in range(rng.randint(0, 2)):
        bid = f"B{barrier_counter}"
        barrier_counter += 1
        arch.barriers[bid] = Barrier(bid, bid, BarrierRole.RECOVERY, integrity=0.95)
        recovery.append(bid)
    arch.events["C"] = Event("C", "C", EventKind.CONSEQUENCE, severity=rng.randint(1, 5), probability=None)
    arch.bowties.append(
        BowTieView(
            context="ctx",
            top_event="TOP",
            threat_chains=chains,
            consequence_chains=[ConsequenceChain(barriers=tuple(recovery), consequence="C")],
        )
    )

    smb = Smb()
    smb.measures["ops"] = Measure("ops", "operations", "feed")
    smb.metrics["opsCount"] = Metric("opsCount", parse_expression("ops"), MetricScope.LIFETIME)

    def add_indicator(element_id: str, kind: LinkKind) -> None:
        iid = f"SPI_{element_id}_{len(smb.indicators)}"
        smb.indicators[iid] = Indicator(
            id=iid,
            metric="opsCount",
            comparator=Comparator.LE,
            threshold=float(rng.randint(1, 5)),
            exposure=Exposure(ExposureKind.EVENT_COUNT, float(rng.randint(5, 50)), unit_event="ops"),
            links=(ArtifactLink(kind, element_id),),
        )

    for event in arch.events.values():
        if event.kind is EventKind.THREAT and rng.random() < 0.7:
            add_indicator(event.id, LinkKind.EVENT)
        elif event.kind is not EventKind.THREAT and rng.random() < 0.5:
            add_indicator(event.id, LinkKind.EVENT)
    for barrier in arch.barriers.values():
        if rng.random() < 0.7:
            add_indicator(barrier.id, LinkKind.BARRIER)
            if rng.random() < 0.15:
                add_indicator(barrier.id, LinkKind.BARRIER)
    return arch, smb
