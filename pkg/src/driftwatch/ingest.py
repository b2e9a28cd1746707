"""Data-run ingestion and the persistent lifetime store.

One mission's measures form a DataRun; the LifetimeStore keeps runs ordered by
timestamp, maintains per-measure aggregates, and persists as an append-only
JSON-lines log that can be replayed from scratch. Ingestion is atomic per run:
a run is fully parsed and validated before anything is stored.
"""
from __future__ import annotations

import csv
import io
import json
import socket
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence


class IngestError(ValueError):
    """Malformed record, unknown measure, or timestamp regression."""


@dataclass(frozen=True)
class Sample:
    timestamp: Optional[datetime]
    measure: str
    value: float


@dataclass(frozen=True)
class DataRun:
    """Per-run measure totals plus the raw timestamped samples they came from."""

    id: str
    timestamp: datetime
    context: str
    samples: dict[str, float]
    records: tuple[Sample, ...] = ()

    def to_json(self) -> dict:
        return {
            "run": self.id,
            "timestamp": self.timestamp.isoformat(),
            "context": self.context,
            "samples": dict(sorted(self.samples.items())),
            "records": [
                {
                    "timestamp": r.timestamp.isoformat() if r.timestamp else None,
                    "measure": r.measure,
                    "value": r.value,
                }
                for r in self.records
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> DataRun:
        records = tuple(
            Sample(
                timestamp=_parse_timestamp(r["timestamp"]) if r.get("timestamp") else None,
                measure=str(r["measure"]),
                value=float(r["value"]),
            )
            for r in doc.get("records", [])
        )
        return cls(
            id=str(doc["run"]),
            timestamp=_parse_timestamp(doc["timestamp"]),
            context=str(doc.get("context", "")),
            samples={str(k): float(v) for k, v in doc.get("samples", {}).items()},
            records=records,
        )


def _parse_timestamp(raw: str) -> datetime:
    try:
        ts = datetime.fromisoformat(str(raw).replace("Z", "+00:00"))
    except ValueError as exc:
        raise IngestError(f"bad timestamp {raw!r}: {exc}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def build_run(
    records: Iterable[Sample],
    *,
    run_id: str,
    context: str,
    timestamp: datetime | None = None,
    declared_measures: Optional[set[str]] = None,
) -> DataRun:
    """Aggregate raw samples into a run; validates measures against the SMB."""
    records = tuple(records)
    totals: dict[str, float] = {}
    latest: Optional[datetime] = None
    for index, record in enumerate(records):
        if declared_measures is not None and record.measure not in declared_measures:
            raise IngestError(f"record {index}: unknown measure {record.measure!r}")
        totals[record.measure] = totals.get(record.measure, 0.0) + record.value
        if record.timestamp is not None and (latest is None or record.timestamp > latest):
            latest = record.timestamp
    ts = timestamp or latest or datetime.now(timezone.utc)
    return DataRun(id=run_id, timestamp=ts, context=context, samples=totals, records=records)


class LifetimeStore:
    """Ordered run collection with derived aggregates and an append-only log.

    Single writer; readers operate on `snapshot()` tuples. Aggregates always
    equal a from-scratch recomputation over the raw runs (see `recompute`).
    """

    def __init__(self, log_path: str | Path | None = None):
        self.log_path = Path(log_path) if log_path else None
        self._runs: list[DataRun] = []
        self._sums: dict[str, float] = {}
        self._counts: dict[str, int] = {}
        self._lock = threading.Lock()
        if self.log_path and self.log_path.exists():
            self._replay_log()

    def _replay_log(self) -> None:
        with open(self.log_path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    run = DataRun.from_json(json.loads(line))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise IngestError(f"{self.log_path}:{line_no}: corrupt run record: {exc}") from None
                self._append_unlocked(run, persist=False)

    def _append_unlocked(self, run: DataRun, *, persist: bool) -> None:
        if self._runs and run.timestamp < self._runs[-1].timestamp:
            raise IngestError(
                f"timestamp regression: run {run.id!r} at {run.timestamp.isoformat()} "
                f"precedes stored run at {self._runs[-1].timestamp.isoformat()}"
            )
        if persist and self.log_path:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(run.to_json()) + "\n")
        self._runs.append(run)
        for measure, value in run.samples.items():
            self._sums[measure] = self._sums.get(measure, 0.0) + value
            self._counts[measure] = self._counts.get(measure, 0) + 1
        if persist and self.log_path:
            self.write_snapshot(self.snapshot_path())

    def snapshot_path(self) -> Path:
        """Aggregate snapshot next to the log; the log alone stays authoritative."""
        return self.log_path.with_suffix(".snapshot.json")

    def append(self, run: DataRun) -> None:
        with self._lock:
            self._append_unlocked(run, persist=True)

    def snapshot(self) -> tuple[DataRun, ...]:
        with self._lock:
            return tuple(self._runs)

    def __len__(self) -> int:
        return len(self._runs)

    @property
    def sums(self) -> dict[str, float]:
        with self._lock:
            return dict(self._sums)

    def recompute(self) -> tuple[dict[str, float], dict[str, int]]:
        """From-scratch aggregates over raw runs (replay-equality oracle)."""
        sums: dict[str, float] = {}
        counts: dict[str, int] = {}
        for run in self._runs:
            for measure, value in run.samples.items():
                sums[measure] = sums.get(measure, 0.0) + value
                counts[measure] = counts.get(measure, 0) + 1
        return sums, counts

    def write_snapshot(self, path: str | Path) -> None:
        doc = {"runCount": len(self._runs), "sums": dict(sorted(self._sums.items()))}
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Windows and queries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Window:
    """Trailing window over stored runs.

    kind 'all'       — every run;
    kind 'runs'      — the most recent `amount` runs;
    kind 'events'    — newest runs until `unit_measure` accumulates `amount`;
    kind 'duration'  — runs within `amount` hours of the newest run.
    """

    kind: str = "all"
    amount: float = 0.0
    unit_measure: Optional[str] = None


def select_runs(runs: Sequence[DataRun], window: Window | None) -> tuple[tuple[DataRun, ...], float]:
    """Runs inside the window (oldest first) plus the observed exposure.

    Observed exposure: unit-event count for 'events', elapsed hours for
    'duration', run count otherwise. Whole runs only — a run that straddles
    the window boundary is included in full.
    """
    if window is None or window.kind == "all":
        return tuple(runs), float(len(runs))
    if window.kind == "runs":
        take = int(window.amount)
        chosen = tuple(runs[-take:]) if take > 0 else ()
        return chosen, float(len(chosen))
    if window.kind == "events":
        if not window.unit_measure:
            raise ValueError("events window requires a unit measure")
        accumulated = 0.0
        chosen: list[DataRun] = []
        for run in reversed(runs):
            if accumulated >= window.amount:
                break
            chosen.append(run)
            accumulated += run.samples.get(window.unit_measure, 0.0)
        return tuple(reversed(chosen)), accumulated
    if window.kind == "duration":
        if not runs:
            return (), 0.0
        latest = runs[-1].timestamp
        horizon = window.amount * 3600.0
        chosen = tuple(r for r in runs if (latest - r.timestamp).total_seconds() <= horizon)
        span_hours = (latest - runs[0].timestamp).total_seconds() / 3600.0
        return chosen, min(span_hours, window.amount)
    raise ValueError(f"unknown window kind {window.kind!r}")


def query(
    store: LifetimeStore | Sequence[DataRun],
    measure_id: str,
    window: Window | None = None,
    *,
    agg: str = "sum",
    declared_measures: Optional[set[str]] = None,
) -> float:
    """Aggregate a measure over a trailing window (sum by default)."""
    if declared_measures is not None and measure_id not in declared_measures:
        raise IngestError(f"unknown measure {measure_id!r}")
    runs = store.snapshot() if isinstance(store, LifetimeStore) else tuple(store)
    chosen, _ = select_runs(runs, window)
    if agg == "sum":
        return sum(run.samples.get(measure_id, 0.0) for run in chosen)
    if agg == "count":
        return float(sum(1 for run in chosen if measure_id in run.samples))
    raise ValueError(f"unknown aggregate {agg!r}")


# ---------------------------------------------------------------------------
# Record sources: CSV, JSON lines, stdin, sockets
# ---------------------------------------------------------------------------

def parse_csv_records(text: str) -> list[Sample]:
    """CSV with header `measure,value[,timestamp]`, one sample per row."""
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        return []
    header = [cell.strip() for cell in rows[0]]
    if header[:2] != ["measure", "value"]:
        raise IngestError(f"line 1: expected header 'measure,value[,timestamp]', got {','.join(header)!r}")
    has_ts = len(header) > 2 and header[2] == "timestamp"
    records: list[Sample] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) < 2:
            raise IngestError(f"line {line_no}: expected at least 2 fields, got {len(row)}")
        measure = row[0].strip()
        if not measure:
            raise IngestError(f"line {line_no}: empty measure id")
        try:
            value = float(row[1])
        except ValueError:
            raise IngestError(f"line {line_no}: bad value {row[1]!r}") from None
        ts = None
        if has_ts and len(row) > 2 and row[2].strip():
            ts = _parse_timestamp(row[2].strip())
        records.append(Sample(timestamp=ts, measure=measure, value=value))
    return records


def parse_jsonl_records(text: str) -> list[tuple[str, Sample]]:
    """JSON lines `{run, timestamp, measure, value}`; returns (run id, sample) pairs."""
    pairs: list[tuple[str, Sample]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            run_id = str(doc["run"])
            sample = Sample(
                timestamp=_parse_timestamp(doc["timestamp"]) if doc.get("timestamp") else None,
                measure=str(doc["measure"]),
                value=float(doc["value"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise IngestError(f"line {line_no}: malformed record: {exc}") from None
        pairs.append((run_id, sample))
    return pairs


def runs_from_jsonl(
    text: str,
    *,
    context: str,
    declared_measures: Optional[set[str]] = None,
) -> list[DataRun]:
    """Group JSON-line samples into runs by consecutive run id."""
    pairs = parse_jsonl_records(text)
    runs: list[DataRun] = []
    current_id: Optional[str] = None
    batch: list[Sample] = []
    for run_id, sample in pairs:
        if current_id is not None and run_id != current_id:
            runs.append(build_run(batch, run_id=current_id, context=context, declared_measures=declared_measures))
            batch = []
        current_id = run_id
        batch.append(sample)
    if current_id is not None:
        runs.append(build_run(batch, run_id=current_id, context=context, declared_measures=declared_measures))
    return runs


def serve_socket_feed(
    store: LifetimeStore,
    port: int,
    *,
    context: str,
    declared_measures: Optional[set[str]] = None,
    max_connections: int | None = None,
) -> int:
    """Accept line-delimited JSON on a local socket; one run per run-id group.

    Blocks until `max_connections` connections have been served (forever when
    None). Returns the number of runs ingested.
    """
    ingested = 0
    served = 0
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind(("127.0.0.1", port))
        server.listen(1)
        while max_connections is None or served < max_connections:
            conn, _ = server.accept()
            served += 1
            with conn, conn.makefile("r", encoding="utf-8") as fh:
                text = fh.read()
            for run in runs_from_jsonl(text, context=context, declared_measures=declared_measures):
                store.append(run)
                ingested += 1
    return ingested
