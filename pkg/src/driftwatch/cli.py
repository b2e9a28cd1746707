"""Command-line entry point.

    driftwatch --project demo/project.yaml validate
    driftwatch --project demo/project.yaml ingest runs/mission-001.csv --run-id M001
    driftwatch --project demo/project.yaml revise --set B5=0.96
    driftwatch --project demo/project.yaml report --format json

Exit codes: 0 success, 1 validation/consistency failures, 2 parse or usage
errors, 3 I/O failures.
"""
from __future__ import annotations

import json
import sys
import time
from datetime import datetime, timezone

import click

from .architecture import ArchitectureFileError
from .argument import ArgumentFileError
from .ingest import IngestError, serve_socket_feed
from .project import Project, ProjectError
from .smb import SmbFileError

PARSE_ERRORS = (ProjectError, ArchitectureFileError, SmbFileError, ArgumentFileError)


def _open_project(ctx: click.Context) -> Project:
    path = ctx.obj["project_path"]
    if not path:
        raise click.UsageError("--project is required")
    try:
        return Project.open(path)
    except PARSE_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


@click.group()
@click.option("--project", "project_path", type=click.Path(), envvar="DRIFTWATCH_PROJECT",
              help="Project configuration file.")
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text",
              show_default=True, help="Output format for tables and reports.")
@click.pass_context
def main(ctx: click.Context, project_path: str | None, output_format: str) -> None:
    """Operational safety-risk monitoring over bow-tie models and safety indicators."""
    ctx.ensure_object(dict)
    ctx.obj["project_path"] = project_path
    ctx.obj["format"] = output_format


@main.command()
@click.pass_context
def validate(ctx: click.Context) -> None:
    """Check architecture, SMB, and argument invariants and references."""
    project = _open_project(ctx)
    diags = project.validate()
    if ctx.obj["format"] == "json":
        click.echo(json.dumps({"diagnostics": diags}, indent=2))
    else:
        for diag in diags:
            click.echo(f"invalid: {diag}")
        if not diags:
            click.echo("ok: all validations passed")
    sys.exit(1 if diags else 0)


@main.command()
@click.argument("sources", nargs=-1, required=True)
@click.option("--run-id", default=None, help="Run id for CSV sources (default: file stem).")
@click.option("--context", default=None, help="Operating context of the run(s).")
@click.option("--timestamp", default=None, help="Run timestamp (ISO 8601) for CSV sources.")
@click.pass_context
def ingest(ctx: click.Context, sources: tuple[str, ...], run_id: str | None,
           context: str | None, timestamp: str | None) -> None:
    """Append data runs from files, '-' (stdin), or tcp:<port> feeds."""
    project = _open_project(ctx)
    ts = None
    if timestamp:
        ts = datetime.fromisoformat(timestamp.replace("Z", "+00:00"))
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
    total = 0
    for source in sources:
        try:
            if source == "-":
                runs = project.ingest_text(
                    sys.stdin.read(), format="jsonl",
                    context=context, timestamp=ts,
                )
            elif source.startswith("tcp:"):
                port = int(source.split(":", 1)[1])
                click.echo(f"listening on 127.0.0.1:{port} (one connection)")
                count = serve_socket_feed(
                    project.store, port,
                    context=context or project.config.default_context,
                    declared_measures=project.declared_measures(),
                    max_connections=1,
                )
                click.echo(f"ingested {count} run(s) from the feed")
                total += count
                continue
            else:
                runs = project.ingest_file(source, run_id=run_id, context=context, timestamp=ts)
        except IngestError as exc:
            click.echo(f"error: {source}: {exc}", err=True)
            sys.exit(1)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        for run in runs:
            click.echo(f"stored run {run.id} ({len(run.samples)} measures) at {run.timestamp.isoformat()}")
        total += len(runs)
    click.echo(f"store now holds {len(project.store)} run(s)")


_VERDICT_MARKS = {"met": "MET", "violated": "VIOLATED", "insufficientExposure": "insufficient", "error": "ERROR"}


def _render_indicator_table(payload: dict) -> str:
    rows = payload["indicators"]
    if not rows:
        return "no indicators declared"
    header = f"{'indicator':<12} {'value':>10} {'threshold':>12} {'exposure':>18} verdict"
    lines = [header, "-" * len(header)]
    for row in rows:
        verdict = _VERDICT_MARKS.get(row["verdict"], row["verdict"])
        if row.get("error"):
            verdict = f"ERROR ({row['error']})"
        lines.append(
            f"{row['id']:<12} {row['valueDisplay']:>10} {row['thresholdDisplay']:>12} "
            f"{row['exposureDisplay']:>18} {verdict}"
        )
    return "\n".join(lines)


@main.command(name="eval")
@click.pass_context
def eval_cmd(ctx: click.Context) -> None:
    """Evaluate every indicator and print the status table."""
    project = _open_project(ctx)
    payload = project.indicators_payload()
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(_render_indicator_table(payload))


def _parse_set_options(pairs: tuple[str, ...]) -> dict[str, float]:
    overrides: dict[str, float] = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.UsageError(f"--set expects ELEMENT=VALUE, got {pair!r}")
        element, _, raw = pair.partition("=")
        try:
            overrides[element.strip()] = float(raw)
        except ValueError:
            raise click.UsageError(f"--set {pair!r}: value is not a number") from None
    return overrides


@main.command()
@click.option("--set", "set_pairs", multiple=True, metavar="ELEMENT=VALUE",
              help="Apply a point-value override (e.g. an operationally relaxed barrier).")
@click.option("--elements", default=None, help="Comma-separated element ids that must be updated.")
@click.option("--timestamp", default=None, help="Revision timestamp (ISO 8601).")
@click.pass_context
def revise(ctx: click.Context, set_pairs: tuple[str, ...], elements: str | None,
           timestamp: str | None) -> None:
    """Revise the risk assessment from logged observations and record it."""
    project = _open_project(ctx)
    ts = None
    if timestamp:
        ts = datetime.fromisoformat(timestamp.replace("Z", "+00:00"))
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
    slate = [e.strip() for e in elements.split(",")] if elements else None
    try:
        record = project.revise(overrides=_parse_set_options(set_pairs), slate=slate, timestamp=ts)
    except (ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(record.to_json(), indent=2))
        return
    click.echo(f"revision {len(project.revisions.records)} recorded at {record.timestamp.isoformat()}")
    for element_id, update in sorted(record.elements.items()):
        obs = update.observation
        click.echo(
            f"  {element_id}: Beta({update.prior.alpha:g}, {update.prior.beta:g})"
            f" + ({obs.successes} succ / {obs.failures} fail in {obs.trials})"
            f" -> Beta({update.posterior.alpha:g}, {update.posterior.beta:g})"
            f" mean {update.point_value:.4f}"
        )
    for element_id, value in sorted(record.overrides.items()):
        click.echo(f"  {element_id}: override -> {value:g}")
    for event_id, pair in sorted(record.classifications.items()):
        probability = record.probabilities[event_id]
        ratios = record.risk_ratios[event_id]
        click.echo(
            f"  {event_id}: Pr = {probability:.4g}, RRL {pair['before']} -> {pair['after']}, "
            f"RR(baseline) = {_ratio_text(ratios['baseline'])}, "
            f"RR(target) = {_ratio_text(ratios['target'])}, "
            f"RR(previousRevision) = {_ratio_text(ratios['previousRevision'])}"
        )


def _ratio_text(value) -> str:
    return "-" if value is None else f"{value:.2f}"


def _render_report_text(report: dict) -> str:
    lines: list[str] = ["== baseline =="]
    for event_id, entry in report["baseline"]["events"].items():
        classification = f"  RRL {entry['classification']}" if "classification" in entry else ""
        if entry.get("initialClassification"):
            classification += f"  (IRL {entry['initialClassification']})"
        lines.append(f"  {event_id}: Pr = {entry['probabilityDisplay']}{classification}")
    lines.append("")
    lines.append("== current risk ==")
    for row in report["risk"]["events"]:
        if "category" in row:
            ratios = row["riskRatioDisplays"]
            lines.append(
                f"  {row['id']}: Pr = {row['probabilityDisplay']}  RRL {row['classificationDisplay']}  "
                f"RR(baseline) = {ratios['baseline']}  RR(target) = {ratios['target']}  "
                f"RR(previousRevision) = {ratios['previousRevision']}"
            )
        else:
            lines.append(f"  {row['id']}: Pr = {row['probabilityDisplay']}")
    lines.append("  barriers by integrity:")
    for barrier in report["risk"]["barriers"]:
        lines.append(f"    {barrier['id']} ({barrier['name']}): {barrier['integrityDisplay']}")
    lines.append("")
    lines.append("== indicators ==")
    lines.append("  " + _render_indicator_table(report["indicators"]).replace("\n", "\n  "))
    if report["derivedIndicators"]["derived"]:
        lines.append("")
        lines.append("== derived safety indicators (from development priors) ==")
        for row in report["derivedIndicators"]["derived"]:
            prior = row["prior"]
            lines.append(
                f"  {row['element']} ({row['indicator']}): prior Beta({prior['alpha']:g}, {prior['beta']:g}) "
                f"mean {row['mean']:.4f} variance {row['variance']:.4f}; "
                f"bound {row['bound']:.4f} -> y = {row['threshold']} in {row['exposure']} unit events"
            )
    lines.append("")
    lines.append("== revisions ==")
    if not report["revisions"]["revisions"]:
        lines.append("  none recorded")
    for index, rev in enumerate(report["revisions"]["revisions"], start=1):
        lines.append(f"  revision {index} at {rev['timestamp']} (exposure {rev['atExposure']:g}):")
        for element_id, element in rev["elements"].items():
            prior, post = element["prior"], element["posterior"]
            lines.append(
                f"    {element_id}: Beta({prior[0]:g}, {prior[1]:g}) -> "
                f"Beta({post[0]:g}, {post[1]:g}) mean {element['pointValue']:.4f}"
            )
        for element_id, value in rev["overrides"].items():
            lines.append(f"    {element_id}: override -> {value:g}")
        for event_id, pair in rev["classifications"].items():
            ratios = rev["riskRatios"][event_id]
            lines.append(
                f"    {event_id}: Pr = {rev['probabilities'][event_id]:.4g}  "
                f"RRL {pair['before']['category']} ({pair['before']['level']}) -> "
                f"{pair['after']['category']} ({pair['after']['level']})  "
                f"RR(baseline) = {_ratio_text(ratios.get('baseline'))}  "
                f"RR(previousRevision) = {_ratio_text(ratios.get('previousRevision'))}"
            )
    lines.append("")
    lines.append("== trend & drift ==")
    for event_id, trend in report["trends"].items():
        verdict = trend["verdict"]
        if trend["trend"]:
            lines.append(
                f"  {event_id}: slope {trend['trend']['slopeDisplay']} per exposure unit "
                f"over {trend['trend']['points']} revisions; drift verdict: {verdict}"
            )
        else:
            lines.append(f"  {event_id}: no trend ({trend['trendError']}); drift verdict: {verdict}")
    if "consistency" in report:
        lines.append("")
        lines.append("== consistency ==")
        verdict = report["consistency"]
        lines.append(
            f"  F;G refines: {verdict['fgRefines']}  G;F identity: {verdict['gfIdentity']}  "
            f"consistent: {verdict['consistent']}"
        )
        for name, items in verdict["discrepancies"].items():
            if items:
                lines.append(f"  {name}: {', '.join(items)}")
    return "\n".join(lines)


@main.command()
@click.pass_context
def report(ctx: click.Context) -> None:
    """Emit probabilities, classifications, risk ratios, trend, and drift verdict."""
    project = _open_project(ctx)
    payload = project.report_payload()
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(_render_report_text(payload))


@main.command()
@click.pass_context
def consistency(ctx: click.Context) -> None:
    """Check SMB <-> argument consistency (F;G <= I and G;F = I)."""
    project = _open_project(ctx)
    try:
        payload = project.consistency_payload()
    except ProjectError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(f"F;G refines:  {payload['fgRefines']}")
        click.echo(f"G;F identity: {payload['gfIdentity']}")
        click.echo(f"consistent:   {payload['consistent']}")
        for name, items in payload["discrepancies"].items():
            if items:
                click.echo(f"{name}: {', '.join(items)}")
    sys.exit(0 if payload["consistent"] else 1)


@main.command()
@click.option("--interval", default=1.0, show_default=True, help="Poll interval in seconds.")
@click.option("--iterations", default=None, type=int, hidden=True,
              help="Stop after N polls (for scripting/tests).")
@click.pass_context
def watch(ctx: click.Context, interval: float, iterations: int | None) -> None:
    """Re-evaluate indicators whenever new runs arrive and re-render the table."""
    project = _open_project(ctx)
    log_path = project.config.run_log
    last_size = -1
    polls = 0
    try:
        while iterations is None or polls < iterations:
            size = log_path.stat().st_size if log_path.exists() else 0
            if size != last_size:
                if last_size >= 0:
                    project.store = type(project.store)(log_path)
                click.echo(f"--- {datetime.now(timezone.utc).isoformat()} ({len(project.store)} runs)")
                click.echo(_render_indicator_table(project.indicators_payload()))
                last_size = size
            polls += 1
            if iterations is None or polls < iterations:
                time.sleep(interval)
    except KeyboardInterrupt:
        pass


@main.command()
@click.option("--port", default=None, type=int, envvar="DRIFTWATCH_PORT",
              help="Override the project's server port.")
@click.option("--static", "static_dir", default=None, type=click.Path(),
              help="Also serve a built dashboard from this directory.")
@click.pass_context
def serve(ctx: click.Context, port: int | None, static_dir: str | None) -> None:
    """Start the JSON API server (and optionally the dashboard)."""
    import uvicorn

    from .api import create_app

    project = _open_project(ctx)
    app = create_app(project, static_dir=static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port or project.config.server_port, log_level="warning")


if __name__ == "__main__":
    main()
