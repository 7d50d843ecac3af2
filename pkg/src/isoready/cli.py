"""Operator command line: validate, assess, serve, history, export.

Exit codes form a stable contract: 0 on success, 1 when a domain error
(validation failure, incomplete sheet, bind failure, unknown user) stops
the command, 2 on unreadable files or bad usage. Every flag can also be
set through an ISOREADY_* environment variable; flags win.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path
from typing import Any, NoReturn

import click

from .errors import AssessmentError, InvalidInput, MalformedDocument
from .reporting import (
    format_2dp,
    histogram_series,
    render_text_bars,
    summarize,
)
from .scoring import evaluate
from .store import SessionStore
from .taxonomy import (
    Taxonomy,
    builtin_iso27001,
    parse_taxonomy,
    validate_taxonomy,
)

_DEFAULT_STORE = "isoready.jsonl"
_DEFAULT_BIND = "127.0.0.1:8000"


def _fail(error: AssessmentError) -> NoReturn:
    click.echo(f"error [{error.code}]: {error.message}", err=True)
    if error.details is not None:
        click.echo(json.dumps(error.details, indent=2, sort_keys=True), err=True)
    raise SystemExit(1)


def _fail_io(error: OSError) -> NoReturn:
    click.echo(f"error: {error}", err=True)
    raise SystemExit(2)


def _load_taxonomy(path: str | None) -> Taxonomy:
    if path is None:
        return builtin_iso27001()
    return parse_taxonomy(Path(path).read_bytes())


def _load_sheet(path: Path) -> dict[str, Any]:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        sheet: dict[str, Any] = {}
        for index, row in enumerate(csv.reader(text.splitlines())):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise InvalidInput(f"scoresheet row {index + 1}: expected id,score")
            key, value = row[0].strip(), row[1].strip()
            try:
                score: Any = int(value)
            except ValueError:
                if index == 0:  # header row
                    continue
                score = value
            sheet[key] = score
        return sheet
    try:
        raw = json.loads(text)
    except ValueError as exc:
        raise MalformedDocument(f"scoresheet is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise MalformedDocument("scoresheet must be a JSON object of leaf scores")
    return raw


def _parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise click.UsageError(f"--bind must look like host:port, got {bind!r}")
    return host, int(port)


_store_option = click.option(
    "--store",
    "store_path",
    envvar="ISOREADY_STORE",
    default=_DEFAULT_STORE,
    show_default=True,
    help="Path of the session store file.",
)
_taxonomy_option = click.option(
    "--taxonomy",
    "taxonomy_path",
    envvar="ISOREADY_TAXONOMY",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Taxonomy JSON file (defaults to the bundled ISO 27001 set).",
)


@click.group()
@click.version_option(package_name="isoready")
def main() -> None:
    """ISO 27001 readiness assessment toolkit."""


@main.command()
@click.argument("taxonomy_file", type=click.Path(exists=True, dir_okay=False))
def validate(taxonomy_file: str) -> None:
    """Check a taxonomy file and print its validation report."""
    try:
        taxonomy = parse_taxonomy(Path(taxonomy_file).read_bytes())
    except AssessmentError as exc:
        _fail(exc)
    except OSError as exc:
        _fail_io(exc)
    counts = taxonomy.level_counts()
    click.echo(
        f"{counts['domains']} domains, {counts['controls']} controls, "
        f"{counts['classes']} classes, {counts['issues']} issues"
    )
    report = validate_taxonomy(taxonomy)
    for issue in report.issues:
        location = f" [{issue.node_id}]" if issue.node_id else ""
        click.echo(f"{issue.severity}: {issue.message}{location}")
    if not report.ok:
        raise SystemExit(1)
    click.echo("ok")


@main.command()
@_taxonomy_option
@click.option(
    "--sheet",
    "sheet_path",
    envvar="ISOREADY_SHEET",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Scoresheet file: JSON object or CSV rows of id,score.",
)
@click.option(
    "--mode",
    envvar="ISOREADY_MODE",
    type=click.Choice(["strict", "partial"]),
    default="strict",
    show_default=True,
)
@click.option(
    "--format",
    "out_format",
    envvar="ISOREADY_FORMAT",
    type=click.Choice(["text", "json", "csv"]),
    default="text",
    show_default=True,
    help="text prints the summary; json/csv emit a report export.",
)
@click.option(
    "--out",
    "out_path",
    type=click.Path(dir_okay=False, writable=True),
    default=None,
    help="Write the json/csv export here instead of stdout.",
)
def assess(
    taxonomy_path: str | None,
    sheet_path: str,
    mode: str,
    out_format: str,
    out_path: str | None,
) -> None:
    """Evaluate a scoresheet against a taxonomy and report the result."""
    try:
        taxonomy = _load_taxonomy(taxonomy_path)
        sheet = _load_sheet(Path(sheet_path))
        result = evaluate(taxonomy, sheet, mode=mode)
    except AssessmentError as exc:
        _fail(exc)
    except OSError as exc:
        _fail_io(exc)

    if out_format in ("json", "csv"):
        from .reporting import export_result

        body = export_result(result, out_format)
        if out_path is None:
            sys.stdout.buffer.write(body)
            return
        Path(out_path).write_bytes(body)

    summary = summarize(result)
    scale = result.scale
    click.echo(
        f"{format_2dp(summary.out_of_scale)} / {scale.max} — "
        f"{format_2dp(summary.out_of_hundred)}% — {summary.predicate}"
    )
    if result.coverage < 1:
        click.echo(f"coverage: {result.coverage * 100:.1f}%")
    click.echo(summary.advice.text)
    if out_format == "text":
        click.echo("")
        click.echo(render_text_bars(histogram_series(result, "domain"), scale))


@main.command()
@_store_option
@_taxonomy_option
@click.option(
    "--bind",
    envvar="ISOREADY_BIND",
    default=_DEFAULT_BIND,
    show_default=True,
    help="host:port to listen on.",
)
@click.option(
    "--static",
    "static_dir",
    envvar="ISOREADY_STATIC",
    type=click.Path(exists=True, file_okay=False),
    default=None,
    help="Directory of built web UI assets to serve at /.",
)
def serve(
    store_path: str, taxonomy_path: str | None, bind: str, static_dir: str | None
) -> None:
    """Run the HTTP API (and optionally the web UI) until interrupted."""
    host, port = _parse_bind(bind)
    try:
        taxonomies = [builtin_iso27001()]
        if taxonomy_path is not None:
            taxonomies.append(_load_taxonomy(taxonomy_path))
        store = SessionStore(store_path, taxonomies=taxonomies)
    except AssessmentError as exc:
        _fail(exc)
    except OSError as exc:
        _fail_io(exc)
    from .api import serve as run_server

    click.echo(f"serving on http://{host}:{port}")
    try:
        with store:
            run_server(store, host=host, port=port, static_dir=static_dir)
    except AssessmentError as exc:
        _fail(exc)


@main.command()
@_store_option
@click.option("--user", "username", envvar="ISOREADY_USER", required=True)
@click.option(
    "--taxonomy",
    "taxonomy_id",
    envvar="ISOREADY_TAXONOMY_ID",
    default=None,
    help="Only show attempts against this taxonomy id.",
)
def history(store_path: str, username: str, taxonomy_id: str | None) -> None:
    """Print a user's finalized attempts and their overall trend."""
    try:
        with SessionStore(store_path) as store:
            user = store.user_by_name(username)
            view = store.history(user, taxonomy_id)
    except AssessmentError as exc:
        _fail(exc)
    except OSError as exc:
        _fail_io(exc)

    click.echo(
        f"{'attempt':>7}  {'overall':>7}  {'predicate':<18}"
        f"{'taxonomy':<12}  {'duration_s':>10}  started_at"
    )
    for row in view.rows:
        click.echo(
            f"{row.attempt_number:>7}  {format_2dp(row.overall):>7}  "
            f"{row.predicate:<18}{row.taxonomy_id:<12}  "
            f"{row.duration_seconds:>10.1f}  {row.started_at}"
        )
    if not view.trend:
        return
    # Bars are scaled against the best attempt so any scale renders.
    top = max(view.trend)
    click.echo("trend:")
    for row in view.rows:
        width = round(20 * row.overall / top) if top > 0 else 0
        click.echo(
            f"  #{row.attempt_number} {'#' * width:<20} {format_2dp(row.overall)}"
        )


@main.command()
@_store_option
@click.option(
    "--user",
    "username",
    envvar="ISOREADY_USER",
    default=None,
    help="Only export this user's experiments.",
)
@click.option(
    "--out",
    "out_path",
    type=click.Path(dir_okay=False, writable=True),
    default=None,
    help="Write the backup here instead of stdout.",
)
def export(store_path: str, username: str | None, out_path: str | None) -> None:
    """Dump raw experiment documents as JSON for backup."""
    try:
        with SessionStore(store_path) as store:
            user = store.user_by_name(username) if username else None
            docs = store.export_experiments(user)
    except AssessmentError as exc:
        _fail(exc)
    except OSError as exc:
        _fail_io(exc)
    body = (json.dumps(docs, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    if out_path is None:
        sys.stdout.buffer.write(body)
    else:
        Path(out_path).write_bytes(body)
