"""Presentations of an evaluated assessment.

Four views of one ``AssessmentResult``: a summary (score on the scale,
percentage, predicate, advice), template-rendered advice naming the
strongest and weakest domains, histogram series of achievement against
priority per domain or control, and deterministic CSV/JSON exports.

Displayed numbers are rounded to two decimals, half to even, on the
shortest decimal representation of the value. Exports carry full float
precision in JSON and two decimals in CSV.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from functools import lru_cache
from importlib import resources
from typing import Any, Mapping

from .errors import InvalidInput
from .scoring import (
    AssessmentResult,
    NodeKind,
    NodeResult,
    Scale,
    node_result_to_dict,
    percentage_of,
)


def round2(value: float) -> float:
    """Round to two decimals, half to even, via the shortest decimal form."""
    return float(Decimal(str(value)).quantize(Decimal("0.01"), ROUND_HALF_EVEN))


def format_2dp(value: float) -> str:
    return f"{round2(value):.2f}"


@lru_cache(maxsize=1)
def _templates() -> dict[str, str]:
    text = resources.files("isoready.data").joinpath("advice_templates.json")
    return json.loads(text.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Advice:
    """Strongest and weakest domains plus a rendered recommendation."""

    strongest: tuple[str, ...]
    weakest: tuple[str, ...]
    text: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "strongest": list(self.strongest),
            "weakest": list(self.weakest),
            "text": self.text,
        }


@dataclass(frozen=True)
class Summary:
    """The four headline outputs of an assessment.

    ``out_of_scale`` and ``out_of_hundred`` are rounded to two decimals;
    the predicate is derived from the unrounded overall achievement.
    """

    out_of_scale: float
    out_of_hundred: float
    predicate: str
    advice: Advice

    def to_dict(self) -> dict[str, Any]:
        return {
            "out_of_scale": self.out_of_scale,
            "out_of_hundred": self.out_of_hundred,
            "out_of_scale_display": format_2dp(self.out_of_scale),
            "out_of_hundred_display": format_2dp(self.out_of_hundred),
            "predicate": self.predicate,
            "advice": self.advice.to_dict(),
        }


@dataclass(frozen=True)
class Bar:
    name: str
    achievement: float
    priority: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "achievement": self.achievement,
            "priority": self.priority,
            "achievement_display": format_2dp(self.achievement),
            "priority_display": format_2dp(self.priority),
        }


@dataclass(frozen=True)
class HistogramSeries:
    level: str
    bars: tuple[Bar, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"level": self.level, "bars": [bar.to_dict() for bar in self.bars]}


def _domains(result: AssessmentResult) -> list[NodeResult]:
    return list(result.overall.children)


def advise(
    result: AssessmentResult, templates: Mapping[str, str] | None = None
) -> Advice:
    """Name the strongest and weakest domains, listing every tie."""
    templates = _templates() if templates is None else templates
    domains = _domains(result)
    top = max(domain.achievement for domain in domains)
    bottom = min(domain.achievement for domain in domains)
    strongest = tuple(d.name for d in domains if d.achievement == top)
    weakest = tuple(d.name for d in domains if d.achievement == bottom)
    if top == bottom:
        text = templates["uniform"].format(value=format_2dp(top))
    else:
        ranked = sorted(domains, key=lambda d: d.priority, reverse=True)
        text = (
            templates["mixed"].format(
                strongest=", ".join(strongest), weakest=", ".join(weakest)
            )
            + " "
            + templates["ranking"].format(
                ranking=" > ".join(d.name for d in ranked)
            )
        )
    return Advice(strongest=strongest, weakest=weakest, text=text)


def summarize(
    result: AssessmentResult, templates: Mapping[str, str] | None = None
) -> Summary:
    """Condense a result to score, percentage, predicate, and advice."""
    raw = result.overall.achievement
    return Summary(
        out_of_scale=round2(raw),
        out_of_hundred=round2(percentage_of(raw, result.scale)),
        predicate=result.overall.predicate,
        advice=advise(result, templates),
    )


def histogram_series(result: AssessmentResult, level: str) -> HistogramSeries:
    """Achievement and priority bars at domain or control level."""
    try:
        kind = NodeKind(level)
    except ValueError:
        kind = None
    if kind not in (NodeKind.DOMAIN, NodeKind.CONTROL):
        raise InvalidInput(f"histogram level must be domain or control, got {level!r}")
    bars = tuple(
        Bar(name=node.name, achievement=node.achievement, priority=node.priority)
        for node in result.overall.walk()
        if node.kind is kind
    )
    return HistogramSeries(level=kind.value, bars=bars)


def render_text_bars(
    series: HistogramSeries, scale: Scale, width: int = 32
) -> str:
    """Plain-text bar rendering of a histogram series for terminals."""
    if not series.bars:
        return "(no bars)"
    label_width = max(len(bar.name) for bar in series.bars)
    lines = []
    for bar in series.bars:
        fraction = (bar.achievement - scale.min) / scale.span
        filled = round(width * fraction)
        lines.append(
            f"{bar.name.ljust(label_width)}  "
            f"{'#' * filled}{'.' * (width - filled)}  "
            f"{format_2dp(bar.achievement)}"
        )
    return "\n".join(lines)


def _export_json(result: AssessmentResult) -> bytes:
    # evaluated_at is deliberately absent: exports of the same sheet and
    # taxonomy must be byte-identical across runs.
    payload = {
        "taxonomy_id": result.taxonomy_id,
        "taxonomy_version": result.taxonomy_version,
        "scale": result.scale.to_dict(),
        "coverage": result.coverage,
        "overall": node_result_to_dict(result.overall),
    }
    text = json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True)
    return (text + "\n").encode("utf-8")


def _control_rows(
    result: AssessmentResult,
) -> list[tuple[NodeResult | None, NodeResult | None, NodeResult]]:
    """(domain, class, control) ancestry triples in taxonomy order."""
    rows: list[tuple[NodeResult | None, NodeResult | None, NodeResult]] = []

    def visit(
        node: NodeResult, domain: NodeResult | None, cls: NodeResult | None
    ) -> None:
        if node.kind is NodeKind.DOMAIN:
            domain = node
        elif node.kind is NodeKind.CLASS:
            cls = node
        elif node.kind is NodeKind.CONTROL:
            rows.append((domain, cls, node))
        for child in node.children:
            visit(child, domain, cls)

    visit(result.overall, None, None)
    return rows


def _export_csv(result: AssessmentResult) -> bytes:
    overall = format_2dp(result.overall.achievement)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        [
            "domain",
            "class",
            "control",
            "control_achievement",
            "class_achievement",
            "domain_achievement",
            "overall",
        ]
    )
    for domain, cls, control in _control_rows(result):
        writer.writerow(
            [
                domain.name if domain else "",
                cls.name if cls else "",
                control.name,
                format_2dp(control.achievement),
                format_2dp(cls.achievement) if cls else "",
                format_2dp(domain.achievement) if domain else "",
                overall,
            ]
        )
    return buffer.getvalue().encode("utf-8")


def export_result(result: AssessmentResult, format: str) -> bytes:
    """Deterministic byte export of a result as ``json`` or ``csv``."""
    if format == "json":
        return _export_json(result)
    if format == "csv":
        return _export_csv(result)
    raise InvalidInput(f"export format must be json or csv, got {format!r}")
