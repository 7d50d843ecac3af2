"""Recursive mean-aggregation scoring engine.

An assessment tree is evaluated bottom-up: issue leaves carry raw integer
scores, every internal node's achievement is the arithmetic mean of its
children's achievements, and a synthetic root averages the domains. The
tree may be arbitrarily deep; only the leaf/internal distinction matters
to the aggregation. Alongside its achievement each node gets the derived
indicators:

* priority   - the gap to the scale maximum (the ideal value); high
               priority marks the improvement targets,
* percentage - the achievement mapped onto 0..100,
* predicate  - the qualitative label of the nearest scale step.

All operations here are pure functions of their inputs; nothing is shared
or mutated, so they are safe under any concurrency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import TYPE_CHECKING, Any, Iterator, Mapping

from .errors import (
    EmptyNode,
    IncompleteAssessment,
    InvalidInput,
    OutOfRangeScore,
    UnknownLeafId,
)

if TYPE_CHECKING:
    from .taxonomy import Taxonomy

# Raw assessment input: issue-leaf id -> integer score.
ScoreSheet = dict[str, int]


class NodeKind(str, Enum):
    DOMAIN = "domain"
    CLASS = "class"
    CONTROL = "control"
    ISSUE = "issue"
    # Synthetic result-tree root; never appears in taxonomy documents.
    ROOT = "root"


class Mode(str, Enum):
    """Evaluation mode: strict requires every leaf scored, partial excludes
    unscored leaves from their parent's mean and reports coverage < 1."""

    STRICT = "strict"
    PARTIAL = "partial"


@dataclass(frozen=True)
class Scale:
    """Bounded integer assessment scale with one label per step.

    The default is the five-point 0..4 scale; ``max`` doubles as the ideal
    value that priorities are measured against.
    """

    min: int = 0
    max: int = 4
    labels: tuple[str, ...] = (
        "not implementing",
        "below average",
        "average",
        "above average",
        "excellent",
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.min >= self.max:
            raise InvalidInput(f"scale min {self.min} must be below max {self.max}")
        expected = self.max - self.min + 1
        if len(self.labels) != expected:
            raise InvalidInput(
                f"scale from {self.min} to {self.max} needs {expected} labels, "
                f"got {len(self.labels)}"
            )

    @property
    def span(self) -> int:
        return self.max - self.min

    def label_for(self, step: int) -> str:
        return self.labels[step - self.min]

    def to_dict(self) -> dict[str, Any]:
        return {"min": self.min, "max": self.max, "labels": list(self.labels)}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "Scale":
        return cls(min=raw["min"], max=raw["max"], labels=tuple(raw["labels"]))


DEFAULT_SCALE = Scale()


@dataclass
class TaxonomyNode:
    """One node of the assessment tree.

    ``kind == ISSUE`` marks a scoreable leaf; every other kind aggregates
    its children. ``iso_ref`` carries the standard's clause number where
    one applies (e.g. "5.1.1" on a control).
    """

    id: str
    name: str
    kind: NodeKind
    iso_ref: str | None = None
    children: list["TaxonomyNode"] = field(default_factory=list)

    @property
    def is_issue(self) -> bool:
        return self.kind is NodeKind.ISSUE

    def walk(self) -> Iterator["TaxonomyNode"]:
        """Depth-first traversal in declared child order, self first."""
        yield self
        for child in self.children:
            yield from child.walk()

    def leaf_ids(self) -> list[str]:
        return [node.id for node in self.walk() if node.is_issue]


@dataclass
class NodeResult:
    """Evaluated view of one node: achievement plus derived indicators."""

    node_id: str
    name: str
    kind: NodeKind
    achievement: float
    priority: float
    percentage: float
    predicate: str
    children: list["NodeResult"] = field(default_factory=list)

    def walk(self) -> Iterator["NodeResult"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class AssessmentResult:
    """Fully evaluated tree plus the overall (root) score.

    ``overall`` is a synthetic root whose children are the taxonomy's
    domains; ``coverage`` is the fraction of issue leaves that were scored
    (1.0 in strict mode).
    """

    taxonomy_id: str
    taxonomy_version: str
    scale: Scale
    overall: NodeResult
    evaluated_at: datetime
    coverage: float


def _check_achievement(achievement: float, scale: Scale) -> None:
    if not (scale.min <= achievement <= scale.max):
        raise OutOfRangeScore(
            f"achievement {achievement} outside scale [{scale.min}, {scale.max}]"
        )


def priority_of(achievement: float, scale: Scale = DEFAULT_SCALE) -> float:
    """Gap between the ideal value (scale max) and the achievement.

    Strictly decreasing in achievement: high achievement means low
    priority for further work, and conversely.
    """
    _check_achievement(achievement, scale)
    return scale.max - achievement


def percentage_of(achievement: float, scale: Scale = DEFAULT_SCALE) -> float:
    """Achievement mapped affinely onto 0..100 (full precision)."""
    _check_achievement(achievement, scale)
    return (achievement - scale.min) / scale.span * 100.0


def predicate_of(achievement: float, scale: Scale = DEFAULT_SCALE) -> str:
    """Label of the nearest integer scale step.

    Ties at exact .5 round toward the scale maximum, so 2.5 on the default
    scale reads "above average".
    """
    _check_achievement(achievement, scale)
    step = scale.min + math.floor(achievement - scale.min + 0.5)
    return scale.label_for(min(step, scale.max))


def _coerce_mode(mode: Mode | str) -> Mode:
    try:
        return Mode(mode)
    except ValueError:
        raise InvalidInput(f"unknown evaluation mode {mode!r}") from None


def _validate_sheet(
    sheet: Mapping[str, int], leaf_ids: set[str], scale: Scale
) -> None:
    unknown = sorted(key for key in sheet if key not in leaf_ids)
    if unknown:
        raise UnknownLeafId(
            f"{len(unknown)} sheet id(s) are not issue leaves of the taxonomy",
            details={"unknown_ids": unknown},
        )
    bad = {
        key: score
        for key, score in sheet.items()
        if isinstance(score, bool)
        or not isinstance(score, int)
        or not (scale.min <= score <= scale.max)
    }
    if bad:
        raise OutOfRangeScore(
            f"scores must be integers in [{scale.min}, {scale.max}]",
            details={"bad_scores": {k: bad[k] for k in sorted(bad)}},
        )


def validate_scores(
    sheet: Mapping[str, int], leaf_ids: set[str], scale: Scale = DEFAULT_SCALE
) -> None:
    """Reject sheets with ids outside ``leaf_ids`` or scores off the scale."""
    _validate_sheet(sheet, leaf_ids, scale)


def _subtree_value(
    node: TaxonomyNode, sheet: Mapping[str, int], scale: Scale
) -> float | None:
    """Mean of the scored leaves below ``node``; None when none are scored."""
    if node.is_issue:
        score = sheet.get(node.id)
        if score is None:
            return None
        if not (scale.min <= score <= scale.max):
            raise OutOfRangeScore(
                f"score {score} for {node.id!r} outside [{scale.min}, {scale.max}]"
            )
        return float(score)
    values = [
        value
        for child in node.children
        if (value := _subtree_value(child, sheet, scale)) is not None
    ]
    if not values:
        return None
    return sum(values) / len(values)


def aggregate_node(
    node: TaxonomyNode,
    sheet: Mapping[str, int],
    scale: Scale = DEFAULT_SCALE,
    mode: Mode | str = Mode.STRICT,
) -> float:
    """Achievement of one node: its score for a leaf, the arithmetic mean
    of its children (in declared order) for an internal node.

    Strict mode demands a score for every issue leaf below ``node``; in
    partial mode unscored leaves simply do not contribute, and a node with
    nothing scored below it has no mean to take (EmptyNode).
    """
    mode = _coerce_mode(mode)
    if mode is Mode.STRICT:
        missing = [leaf for leaf in node.leaf_ids() if leaf not in sheet]
        if missing:
            raise IncompleteAssessment(
                f"{len(missing)} issue leaf(s) under {node.id!r} are unscored",
                details={"missing_ids": missing},
            )
    value = _subtree_value(node, sheet, scale)
    if value is None:
        raise EmptyNode(f"node {node.id!r} has no scored leaves to aggregate")
    return value


def _result_tree(
    node: TaxonomyNode, sheet: Mapping[str, int], scale: Scale
) -> NodeResult | None:
    """Build the evaluated subtree, pruning branches with nothing scored."""
    if node.is_issue:
        score = sheet.get(node.id)
        if score is None:
            return None
        achievement = float(score)
        children: list[NodeResult] = []
    else:
        children = [
            result
            for child in node.children
            if (result := _result_tree(child, sheet, scale)) is not None
        ]
        if not children:
            return None
        achievement = sum(r.achievement for r in children) / len(children)
    return NodeResult(
        node_id=node.id,
        name=node.name,
        kind=node.kind,
        achievement=achievement,
        priority=scale.max - achievement,
        percentage=(achievement - scale.min) / scale.span * 100.0,
        predicate=predicate_of(achievement, scale),
        children=children,
    )


def evaluate(
    taxonomy: Taxonomy,
    sheet: Mapping[str, int],
    mode: Mode | str = Mode.STRICT,
    scale: Scale | None = None,
) -> AssessmentResult:
    """Evaluate a full taxonomy against a score sheet.

    Returns the evaluated tree: every node carries achievement, priority,
    percentage and predicate; the root is synthetic, with the taxonomy's
    domains as children. The scale defaults to the taxonomy's own.
    """
    mode = _coerce_mode(mode)
    scale = scale or taxonomy.scale
    all_leaves = taxonomy.leaf_ids()
    _validate_sheet(sheet, set(all_leaves), scale)
    if mode is Mode.STRICT:
        missing = [leaf for leaf in all_leaves if leaf not in sheet]
        if missing:
            raise IncompleteAssessment(
                f"{len(missing)} of {len(all_leaves)} issue leaves are unscored",
                details={"missing_ids": missing},
            )

    domains = [
        result
        for domain in taxonomy.domains
        if (result := _result_tree(domain, sheet, scale)) is not None
    ]
    if not domains:
        raise EmptyNode("no scored leaves anywhere in the taxonomy")
    achievement = sum(d.achievement for d in domains) / len(domains)
    overall = NodeResult(
        node_id=taxonomy.id,
        name=taxonomy.title,
        kind=NodeKind.ROOT,
        achievement=achievement,
        priority=scale.max - achievement,
        percentage=(achievement - scale.min) / scale.span * 100.0,
        predicate=predicate_of(achievement, scale),
        children=domains,
    )
    return AssessmentResult(
        taxonomy_id=taxonomy.id,
        taxonomy_version=taxonomy.version,
        scale=scale,
        overall=overall,
        evaluated_at=datetime.now(timezone.utc),
        coverage=len(sheet) / len(all_leaves) if all_leaves else 0.0,
    )


def node_result_to_dict(result: NodeResult) -> dict[str, Any]:
    """Plain-dict form of an evaluated node, full float precision."""
    return {
        "node_id": result.node_id,
        "name": result.name,
        "kind": result.kind.value,
        "achievement": result.achievement,
        "priority": result.priority,
        "percentage": result.percentage,
        "predicate": result.predicate,
        "children": [node_result_to_dict(child) for child in result.children],
    }


def node_result_from_dict(raw: Mapping[str, Any]) -> NodeResult:
    return NodeResult(
        node_id=raw["node_id"],
        name=raw["name"],
        kind=NodeKind(raw["kind"]),
        achievement=raw["achievement"],
        priority=raw["priority"],
        percentage=raw["percentage"],
        predicate=raw["predicate"],
        children=[node_result_from_dict(child) for child in raw.get("children", [])],
    )


def result_to_dict(result: AssessmentResult) -> dict[str, Any]:
    return {
        "taxonomy_id": result.taxonomy_id,
        "taxonomy_version": result.taxonomy_version,
        "scale": result.scale.to_dict(),
        "evaluated_at": result.evaluated_at.isoformat(),
        "coverage": result.coverage,
        "overall": node_result_to_dict(result.overall),
    }


def result_from_dict(raw: Mapping[str, Any]) -> AssessmentResult:
    return AssessmentResult(
        taxonomy_id=raw["taxonomy_id"],
        taxonomy_version=raw["taxonomy_version"],
        scale=Scale.from_dict(raw["scale"]),
        overall=node_result_from_dict(raw["overall"]),
        evaluated_at=datetime.fromisoformat(raw["evaluated_at"]),
        coverage=raw["coverage"],
    )
