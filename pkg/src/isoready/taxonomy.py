"""Assessment-tree documents: parsing, validation, serialization, and the
bundled ISO 27001 essential-controls dataset.

The file format is a UTF-8 JSON document::

    {
      "id": "...", "title": "...", "version": "...",
      "scale": {"min": 0, "max": 4, "labels": ["...", ...]},
      "domains": [
        {"id": "...", "name": "...", "kind": "domain",
         "iso_ref": "...",            # optional
         "children": [ ... ]}         # absent on issue leaves
      ]
    }

Parsing enforces the schema (field presence/types, unique ids); semantic
tree invariants are the job of :func:`validate_taxonomy`, which reports
rather than raises so that partially built trees can still be inspected.
Taxonomies are immutable by convention after parse and freely shareable
across readers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Iterator, Mapping

from .errors import DuplicateId, InvalidInput, MalformedDocument
from .scoring import NodeKind, Scale, TaxonomyNode

BUILTIN_ID = "iso27001"

_NODE_KINDS = {k.value for k in NodeKind if k is not NodeKind.ROOT}


@dataclass
class Taxonomy:
    """A complete assessment tree: ordered domains under one id/version."""

    id: str
    title: str
    version: str
    scale: Scale
    domains: list[TaxonomyNode]

    def nodes(self) -> Iterator[TaxonomyNode]:
        for domain in self.domains:
            yield from domain.walk()

    def leaf_ids(self) -> list[str]:
        return [node.id for node in self.nodes() if node.is_issue]

    def find(self, node_id: str) -> TaxonomyNode | None:
        for node in self.nodes():
            if node.id == node_id:
                return node
        return None

    def level_counts(self) -> dict[str, int]:
        counts = {"domains": 0, "classes": 0, "controls": 0, "issues": 0}
        plural = {
            NodeKind.DOMAIN: "domains",
            NodeKind.CLASS: "classes",
            NodeKind.CONTROL: "controls",
            NodeKind.ISSUE: "issues",
        }
        for node in self.nodes():
            key = plural.get(node.kind)
            if key:
                counts[key] += 1
        return counts


@dataclass
class ValidationIssue:
    severity: str  # "error" | "warning"
    message: str
    node_id: str | None = None


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(issue.severity == "error" for issue in self.issues)

    @property
    def errors(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity == "warning"]


def _expect(raw: Mapping[str, Any], key: str, types: type | tuple, path: str) -> Any:
    if key not in raw:
        raise MalformedDocument(f"{path}: missing field {key!r}")
    value = raw[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise MalformedDocument(f"{path}.{key}: wrong type {type(value).__name__}")
    return value


def _parse_node(raw: Any, path: str, seen_ids: set[str]) -> TaxonomyNode:
    if not isinstance(raw, dict):
        raise MalformedDocument(f"{path}: node must be an object")
    node_id = _expect(raw, "id", str, path)
    name = _expect(raw, "name", str, path)
    kind = _expect(raw, "kind", str, path)
    if kind not in _NODE_KINDS:
        raise MalformedDocument(
            f"{path}.kind: {kind!r} is not one of {sorted(_NODE_KINDS)}"
        )
    if node_id in seen_ids:
        raise DuplicateId(f"duplicate node id {node_id!r}", details={"id": node_id})
    seen_ids.add(node_id)
    iso_ref = raw.get("iso_ref")
    if iso_ref is not None and not isinstance(iso_ref, str):
        raise MalformedDocument(f"{path}.iso_ref: must be a string when present")
    raw_children = raw.get("children", [])
    if not isinstance(raw_children, list):
        raise MalformedDocument(f"{path}.children: must be a list")
    children = [
        _parse_node(child, f"{path}.children[{i}]", seen_ids)
        for i, child in enumerate(raw_children)
    ]
    return TaxonomyNode(
        id=node_id, name=name, kind=NodeKind(kind), iso_ref=iso_ref, children=children
    )


def parse_taxonomy(document: bytes | str) -> Taxonomy:
    """Parse a taxonomy document, preserving declared child order."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"document is not UTF-8: {exc}") from None
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(raw, dict):
        raise MalformedDocument("$: top level must be an object")

    taxonomy_id = _expect(raw, "id", str, "$")
    title = _expect(raw, "title", str, "$")
    version = _expect(raw, "version", str, "$")
    raw_scale = _expect(raw, "scale", dict, "$")
    try:
        scale = Scale(
            min=_expect(raw_scale, "min", int, "$.scale"),
            max=_expect(raw_scale, "max", int, "$.scale"),
            labels=tuple(_expect(raw_scale, "labels", list, "$.scale")),
        )
    except InvalidInput as exc:
        raise MalformedDocument(f"$.scale: {exc.message}") from None
    raw_domains = _expect(raw, "domains", list, "$")
    if not raw_domains:
        raise MalformedDocument("$.domains: at least one domain is required")

    seen_ids: set[str] = set()
    domains = []
    for i, raw_domain in enumerate(raw_domains):
        node = _parse_node(raw_domain, f"$.domains[{i}]", seen_ids)
        if node.kind is not NodeKind.DOMAIN:
            raise MalformedDocument(
                f"$.domains[{i}]: top-level nodes must have kind 'domain'"
            )
        domains.append(node)
    return Taxonomy(
        id=taxonomy_id, title=title, version=version, scale=scale, domains=domains
    )


def _node_to_dict(node: TaxonomyNode) -> dict[str, Any]:
    raw: dict[str, Any] = {"id": node.id, "name": node.name, "kind": node.kind.value}
    if node.iso_ref is not None:
        raw["iso_ref"] = node.iso_ref
    if not node.is_issue:
        raw["children"] = [_node_to_dict(child) for child in node.children]
    return raw


def taxonomy_to_dict(taxonomy: Taxonomy) -> dict[str, Any]:
    return {
        "id": taxonomy.id,
        "title": taxonomy.title,
        "version": taxonomy.version,
        "scale": taxonomy.scale.to_dict(),
        "domains": [_node_to_dict(domain) for domain in taxonomy.domains],
    }


def serialize_taxonomy(taxonomy: Taxonomy) -> bytes:
    """Deterministic UTF-8 JSON bytes in the taxonomy file format."""
    text = json.dumps(taxonomy_to_dict(taxonomy), indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def validate_taxonomy(taxonomy: Taxonomy) -> ValidationReport:
    """Check tree invariants, reporting problems instead of raising.

    Errors: internal node without children, issue node with children,
    duplicate ids, empty names or scale labels. Warnings: a domain whose
    whole subtree holds a single issue, a control without an iso_ref.
    """
    report = ValidationReport()

    def error(message: str, node_id: str | None = None) -> None:
        report.issues.append(ValidationIssue("error", message, node_id))

    def warning(message: str, node_id: str | None = None) -> None:
        report.issues.append(ValidationIssue("warning", message, node_id))

    for i, label in enumerate(taxonomy.scale.labels):
        if not label.strip():
            error(f"scale label at step {taxonomy.scale.min + i} is empty")

    if not taxonomy.domains:
        error("taxonomy has no domains")

    seen: set[str] = set()
    for node in taxonomy.nodes():
        if not node.id.strip():
            error("node id is empty", node.id)
        if node.id in seen:
            error(f"duplicate node id {node.id!r}", node.id)
        seen.add(node.id)
        if not node.name.strip():
            error(f"node {node.id!r} has an empty name", node.id)
        if node.is_issue and node.children:
            error(f"issue {node.id!r} must not have children", node.id)
        if not node.is_issue and not node.children:
            error(
                f"{node.kind.value} {node.id!r} has no children to aggregate",
                node.id,
            )
        if node.kind is NodeKind.CONTROL and not node.iso_ref:
            warning(f"control {node.id!r} has no iso_ref", node.id)

    for domain in taxonomy.domains:
        issue_count = sum(1 for n in domain.walk() if n.is_issue)
        if issue_count == 1:
            warning(
                f"domain {domain.id!r} holds a single assessment issue", domain.id
            )

    return report


def _data_text(filename: str) -> str:
    return resources.files("isoready.data").joinpath(filename).read_text("utf-8")


def builtin_iso27001() -> Taxonomy:
    """The bundled six-domain ISO 27001 essential-controls taxonomy."""
    return parse_taxonomy(_data_text("iso27001.json"))


def builtin_manifest() -> dict[str, Any]:
    """Manifest of the bundled dataset: id, version, counts per level."""
    return json.loads(_data_text("iso27001.manifest.json"))
