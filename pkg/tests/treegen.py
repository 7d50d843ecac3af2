"""Seeded random taxonomy documents for oracle and property tests.

Trees are emitted in the JSON document shape so they flow through the
real parser. Depth stays within 5 levels below the root and fan-out
within 6, matching the sizes the engine must handle.
"""

from __future__ import annotations

import random
from typing import Any

from oracle import leaf_ids

_INTERNAL_KINDS = ["domain", "class", "control"]


def random_taxonomy(
    rng: random.Random,
    max_depth: int = 5,
    max_fanout: int = 6,
    scale_min: int = 0,
    scale_max: int = 4,
) -> dict[str, Any]:
    counter = [0]

    def next_id(prefix: str) -> str:
        counter[0] += 1
        return f"{prefix}{counter[0]}"

    def node(depth: int) -> dict[str, Any]:
        is_leaf = depth >= max_depth - 1 or (depth >= 1 and rng.random() < 0.3)
        if is_leaf:
            return {"id": next_id("n"), "name": f"issue {counter[0]}", "kind": "issue"}
        # Internal kinds follow the canonical layering; anything deeper
        # than the named levels stays a control until the leaves.
        kind = _INTERNAL_KINDS[min(depth, len(_INTERNAL_KINDS) - 1)]
        fanout = rng.randint(1, max_fanout)
        return {
            "id": next_id("n"),
            "name": f"{kind} {counter[0]}",
            "kind": kind,
            "children": [node(depth + 1) for _ in range(fanout)],
        }

    domains = []
    for _ in range(rng.randint(1, max_fanout)):
        domain = node(0)
        if domain["kind"] == "issue":  # domains must be internal at top level
            domain = {
                "id": next_id("n"),
                "name": f"domain {counter[0]}",
                "kind": "domain",
                "children": [domain],
            }
        else:
            domain["kind"] = "domain"
        domains.append(domain)

    labels = [f"label {step}" for step in range(scale_max - scale_min + 1)]
    return {
        "id": f"random-{rng.randint(0, 10**9)}",
        "title": "randomly generated taxonomy",
        "version": "0.0.1",
        "scale": {"min": scale_min, "max": scale_max, "labels": labels},
        "domains": domains,
    }


def full_sheet(
    taxonomy_doc: dict[str, Any],
    rng: random.Random,
    scale_min: int = 0,
    scale_max: int = 4,
) -> dict[str, int]:
    return {leaf: rng.randint(scale_min, scale_max) for leaf in leaf_ids(taxonomy_doc)}


def partial_sheet(
    taxonomy_doc: dict[str, Any],
    rng: random.Random,
    keep: float = 0.6,
    scale_min: int = 0,
    scale_max: int = 4,
) -> dict[str, int]:
    sheet = full_sheet(taxonomy_doc, rng, scale_min, scale_max)
    return {k: v for k, v in sheet.items() if rng.random() < keep}
