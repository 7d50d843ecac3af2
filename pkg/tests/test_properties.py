"""Property tests for the rollup invariants on randomly generated trees."""

from __future__ import annotations

import json
import math
import random

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from isoready import (
    DEFAULT_SCALE,
    Mode,
    advise,
    evaluate,
    parse_taxonomy,
    percentage_of,
    predicate_of,
    priority_of,
)

from oracle import leaf_ids, oracle_achievements
from treegen import full_sheet, partial_sheet, random_taxonomy

_SETTINGS = settings(max_examples=60, deadline=None)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _case(seed: int):
    rng = random.Random(seed)
    doc = random_taxonomy(rng)
    sheet = full_sheet(doc, rng)
    taxonomy = parse_taxonomy(json.dumps(doc))
    return doc, taxonomy, sheet


def _ancestor_map(doc) -> dict[str, set[str]]:
    ancestors: dict[str, set[str]] = {}

    def visit(node, path):
        here = path | {node["id"]}
        ancestors[node["id"]] = path
        for child in node.get("children", []):
            visit(child, here)

    for domain in doc["domains"]:
        visit(domain, {doc["id"]})
    return ancestors


@_SETTINGS
@given(seed=seeds)
def test_achievements_stay_on_scale(seed):
    _, taxonomy, sheet = _case(seed)
    result = evaluate(taxonomy, sheet)
    for node in result.overall.walk():
        assert 0.0 <= node.achievement <= 4.0
        if node.children:
            values = [child.achievement for child in node.children]
            assert min(values) <= node.achievement <= max(values)


@_SETTINGS
@given(seed=seeds, score=st.integers(min_value=0, max_value=4))
def test_uniform_scores_roll_up_exactly(seed, score):
    doc, taxonomy, _ = _case(seed)
    sheet = {leaf: score for leaf in leaf_ids(doc)}
    result = evaluate(taxonomy, sheet)
    for node in result.overall.walk():
        assert node.achievement == float(score)


@_SETTINGS
@given(seed=seeds)
def test_child_order_does_not_matter(seed):
    doc, taxonomy, sheet = _case(seed)
    rng = random.Random(seed + 1)

    def shuffled(node):
        out = dict(node)
        if "children" in node:
            children = [shuffled(child) for child in node["children"]]
            rng.shuffle(children)
            out["children"] = children
        return out

    other_doc = dict(doc)
    other_doc["domains"] = [shuffled(domain) for domain in doc["domains"]]
    rng.shuffle(other_doc["domains"])
    other = parse_taxonomy(json.dumps(other_doc))

    base = {n.node_id: n.achievement for n in evaluate(taxonomy, sheet).overall.walk()}
    perm = {n.node_id: n.achievement for n in evaluate(other, sheet).overall.walk()}
    assert set(base) == set(perm)
    for node_id, value in base.items():
        assert math.isclose(value, perm[node_id], rel_tol=0, abs_tol=1e-9)


@_SETTINGS
@given(seed=seeds)
def test_single_increment_lifts_exactly_the_ancestors(seed):
    doc, taxonomy, sheet = _case(seed)
    rng = random.Random(seed + 2)
    candidates = [leaf for leaf, score in sheet.items() if score < 4]
    assume(candidates)
    leaf = rng.choice(candidates)

    before = {n.node_id: n.achievement for n in evaluate(taxonomy, sheet).overall.walk()}
    bumped = dict(sheet)
    bumped[leaf] += 1
    after = {n.node_id: n.achievement for n in evaluate(taxonomy, bumped).overall.walk()}

    ancestors = _ancestor_map(doc)[leaf]
    for node_id, value in before.items():
        if node_id == leaf or node_id in ancestors:
            assert after[node_id] > value
        else:
            assert after[node_id] == value


@_SETTINGS
@given(seed=seeds)
def test_priority_complements_achievement(seed):
    _, taxonomy, sheet = _case(seed)
    result = evaluate(taxonomy, sheet)
    for node in result.overall.walk():
        assert math.isclose(
            node.achievement + node.priority, 4.0, rel_tol=0, abs_tol=1e-9
        )


@_SETTINGS
@given(seed=seeds)
def test_matches_flat_mean_oracle(seed):
    doc, taxonomy, sheet = _case(seed)
    expected = oracle_achievements(doc, sheet)
    got = {n.node_id: n.achievement for n in evaluate(taxonomy, sheet).overall.walk()}
    assert set(got) == set(expected)
    for node_id, value in expected.items():
        assert math.isclose(got[node_id], value, rel_tol=0, abs_tol=1e-9)


@_SETTINGS
@given(seed=seeds)
def test_partial_matches_pruned_oracle(seed):
    doc, taxonomy, _ = _case(seed)
    rng = random.Random(seed + 3)
    sheet = partial_sheet(doc, rng)
    expected = oracle_achievements(doc, sheet, partial=True)
    assume(expected)
    result = evaluate(taxonomy, sheet, mode=Mode.PARTIAL)
    got = {n.node_id: n.achievement for n in result.overall.walk()}
    assert set(got) == set(expected)
    for node_id, value in expected.items():
        assert math.isclose(got[node_id], value, rel_tol=0, abs_tol=1e-9)
    assert result.coverage == len(sheet) / len(leaf_ids(doc))


@given(value=st.floats(min_value=0.0, max_value=4.0, allow_nan=False))
def test_indicator_functions_agree_with_their_definitions(value):
    assert priority_of(value) == 4.0 - value
    assert percentage_of(value) == value / 4 * 100
    label = predicate_of(value)
    step = DEFAULT_SCALE.labels.index(label)
    # The chosen band's anchor is never further than half a step away.
    assert abs(step - value) <= 0.5


@_SETTINGS
@given(seed=seeds)
def test_presentation_scaling_never_changes_advice(seed):
    _, taxonomy, sheet = _case(seed)
    result = evaluate(taxonomy, sheet)
    advice = advise(result)
    domains = result.overall.children
    by_percentage_max = max(d.percentage for d in domains)
    by_percentage_min = min(d.percentage for d in domains)
    assert set(advice.strongest) == {
        d.name for d in domains if d.percentage == by_percentage_max
    }
    assert set(advice.weakest) == {
        d.name for d in domains if d.percentage == by_percentage_min
    }
