"""Shared fixtures plus the whole-suite runtime guard."""

from __future__ import annotations

import json
import time

import pytest

from isoready import Taxonomy, builtin_iso27001, parse_taxonomy
from isoready.store import SessionStore

from refcase import reference_case

_SUITE_BUDGET_SECONDS = 120


def pytest_sessionstart(session: pytest.Session) -> None:
    session.config._suite_started = time.monotonic()


def pytest_sessionfinish(session: pytest.Session, exitstatus: int) -> None:
    elapsed = time.monotonic() - session.config._suite_started
    verdict = "PASS" if elapsed < _SUITE_BUDGET_SECONDS else "FAIL"
    print(
        f"\nACCEPTANCE suite_runtime_under_{_SUITE_BUDGET_SECONDS}s: {verdict}"
        f" ({elapsed:.1f}s)"
    )
    if verdict == "FAIL" and session.exitstatus == 0:
        session.exitstatus = 1


@pytest.fixture(scope="session")
def bundled() -> Taxonomy:
    return builtin_iso27001()


@pytest.fixture(scope="session")
def reference():
    """(taxonomy, sheet) of the six-domain reference example."""
    doc, sheet = reference_case()
    return parse_taxonomy(json.dumps(doc)), sheet


@pytest.fixture()
def store(tmp_path) -> SessionStore:
    with SessionStore(tmp_path / "store.jsonl") as handle:
        yield handle
