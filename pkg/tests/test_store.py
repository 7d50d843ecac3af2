"""Session store tests: accounts, experiments, persistence, durability."""

from __future__ import annotations

import json
import os
import signal
import subprocess
import sys
import threading

import pytest

from isoready import (
    AlreadyFinalized,
    AuthFailure,
    DuplicateUsername,
    IncompleteAssessment,
    InvalidInput,
    NotFound,
    StoreOpenFailure,
    evaluate,
)
from isoready.store import SessionStore, hash_secret, verify_secret


def scored(store, username="ann", score=2):
    """User plus an experiment with every leaf scored ``score``."""
    user = store.register_user(username, "pw")
    experiment = store.start_experiment(user, "iso27001")
    leaves = store.get_taxonomy("iso27001").leaf_ids()
    experiment = store.record_scores(
        experiment.experiment_id, {leaf: score for leaf in leaves}, user
    )
    return user, experiment


class TestCredentials:
    def test_round_trip(self):
        record = hash_secret("s3cret")
        assert verify_secret("s3cret", record)
        assert not verify_secret("other", record)

    def test_records_are_salted(self):
        assert hash_secret("same") != hash_secret("same")

    def test_malformed_record_never_verifies(self):
        assert not verify_secret("x", "not-a-record")
        assert not verify_secret("x", "pbkdf2-sha256$zz$aa$bb")

    def test_plaintext_never_reaches_disk(self, tmp_path):
        path = tmp_path / "s.jsonl"
        with SessionStore(path) as store:
            store.register_user("ann", "hunter2xyz")
        assert b"hunter2xyz" not in path.read_bytes()


class TestUsers:
    def test_register_and_login(self, store):
        user = store.register_user("auditor1", "s3cret")
        assert user.username == "auditor1"
        token = store.authenticate("auditor1", "s3cret")
        assert store.user_for_token(token).user_id == user.user_id

    def test_duplicate_username_rejected(self, store):
        store.register_user("auditor1", "a")
        with pytest.raises(DuplicateUsername):
            store.register_user("auditor1", "b")

    def test_empty_username_rejected(self, store):
        with pytest.raises(InvalidInput):
            store.register_user("", "pw")
        with pytest.raises(InvalidInput):
            store.register_user("   ", "pw")

    def test_empty_secret_rejected(self, store):
        with pytest.raises(InvalidInput):
            store.register_user("ann", "")

    def test_wrong_secret_and_unknown_user_look_identical(self, store):
        store.register_user("ann", "pw")
        with pytest.raises(AuthFailure) as wrong_secret:
            store.authenticate("ann", "nope")
        with pytest.raises(AuthFailure) as unknown_user:
            store.authenticate("bob", "nope")
        assert wrong_secret.value.message == unknown_user.value.message
        assert wrong_secret.value.details == unknown_user.value.details

    def test_invalid_token_rejected(self, store):
        with pytest.raises(AuthFailure):
            store.user_for_token("bogus")

    def test_user_by_name(self, store):
        store.register_user("ann", "pw")
        assert store.user_by_name("ann").username == "ann"
        with pytest.raises(NotFound):
            store.user_by_name("bob")


class TestExperiments:
    def test_attempts_number_up_from_one(self, store):
        user = store.register_user("ann", "pw")
        numbers = [
            store.start_experiment(user, "iso27001").attempt_number for _ in range(3)
        ]
        assert numbers == [1, 2, 3]

    def test_attempt_numbers_are_per_user_and_taxonomy(self, store):
        ann = store.register_user("ann", "pw")
        bob = store.register_user("bob", "pw")
        store.start_experiment(ann, "iso27001")
        assert store.start_experiment(bob, "iso27001").attempt_number == 1

    def test_unknown_taxonomy_rejected(self, store):
        user = store.register_user("ann", "pw")
        with pytest.raises(NotFound):
            store.start_experiment(user, "iso9000")

    def test_last_write_per_leaf_wins(self, store):
        user = store.register_user("ann", "pw")
        experiment = store.start_experiment(user, "iso27001")
        store.record_scores(experiment.experiment_id, {"6.1.3-q1": 3}, user)
        updated = store.record_scores(experiment.experiment_id, {"6.1.3-q1": 4}, user)
        assert updated.sheet["6.1.3-q1"] == 4

    def test_entries_merge_across_calls(self, store):
        user = store.register_user("ann", "pw")
        experiment = store.start_experiment(user, "iso27001")
        store.record_scores(experiment.experiment_id, {"6.1.3-q1": 3}, user)
        updated = store.record_scores(experiment.experiment_id, {"6.1.3-q2": 1}, user)
        assert updated.sheet == {"6.1.3-q1": 3, "6.1.3-q2": 1}

    def test_score_validation_delegated(self, store):
        from isoready import OutOfRangeScore, UnknownLeafId

        user = store.register_user("ann", "pw")
        experiment = store.start_experiment(user, "iso27001")
        with pytest.raises(OutOfRangeScore):
            store.record_scores(experiment.experiment_id, {"6.1.3-q1": 7}, user)
        with pytest.raises(UnknownLeafId):
            store.record_scores(experiment.experiment_id, {"ghost": 2}, user)

    def test_other_users_experiments_hidden(self, store):
        ann = store.register_user("ann", "pw")
        bob = store.register_user("bob", "pw")
        experiment = store.start_experiment(ann, "iso27001")
        with pytest.raises(NotFound):
            store.get_experiment(experiment.experiment_id, bob)
        with pytest.raises(NotFound):
            store.record_scores(experiment.experiment_id, {"6.1.3-q1": 1}, bob)

    def test_finalize_strict_requires_full_sheet(self, store):
        user = store.register_user("ann", "pw")
        experiment = store.start_experiment(user, "iso27001")
        store.record_scores(experiment.experiment_id, {"6.1.3-q1": 3}, user)
        with pytest.raises(IncompleteAssessment) as err:
            store.finalize_experiment(experiment.experiment_id, user)
        assert len(err.value.details["missing_ids"]) == 65

    def test_finalize_partial_reports_coverage(self, store):
        user = store.register_user("ann", "pw")
        experiment = store.start_experiment(user, "iso27001")
        store.record_scores(experiment.experiment_id, {"6.1.3-q1": 3}, user)
        done = store.finalize_experiment(experiment.experiment_id, user, mode="partial")
        assert done.is_finalized
        assert done.result.coverage == 1 / 66

    def test_finalize_stamps_result_and_timestamps(self, store):
        user, experiment = scored(store)
        done = store.finalize_experiment(experiment.experiment_id, user)
        assert done.finalized_at is not None
        assert done.finalized_at >= done.started_at
        assert done.result.overall.achievement == 2.0

    def test_finalized_experiments_are_immutable(self, store, tmp_path):
        user, experiment = scored(store)
        store.finalize_experiment(experiment.experiment_id, user)
        path = tmp_path / "store.jsonl"
        before = path.read_bytes()
        with pytest.raises(AlreadyFinalized):
            store.record_scores(experiment.experiment_id, {"6.1.3-q1": 1}, user)
        with pytest.raises(AlreadyFinalized):
            store.finalize_experiment(experiment.experiment_id, user)
        assert path.read_bytes() == before

    def test_stored_result_equals_reevaluation(self, store):
        user, experiment = scored(store, score=3)
        done = store.finalize_experiment(experiment.experiment_id, user)
        taxonomy = store.get_taxonomy(done.taxonomy_id)
        fresh = evaluate(taxonomy, done.sheet)
        assert fresh.overall == done.result.overall
        assert fresh.coverage == done.result.coverage


class TestHistory:
    def test_empty_history_is_valid(self, store):
        user = store.register_user("ann", "pw")
        view = store.history(user)
        assert view.rows == ()
        assert view.trend == ()

    def test_rows_ordered_by_attempt_with_trend(self, store):
        user = store.register_user("ann", "pw")
        leaves = store.get_taxonomy("iso27001").leaf_ids()
        for score in (1, 2, 3):
            experiment = store.start_experiment(user, "iso27001")
            store.record_scores(
                experiment.experiment_id, {leaf: score for leaf in leaves}, user
            )
            store.finalize_experiment(experiment.experiment_id, user)
        view = store.history(user, "iso27001")
        assert [row.attempt_number for row in view.rows] == [1, 2, 3]
        assert view.trend == (1.0, 2.0, 3.0)
        assert all(row.duration_seconds >= 0 for row in view.rows)
        assert [row.predicate for row in view.rows] == [
            "below average",
            "average",
            "above average",
        ]

    def test_open_experiments_excluded(self, store):
        user, _ = scored(store)
        assert store.history(user).rows == ()

    def test_taxonomy_filter(self, store):
        user, experiment = scored(store)
        store.finalize_experiment(experiment.experiment_id, user)
        assert len(store.history(user, "iso27001").rows) == 1
        assert store.history(user, "other").rows == ()


class TestPersistence:
    def test_restart_replays_identically(self, tmp_path):
        path = tmp_path / "s.jsonl"
        with SessionStore(path) as store:
            user, experiment = scored(store)
            store.finalize_experiment(experiment.experiment_id, user)
            docs = store.export_experiments()
        with SessionStore(path) as again:
            assert again.export_experiments() == docs
            reloaded = again.get_experiment(
                experiment.experiment_id, again.user_by_name("ann")
            )
            assert reloaded.result.overall.achievement == 2.0

    def test_torn_tail_line_is_dropped(self, tmp_path):
        path = tmp_path / "s.jsonl"
        with SessionStore(path) as store:
            store.register_user("ann", "pw")
        with open(path, "ab") as fh:
            fh.write(b'{"kind": "user", "doc": {"id": "half')
        with SessionStore(path) as again:
            assert again.user_by_name("ann").username == "ann"

    def test_corruption_before_tail_fails_loudly(self, tmp_path):
        path = tmp_path / "s.jsonl"
        with SessionStore(path) as store:
            store.register_user("ann", "pw")
            store.register_user("bob", "pw")
        lines = path.read_bytes().splitlines(keepends=True)
        path.write_bytes(b"garbage\n" + b"".join(lines))
        with pytest.raises(StoreOpenFailure):
            SessionStore(path)

    def test_compaction_keeps_state_and_shrinks_log(self, tmp_path):
        path = tmp_path / "s.jsonl"
        with SessionStore(path) as store:
            user, experiment = scored(store)
            for value in (1, 2, 3, 1, 2, 3):
                store.record_scores(
                    experiment.experiment_id, {"6.1.3-q1": value}, user
                )
            before_lines = len(path.read_bytes().splitlines())
            docs = store.export_experiments()
            store.compact()
            after_lines = len(path.read_bytes().splitlines())
            assert after_lines < before_lines
            assert after_lines == 2  # one user, one experiment
            assert store.export_experiments() == docs
        with SessionStore(path) as again:
            assert again.export_experiments() == docs

    def test_compaction_triggers_at_threshold(self, tmp_path):
        path = tmp_path / "s.jsonl"
        with SessionStore(path, compact_threshold=10) as store:
            user, experiment = scored(store)
            for _ in range(12):
                store.record_scores(experiment.experiment_id, {"6.1.3-q1": 1}, user)
            assert len(path.read_bytes().splitlines()) <= 10

    def test_durability_across_sigkill(self, tmp_path):
        path = tmp_path / "s.jsonl"
        child = subprocess.Popen(
            [
                sys.executable,
                "-c",
                "import sys, time\n"
                "from isoready.store import SessionStore\n"
                "store = SessionStore(sys.argv[1])\n"
                "user = store.register_user('kid', 'pw')\n"
                "exp = store.start_experiment(user, 'iso27001')\n"
                "store.record_scores(exp.experiment_id,"
                " {'6.1.3-q1': 3, '5.1.1-q1': 2}, user)\n"
                "print(exp.experiment_id, flush=True)\n"
                "time.sleep(120)\n",
                str(path),
            ],
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            experiment_id = child.stdout.readline().strip()
            assert experiment_id
            os.kill(child.pid, signal.SIGKILL)
            child.wait(timeout=30)
        finally:
            if child.poll() is None:
                child.kill()
        with SessionStore(path) as store:
            user = store.user_by_name("kid")
            experiment = store.get_experiment(experiment_id, user)
            assert experiment.sheet == {"6.1.3-q1": 3, "5.1.1-q1": 2}


class TestConcurrency:
    def test_attempt_numbers_gapless_under_concurrent_starts(self, store):
        user = store.register_user("ann", "pw")
        numbers = []
        lock = threading.Lock()

        def work():
            for _ in range(5):
                experiment = store.start_experiment(user, "iso27001")
                with lock:
                    numbers.append(experiment.attempt_number)

        threads = [threading.Thread(target=work) for _ in range(8)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        assert sorted(numbers) == list(range(1, 41))

    def test_concurrent_merges_lose_no_leaf(self, store):
        user = store.register_user("ann", "pw")
        experiment = store.start_experiment(user, "iso27001")
        leaves = store.get_taxonomy("iso27001").leaf_ids()

        def work(chunk):
            for leaf in chunk:
                store.record_scores(experiment.experiment_id, {leaf: 2}, user)

        chunks = [leaves[i::4] for i in range(4)]
        threads = [threading.Thread(target=work, args=(chunk,)) for chunk in chunks]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        final = store.get_experiment(experiment.experiment_id, user)
        assert final.sheet == {leaf: 2 for leaf in leaves}


class TestBackupExport:
    def test_stable_order_and_full_docs(self, store):
        user, experiment = scored(store)
        store.finalize_experiment(experiment.experiment_id, user)
        docs = store.export_experiments()
        assert [doc["id"] for doc in docs] == sorted(
            (doc["id"] for doc in docs),
            key=lambda i: next(d["started_at"] for d in docs if d["id"] == i),
        )
        assert docs[0]["result"]["overall"]["achievement"] == 2.0
        assert json.dumps(docs) == json.dumps(store.export_experiments())

    def test_user_filter(self, store):
        ann, experiment = scored(store, "ann")
        scored(store, "bob")
        assert len(store.export_experiments()) == 2
        assert len(store.export_experiments(ann)) == 1
