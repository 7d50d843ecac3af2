"""User accounts and the persisted experiment track record.

All state lives in one append-only JSONL file. Every mutation appends the
full document it touched and fsyncs before returning, so recovery is a
last-wins replay of the log. A crash can tear the final line; that line is
dropped on load, while malformed lines anywhere else are treated as
corruption. The log is rewritten in place once it grows well past the live
document count.

Session tokens live only in process memory; restarting the server signs
everyone out.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import secrets
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable, Mapping
from uuid import uuid4

from .errors import (
    AlreadyFinalized,
    AuthFailure,
    DuplicateUsername,
    InvalidInput,
    NotFound,
    StoreOpenFailure,
)
from .scoring import (
    AssessmentResult,
    Mode,
    ScoreSheet,
    evaluate,
    result_from_dict,
    result_to_dict,
    validate_scores,
)
from .taxonomy import Taxonomy, builtin_iso27001

_PBKDF2_ITERATIONS = 120_000


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


def hash_secret(secret: str) -> str:
    """Salted PBKDF2 record in the form ``pbkdf2-sha256$iter$salt$hash``."""
    salt = os.urandom(16)
    digest = hashlib.pbkdf2_hmac(
        "sha256", secret.encode("utf-8"), salt, _PBKDF2_ITERATIONS
    )
    return f"pbkdf2-sha256${_PBKDF2_ITERATIONS}${salt.hex()}${digest.hex()}"


def verify_secret(secret: str, record: str) -> bool:
    try:
        scheme, iterations, salt_hex, digest_hex = record.split("$")
        if scheme != "pbkdf2-sha256":
            return False
        candidate = hashlib.pbkdf2_hmac(
            "sha256", secret.encode("utf-8"), bytes.fromhex(salt_hex), int(iterations)
        )
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(candidate.hex(), digest_hex)


@lru_cache(maxsize=1)
def _dummy_record() -> str:
    """Stand-in credential so unknown usernames cost a real verification."""
    return hash_secret(secrets.token_hex(16))


@dataclass(frozen=True)
class User:
    user_id: str
    username: str
    credential: str
    created_at: str

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.user_id,
            "username": self.username,
            "credential": self.credential,
            "created_at": self.created_at,
        }

    @classmethod
    def from_doc(cls, raw: Mapping[str, Any]) -> "User":
        return cls(
            user_id=raw["id"],
            username=raw["username"],
            credential=raw["credential"],
            created_at=raw["created_at"],
        )


@dataclass(frozen=True)
class Experiment:
    """One assessment attempt: sheet plus, once finalized, its result."""

    experiment_id: str
    user_id: str
    taxonomy_id: str
    taxonomy_version: str
    attempt_number: int
    started_at: str
    sheet: ScoreSheet = field(default_factory=dict)
    finalized_at: str | None = None
    result: AssessmentResult | None = None

    @property
    def is_finalized(self) -> bool:
        return self.finalized_at is not None

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.experiment_id,
            "user_id": self.user_id,
            "taxonomy_id": self.taxonomy_id,
            "taxonomy_version": self.taxonomy_version,
            "attempt_number": self.attempt_number,
            "started_at": self.started_at,
            "finalized_at": self.finalized_at,
            "sheet": dict(self.sheet),
            "result": result_to_dict(self.result) if self.result else None,
        }

    @classmethod
    def from_doc(cls, raw: Mapping[str, Any]) -> "Experiment":
        result = raw.get("result")
        return cls(
            experiment_id=raw["id"],
            user_id=raw["user_id"],
            taxonomy_id=raw["taxonomy_id"],
            taxonomy_version=raw["taxonomy_version"],
            attempt_number=raw["attempt_number"],
            started_at=raw["started_at"],
            sheet={k: int(v) for k, v in raw["sheet"].items()},
            finalized_at=raw.get("finalized_at"),
            result=result_from_dict(result) if result else None,
        )


@dataclass(frozen=True)
class HistoryRow:
    attempt_number: int
    experiment_id: str
    taxonomy_id: str
    started_at: str
    finalized_at: str
    duration_seconds: float
    overall: float
    predicate: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "attempt_number": self.attempt_number,
            "experiment_id": self.experiment_id,
            "taxonomy_id": self.taxonomy_id,
            "started_at": self.started_at,
            "finalized_at": self.finalized_at,
            "duration_seconds": self.duration_seconds,
            "overall": self.overall,
            "predicate": self.predicate,
        }


@dataclass(frozen=True)
class HistoryView:
    """Finalized attempts in order, plus the overall-achievement trend."""

    rows: tuple[HistoryRow, ...]
    trend: tuple[float, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "rows": [row.to_dict() for row in self.rows],
            "trend": list(self.trend),
        }


class SessionStore:
    """Single-writer, multi-reader store for users and experiments."""

    def __init__(
        self,
        path: str | os.PathLike[str],
        taxonomies: Iterable[Taxonomy] | None = None,
        compact_threshold: int = 1024,
    ) -> None:
        self._path = Path(path)
        self._lock = threading.RLock()
        self._compact_threshold = compact_threshold
        self._users: dict[str, User] = {}
        self._names: dict[str, str] = {}
        self._experiments: dict[str, Experiment] = {}
        self._tokens: dict[str, str] = {}
        self._taxonomies: dict[str, Taxonomy] = {}
        self._line_count = 0
        self._load()
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self._path, "ab")
        for taxonomy in taxonomies if taxonomies is not None else (builtin_iso27001(),):
            self.register_taxonomy(taxonomy)

    # -- persistence ----------------------------------------------------

    def _load(self) -> None:
        try:
            raw = self._path.read_bytes()
        except FileNotFoundError:
            return
        lines = raw.split(b"\n")
        if lines and lines[-1] == b"":
            lines.pop()
        for index, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                self._apply(record)
            except (ValueError, KeyError, TypeError) as exc:
                if index == len(lines) - 1:
                    break
                raise StoreOpenFailure(
                    f"corrupt record at line {index + 1} of {self._path}"
                ) from exc
            self._line_count += 1

    def _apply(self, record: Mapping[str, Any]) -> None:
        kind = record["kind"]
        doc = record["doc"]
        if kind == "user":
            user = User.from_doc(doc)
            self._users[user.user_id] = user
            self._names[user.username] = user.user_id
        elif kind == "experiment":
            experiment = Experiment.from_doc(doc)
            self._experiments[experiment.experiment_id] = experiment
        else:
            raise StoreOpenFailure(f"unknown record kind {kind!r}")

    def _append(self, kind: str, doc: Mapping[str, Any]) -> None:
        line = json.dumps(
            {"kind": kind, "doc": doc}, separators=(",", ":"), ensure_ascii=False
        )
        self._fh.write(line.encode("utf-8") + b"\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._line_count += 1
        live = len(self._users) + len(self._experiments)
        if self._line_count >= self._compact_threshold and self._line_count >= 2 * live:
            self.compact()

    def compact(self) -> None:
        """Rewrite the log with one line per live document."""
        with self._lock:
            tmp = self._path.with_suffix(self._path.suffix + ".tmp")
            count = 0
            with open(tmp, "wb") as fh:
                for user_id in sorted(self._users):
                    record = {"kind": "user", "doc": self._users[user_id].to_doc()}
                    fh.write(json.dumps(record, separators=(",", ":")).encode() + b"\n")
                    count += 1
                for experiment_id in sorted(self._experiments):
                    record = {
                        "kind": "experiment",
                        "doc": self._experiments[experiment_id].to_doc(),
                    }
                    fh.write(json.dumps(record, separators=(",", ":")).encode() + b"\n")
                    count += 1
                fh.flush()
                os.fsync(fh.fileno())
            self._fh.close()
            os.replace(tmp, self._path)
            self._sync_parent_dir()
            self._fh = open(self._path, "ab")
            self._line_count = count

    def _sync_parent_dir(self) -> None:
        try:
            fd = os.open(self._path.parent, os.O_RDONLY)
        except OSError:
            return
        try:
            os.fsync(fd)
        except OSError:
            pass
        finally:
            os.close(fd)

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()

    def __enter__(self) -> "SessionStore":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    # -- taxonomies -----------------------------------------------------

    def register_taxonomy(self, taxonomy: Taxonomy) -> None:
        with self._lock:
            self._taxonomies[taxonomy.id] = taxonomy

    def get_taxonomy(self, taxonomy_id: str) -> Taxonomy:
        with self._lock:
            taxonomy = self._taxonomies.get(taxonomy_id)
        if taxonomy is None:
            raise NotFound(f"taxonomy {taxonomy_id!r} not found")
        return taxonomy

    def list_taxonomies(self) -> list[Taxonomy]:
        with self._lock:
            return [self._taxonomies[key] for key in sorted(self._taxonomies)]

    # -- users and sessions ----------------------------------------------

    def register_user(self, username: str, secret: str) -> User:
        if not username or not username.strip():
            raise InvalidInput("username must be non-empty")
        if not secret:
            raise InvalidInput("secret must be non-empty")
        credential = hash_secret(secret)
        with self._lock:
            if username in self._names:
                raise DuplicateUsername(f"username {username!r} is taken")
            user = User(
                user_id=uuid4().hex,
                username=username,
                credential=credential,
                created_at=_utc_now().isoformat(),
            )
            self._append("user", user.to_doc())
            self._users[user.user_id] = user
            self._names[username] = user.user_id
        return user

    def authenticate(self, username: str, secret: str) -> str:
        with self._lock:
            user_id = self._names.get(username)
            record = self._users[user_id].credential if user_id else _dummy_record()
        # Verification runs outside the lock: key stretching is slow on purpose.
        if not verify_secret(secret, record) or user_id is None:
            raise AuthFailure("invalid username or secret")
        token = secrets.token_urlsafe(32)
        with self._lock:
            self._tokens[token] = user_id
        return token

    def user_for_token(self, token: str) -> User:
        with self._lock:
            user_id = self._tokens.get(token)
            if user_id is None:
                raise AuthFailure("invalid or expired token")
            return self._users[user_id]

    def user_by_name(self, username: str) -> User:
        with self._lock:
            user_id = self._names.get(username)
            if user_id is None:
                raise NotFound(f"user {username!r} not found")
            return self._users[user_id]

    # -- experiments ------------------------------------------------------

    def start_experiment(self, user: User, taxonomy_id: str) -> Experiment:
        with self._lock:
            taxonomy = self.get_taxonomy(taxonomy_id)
            attempt = 1 + max(
                (
                    e.attempt_number
                    for e in self._experiments.values()
                    if e.user_id == user.user_id and e.taxonomy_id == taxonomy_id
                ),
                default=0,
            )
            experiment = Experiment(
                experiment_id=uuid4().hex,
                user_id=user.user_id,
                taxonomy_id=taxonomy_id,
                taxonomy_version=taxonomy.version,
                attempt_number=attempt,
                started_at=_utc_now().isoformat(),
            )
            self._append("experiment", experiment.to_doc())
            self._experiments[experiment.experiment_id] = experiment
        return experiment

    def _owned(self, experiment_id: str, user: User) -> Experiment:
        experiment = self._experiments.get(experiment_id)
        if experiment is None or experiment.user_id != user.user_id:
            raise NotFound(f"experiment {experiment_id!r} not found")
        return experiment

    def get_experiment(self, experiment_id: str, user: User) -> Experiment:
        with self._lock:
            return self._owned(experiment_id, user)

    def record_scores(
        self, experiment_id: str, entries: Mapping[str, int], user: User
    ) -> Experiment:
        """Merge ``entries`` into the sheet; last write per leaf wins."""
        with self._lock:
            experiment = self._owned(experiment_id, user)
            if experiment.is_finalized:
                raise AlreadyFinalized(
                    f"experiment {experiment_id!r} is already finalized"
                )
            taxonomy = self.get_taxonomy(experiment.taxonomy_id)
            validate_scores(entries, set(taxonomy.leaf_ids()), taxonomy.scale)
            merged = dict(experiment.sheet)
            merged.update(entries)
            updated = replace(experiment, sheet=merged)
            self._append("experiment", updated.to_doc())
            self._experiments[experiment_id] = updated
        return updated

    def finalize_experiment(
        self, experiment_id: str, user: User, mode: Mode | str = Mode.STRICT
    ) -> Experiment:
        with self._lock:
            experiment = self._owned(experiment_id, user)
            if experiment.is_finalized:
                raise AlreadyFinalized(
                    f"experiment {experiment_id!r} is already finalized"
                )
            taxonomy = self.get_taxonomy(experiment.taxonomy_id)
            result = evaluate(taxonomy, experiment.sheet, mode=mode)
            finalized = _utc_now()
            started = datetime.fromisoformat(experiment.started_at)
            if finalized < started:  # wall clock stepped backwards
                finalized = started
            updated = replace(
                experiment, finalized_at=finalized.isoformat(), result=result
            )
            self._append("experiment", updated.to_doc())
            self._experiments[experiment_id] = updated
        return updated

    def history(self, user: User, taxonomy_id: str | None = None) -> HistoryView:
        with self._lock:
            done = [
                e
                for e in self._experiments.values()
                if e.user_id == user.user_id
                and e.is_finalized
                and (taxonomy_id is None or e.taxonomy_id == taxonomy_id)
            ]
        done.sort(key=lambda e: (e.taxonomy_id, e.attempt_number))
        rows = []
        for experiment in done:
            assert experiment.result is not None and experiment.finalized_at is not None
            duration = (
                datetime.fromisoformat(experiment.finalized_at)
                - datetime.fromisoformat(experiment.started_at)
            ).total_seconds()
            rows.append(
                HistoryRow(
                    attempt_number=experiment.attempt_number,
                    experiment_id=experiment.experiment_id,
                    taxonomy_id=experiment.taxonomy_id,
                    started_at=experiment.started_at,
                    finalized_at=experiment.finalized_at,
                    duration_seconds=duration,
                    overall=experiment.result.overall.achievement,
                    predicate=experiment.result.overall.predicate,
                )
            )
        return HistoryView(
            rows=tuple(rows), trend=tuple(row.overall for row in rows)
        )

    def export_experiments(self, user: User | None = None) -> list[dict[str, Any]]:
        """Raw experiment documents for backup, in a stable order."""
        with self._lock:
            docs = [
                e.to_doc()
                for e in self._experiments.values()
                if user is None or e.user_id == user.user_id
            ]
        docs.sort(key=lambda doc: (doc["started_at"], doc["id"]))
        return docs
