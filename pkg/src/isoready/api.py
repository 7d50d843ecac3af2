"""HTTP service exposing taxonomies, sessions, scoring, and reports.

Every domain error maps to exactly one (status, code) pair, so clients
never see a 500 for a condition they caused. All endpoints speak JSON
except the export endpoint, which streams the report bytes. Mutating and
user-scoped endpoints require a bearer token from POST /api/login.

Reports on open experiments are partial-mode previews over the scores
recorded so far; finalized experiments always report from their stored
result.
"""

from __future__ import annotations

import signal
import socket
import threading
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Any, AsyncIterator

import uvicorn
from fastapi import Body, Depends, FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import AssessmentError, AuthFailure, BindFailure, InvalidInput
from .reporting import (
    export_result,
    format_2dp,
    histogram_series,
    summarize,
)
from .scoring import AssessmentResult, Mode, evaluate, result_to_dict
from .store import Experiment, SessionStore, User
from .taxonomy import taxonomy_to_dict

_STATUS_BY_CODE = {
    "InvalidInput": 400,
    "OutOfRangeScore": 400,
    "UnknownLeafId": 400,
    "MalformedDocument": 400,
    "DuplicateId": 400,
    "EmptyNode": 400,
    "AuthFailure": 401,
    "NotFound": 404,
    "AlreadyFinalized": 409,
    "IncompleteAssessment": 409,
    "DuplicateUsername": 409,
}


def _experiment_view(experiment: Experiment) -> dict[str, Any]:
    return {
        "id": experiment.experiment_id,
        "taxonomy_id": experiment.taxonomy_id,
        "taxonomy_version": experiment.taxonomy_version,
        "attempt_number": experiment.attempt_number,
        "started_at": experiment.started_at,
        "finalized_at": experiment.finalized_at,
        "status": "finalized" if experiment.is_finalized else "open",
        "sheet": dict(experiment.sheet),
        "result": result_to_dict(experiment.result) if experiment.result else None,
    }


def _result_for(experiment: Experiment, store: SessionStore) -> AssessmentResult:
    """Stored result when finalized, else a partial-mode preview."""
    if experiment.result is not None:
        return experiment.result
    taxonomy = store.get_taxonomy(experiment.taxonomy_id)
    return evaluate(taxonomy, experiment.sheet, mode=Mode.PARTIAL)


def _require_str(payload: Any, key: str) -> str:
    if not isinstance(payload, dict) or not isinstance(payload.get(key), str):
        raise InvalidInput(f"request body must carry a string {key!r} field")
    return payload[key]


def create_app(
    store: SessionStore, static_dir: str | Path | None = None
) -> FastAPI:
    """Build the API app around one store instance."""

    @asynccontextmanager
    async def lifespan(app: FastAPI) -> AsyncIterator[None]:
        yield
        store.close()

    app = FastAPI(title="isoready", lifespan=lifespan)

    @app.exception_handler(AssessmentError)
    async def _domain_error(request: Request, exc: AssessmentError) -> JSONResponse:
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(status_code=status, content=exc.to_dict())

    @app.exception_handler(RequestValidationError)
    async def _body_error(
        request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        err = InvalidInput("malformed request body or parameters")
        return JSONResponse(status_code=400, content=err.to_dict())

    def require_user(request: Request) -> User:
        header = request.headers.get("authorization", "")
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise AuthFailure("missing bearer token")
        return store.user_for_token(token)

    @app.post("/api/users", status_code=201)
    def register(payload: dict[str, Any] = Body(...)) -> dict[str, Any]:
        user = store.register_user(
            _require_str(payload, "username"), _require_str(payload, "secret")
        )
        return {
            "id": user.user_id,
            "username": user.username,
            "created_at": user.created_at,
        }

    @app.post("/api/login")
    def login(payload: dict[str, Any] = Body(...)) -> dict[str, Any]:
        token = store.authenticate(
            _require_str(payload, "username"), _require_str(payload, "secret")
        )
        return {"token": token}

    @app.get("/api/taxonomies")
    def list_taxonomies() -> dict[str, Any]:
        return {
            "taxonomies": [
                {
                    "id": taxonomy.id,
                    "title": taxonomy.title,
                    "version": taxonomy.version,
                    "counts": taxonomy.level_counts(),
                }
                for taxonomy in store.list_taxonomies()
            ]
        }

    @app.get("/api/taxonomies/{taxonomy_id}")
    def get_taxonomy(taxonomy_id: str) -> dict[str, Any]:
        return taxonomy_to_dict(store.get_taxonomy(taxonomy_id))

    @app.post("/api/experiments", status_code=201)
    def start_experiment(
        payload: dict[str, Any] = Body(...),
        user: User = Depends(require_user),
    ) -> dict[str, Any]:
        experiment = store.start_experiment(user, _require_str(payload, "taxonomy_id"))
        return _experiment_view(experiment)

    @app.get("/api/experiments/{experiment_id}")
    def get_experiment(
        experiment_id: str, user: User = Depends(require_user)
    ) -> dict[str, Any]:
        return _experiment_view(store.get_experiment(experiment_id, user))

    @app.put("/api/experiments/{experiment_id}/scores")
    def put_scores(
        experiment_id: str,
        payload: dict[str, Any] = Body(...),
        user: User = Depends(require_user),
    ) -> dict[str, Any]:
        entries = payload.get("entries") if isinstance(payload, dict) else None
        if not isinstance(entries, dict):
            raise InvalidInput('request body must carry an "entries" object')
        experiment = store.record_scores(experiment_id, entries, user)
        return _experiment_view(experiment)

    @app.post("/api/experiments/{experiment_id}/finalize")
    def finalize(
        experiment_id: str,
        payload: dict[str, Any] | None = Body(None),
        user: User = Depends(require_user),
    ) -> dict[str, Any]:
        mode = (payload or {}).get("mode", Mode.STRICT.value)
        experiment = store.finalize_experiment(experiment_id, user, mode=mode)
        return _experiment_view(experiment)

    @app.get("/api/experiments/{experiment_id}/report")
    def report(
        experiment_id: str,
        view: str = Query("summary"),
        level: str = Query("domain"),
        user: User = Depends(require_user),
    ) -> dict[str, Any]:
        experiment = store.get_experiment(experiment_id, user)
        result = _result_for(experiment, store)
        common = {
            "experiment_id": experiment.experiment_id,
            "finalized": experiment.is_finalized,
            "coverage": result.coverage,
        }
        if view == "summary":
            return {
                "view": "summary",
                **common,
                "scale_min": result.scale.min,
                "scale_max": result.scale.max,
                "summary": summarize(result).to_dict(),
            }
        if view == "histogram":
            series = histogram_series(result, level)
            return {
                "view": "histogram",
                **common,
                "scale_min": result.scale.min,
                "scale_max": result.scale.max,
                "level": series.level,
                "bars": [bar.to_dict() for bar in series.bars],
            }
        raise InvalidInput(f"report view must be summary or histogram, got {view!r}")

    @app.get("/api/users/me/history")
    def history(
        taxonomy: str | None = Query(None),
        user: User = Depends(require_user),
    ) -> dict[str, Any]:
        view = store.history(user, taxonomy)
        rows = []
        for row in view.rows:
            data = row.to_dict()
            data["overall_display"] = format_2dp(row.overall)
            rows.append(data)
        return {"taxonomy_id": taxonomy, "rows": rows, "trend": list(view.trend)}

    @app.get("/api/experiments/{experiment_id}/export")
    def export(
        experiment_id: str,
        format: str = Query("json"),
        user: User = Depends(require_user),
    ) -> Response:
        experiment = store.get_experiment(experiment_id, user)
        result = _result_for(experiment, store)
        body = export_result(result, format)
        media = "text/csv; charset=utf-8" if format == "csv" else "application/json"
        disposition = f'attachment; filename="experiment-{experiment_id}.{format}"'
        return Response(
            content=body,
            media_type=media,
            headers={"Content-Disposition": disposition},
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve(
    store: SessionStore,
    host: str = "127.0.0.1",
    port: int = 8000,
    static_dir: str | Path | None = None,
) -> None:
    """Run the API on a pre-bound socket until interrupted."""
    app = create_app(store, static_dir=static_dir)
    family = socket.AF_INET6 if ":" in host else socket.AF_INET
    sock = socket.socket(family, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
    except OSError as exc:
        sock.close()
        raise BindFailure(f"cannot bind {host}:{port} ({exc.strerror})") from exc
    config = uvicorn.Config(app, log_level="warning")
    server = uvicorn.Server(config)
    # uvicorn re-raises a caught SIGTERM once shutdown finishes; a no-op
    # handler lets that replay through so the process still exits 0.
    in_main = threading.current_thread() is threading.main_thread()
    previous = (
        signal.signal(signal.SIGTERM, lambda signum, frame: None)
        if in_main
        else None
    )
    try:
        server.run(sockets=[sock])
    finally:
        if in_main:
            signal.signal(signal.SIGTERM, previous)
        sock.close()
