"""HTTP service exposing the pipeline to the reporter UI.

Request handling is stateless over the persistent store: sessions are loaded
from disk on every request and saved back after each mutation, so restarts
lose nothing. Analysis data is immutable once written and cached per app.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse, Response

from .actions import ACTION_ORDER, Action, parse_action_kind
from .autocomplete import (
    NOT_IN_LIST_LABEL,
    AutocompleteEngine,
    Session,
    Suggestion,
    resolution_from_dict,
)
from .errors import (
    BundleFormatError,
    FusionError,
    GapError,
    IntegrityError,
    ModelFormatError,
    NotFoundError,
    ParseError,
    SessionClosedError,
    StaleSuggestionError,
    ValidationError,
)
from .report import BugReport, finalize, render_html
from .store import Store, sniff_media_type

_ERROR_CODES = (
    (NotFoundError, "not_found", 404),
    ((SessionClosedError, StaleSuggestionError), "conflict", 409),
    ((ValidationError, BundleFormatError, ParseError, ModelFormatError, GapError), "validation", 400),
    (IntegrityError, "integrity", 500),
)


def _classify(exc: FusionError) -> tuple[str, int]:
    for types, code, status in _ERROR_CODES:
        if isinstance(exc, types):
            return code, status
    return "internal", 500


def _suggestion_row(suggestion) -> dict:
    if isinstance(suggestion, Suggestion):
        return {
            "not_in_list": False,
            "screen_key": suggestion.screen_key,
            "component_id": suggestion.component_id,
            "object_index": suggestion.object_index,
            "component_type": suggestion.component_type,
            "text": suggestion.text,
            "relative_location": suggestion.relative_location.value,
            "relative_location_label": suggestion.relative_location.label,
            "component_image": suggestion.component_image,
            "option_ordinal": suggestion.option_ordinal,
        }
    return {"not_in_list": True, "label": NOT_IN_LIST_LABEL}


class _AppContext:
    """Per-service shared state: engine cache and per-session write locks."""

    def __init__(self, store: Store):
        self.store = store
        self._engines: dict[str, AutocompleteEngine] = {}
        self._engines_guard = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def engine(self, app_id: str) -> AutocompleteEngine:
        with self._engines_guard:
            engine = self._engines.get(app_id)
            if engine is None:
                universe, graph = self.store.load_analysis(app_id)
                engine = AutocompleteEngine(universe, graph)
                self._engines[app_id] = engine
            return engine

    def session_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._session_locks.get(session_id)
            if lock is None:
                lock = threading.Lock()
                self._session_locks[session_id] = lock
            return lock

    def load_session(self, session_id: str) -> tuple[Session, AutocompleteEngine]:
        doc = self.store.load_session_doc(session_id)
        session = Session.from_dict(doc)
        return session, self.engine(session.app_id)


def create_app(store: Store, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(
        title="fusion",
        version="0.1.0",
        description="Auto-completed bug reproduction steps over a mined GUI event-flow model",
        openapi_url="/api/openapi.json",
    )
    ctx = _AppContext(store)

    @app.exception_handler(FusionError)
    async def fusion_error_handler(request: Request, exc: FusionError):
        code, status = _classify(exc)
        return JSONResponse(
            status_code=status,
            content={"code": code, "message": str(exc), "detail": {}},
        )

    @app.get("/api/apps")
    def list_apps():
        return {"apps": store.list_apps()}

    @app.post("/api/apps/{app_id}/sessions")
    def open_session(app_id: str, metadata: dict = Body(...)):
        engine = ctx.engine(app_id)
        session = engine.open_session(metadata)
        store.save_session(session)
        return {"session_id": session.session_id, "app_id": app_id,
                "candidate_screens": sorted(session.candidate_screens)}

    @app.get("/api/sessions/{session_id}/actions")
    def suggest_actions(session_id: str):
        session, engine = ctx.load_session(session_id)
        kinds = engine.suggest_actions(session)
        return {"actions": [k.value for k in kinds],
                "all_actions": [k.value for k in ACTION_ORDER]}

    @app.get("/api/sessions/{session_id}/components")
    def suggest_components(session_id: str, action: str):
        session, engine = ctx.load_session(session_id)
        kind = parse_action_kind(action)
        rows = engine.suggest_components(session, kind)
        return {
            "action": kind.value,
            "components": [_suggestion_row(r) for r in rows],
            "manual_component_types": sorted(engine.universe.type_set),
        }

    @app.get("/api/sessions/{session_id}/confirmations")
    def confirmations(session_id: str, component: str, index: int = 0):
        session, engine = ctx.load_session(session_id)
        shots = engine.confirmation_screenshots(session, (component, index))
        return {
            "confirmations": [
                {"screen_key": s.screen_key, "screenshot": s.screenshot} for s in shots
            ]
        }

    def _steps_payload(session: Session) -> dict:
        return {
            "session_id": session.session_id,
            "steps": [s.to_dict() for s in session.history],
            "candidate_screens": sorted(session.candidate_screens),
            "closed": session.closed,
        }

    @app.post("/api/sessions/{session_id}/steps")
    def commit_step(session_id: str, payload: dict = Body(...)):
        with ctx.session_lock(session_id):
            session, engine = ctx.load_session(session_id)
            if "action" not in payload or "resolution" not in payload:
                raise ValidationError("step payload needs 'action' and 'resolution'")
            action = Action.from_dict(payload["action"])
            resolution = resolution_from_dict(payload["resolution"])
            engine.commit_step(session, action, resolution, payload.get("user_note"))
            store.save_session(session)
            return _steps_payload(session)

    @app.delete("/api/sessions/{session_id}/steps/last")
    def undo_last_step(session_id: str):
        with ctx.session_lock(session_id):
            session, engine = ctx.load_session(session_id)
            engine.undo_last_step(session)
            store.save_session(session)
            return _steps_payload(session)

    @app.post("/api/sessions/{session_id}/finalize")
    def finalize_session(session_id: str):
        with ctx.session_lock(session_id):
            session, _ = ctx.load_session(session_id)
            report = finalize(session, store)
            return {"report_id": report.report_id, "app_id": report.app_id,
                    "gap_free": report.gap_free}

    @app.get("/api/apps/{app_id}/reports/{report_id}")
    def get_report(app_id: str, report_id: int):
        return store.load_report(app_id, report_id)

    @app.get("/api/apps/{app_id}/reports/{report_id}/html")
    def get_report_html(app_id: str, report_id: int):
        doc = store.load_report(app_id, report_id)
        report = BugReport.from_dict(doc)
        engine = ctx.engine(app_id)
        page = render_html(report, engine.universe, engine.graph)
        return HTMLResponse(page)

    @app.get("/api/blobs/{digest}")
    def get_blob(digest: str):
        content = store.get_blob(digest)
        return Response(
            content=content,
            media_type=sniff_media_type(content),
            headers={
                "Cache-Control": "public, max-age=31536000, immutable",
                "ETag": f'"{digest}"',
            },
        )

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
