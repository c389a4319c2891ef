"""HTTP workbench for the rule-editing loop.

One process serves one model bundle (episodes + trained encoder + tuned
threshold).  Clients open edit sessions, add/delete/modify rules, preview a
rule against a concrete example, and re-run the episodic evaluation to see
per-relation deltas against the unedited baseline.

Mutations are serialized per session behind a lock; evaluation works on an
immutable copy of the session taken at request time, so a long evaluation
never observes a half-applied edit.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

from fastapi import Body, FastAPI
from fastapi.exceptions import HTTPException, RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .corpus import CorpusError, RelationInstance, instance_from_json, mark_entities
from .encoder import CachedEmbedder, HashedEncoder, similarity
from .evaluation import EvalSetup, Metrics, run_evaluation
from .matching import matches
from .rules import ParseError, parse_rule
from .session import (
    DuplicateRuleError,
    EditSession,
    UnknownRuleError,
    base_snapshot,
)
from .sieve import Episode, Mode, SieveConfig, load_episodes


class WorkbenchBundle:
    """Everything the service needs, loaded once at startup."""

    def __init__(
        self,
        episodes: list[Episode],
        embedder,
        mode: Mode = Mode.HYBRID,
        threshold: float = 0.5,
    ):
        self.episodes = episodes
        self.embedder = embedder
        self.mode = mode
        self.threshold = threshold
        self.base = base_snapshot(episodes)
        self.relations = sorted({r for ep in episodes for r in ep.relations()})
        self.instances: dict[str, RelationInstance] = {}
        for ep in episodes:
            self.instances[ep.query.key()] = ep.query
            for sup in ep.supports:
                self.instances[sup.key()] = sup
        self._baselines: dict[tuple, object] = {}
        self._baseline_lock = threading.Lock()

    @classmethod
    def load(cls, bundle_dir) -> "WorkbenchBundle":
        base = Path(bundle_dir)
        config = json.loads((base / "config.json").read_text())
        encoder = HashedEncoder.load(base / "model.npz")
        episodes = load_episodes(base / "episodes.jsonl")
        return cls(
            episodes=episodes,
            embedder=CachedEmbedder(encoder),
            mode=Mode(config.get("mode", "hybrid")),
            threshold=float(config.get("threshold", 0.5)),
        )

    def baseline(self, cfg: SieveConfig):
        """Evaluation of the unedited rule set, cached per (mode, t)."""
        key = (cfg.mode.value, cfg.threshold)
        with self._baseline_lock:
            if key not in self._baselines:
                clean = SieveConfig(mode=cfg.mode, threshold=cfg.threshold)
                session = EditSession(id="baseline", base=self.base)
                setup = EvalSetup(cfg=clean, embedder=self.embedder,
                                  rules_for=session.rules_for_episode)
                self._baselines[key] = run_evaluation(self.episodes, setup)
            return self._baselines[key]


class SessionStore:
    """In-memory sessions with optional JSON persistence per session."""

    def __init__(self, persist_dir=None):
        self.persist_dir = Path(persist_dir) if persist_dir else None
        self._sessions: dict[str, EditSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry = threading.Lock()
        if self.persist_dir is not None:
            self.persist_dir.mkdir(parents=True, exist_ok=True)
            for path in sorted(self.persist_dir.glob("*.json")):
                session = EditSession.load(path)
                self._sessions[session.id] = session
                self._locks[session.id] = threading.Lock()

    def create(self, base, session_id: str | None = None) -> EditSession:
        with self._registry:
            sid = session_id or uuid.uuid4().hex[:12]
            if sid in self._sessions:
                raise KeyError(sid)
            session = EditSession(id=sid, base=list(base))
            self._sessions[sid] = session
            self._locks[sid] = threading.Lock()
        self.persist(session)
        return session

    def get(self, session_id: str) -> EditSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def lock(self, session_id: str) -> threading.Lock:
        return self._locks[session_id]

    def list(self) -> list[EditSession]:
        return list(self._sessions.values())

    def persist(self, session: EditSession) -> None:
        if self.persist_dir is not None:
            session.save(self.persist_dir / f"{session.id}.json")


def _metrics_json(m: Metrics) -> dict:
    return {
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "predicted_positive": m.predicted_positive,
        "gold_positive": m.gold_positive,
        "correct_positive": m.correct_positive,
    }


def _error(status: int, message: str, **extra):
    return HTTPException(status_code=status, detail={"error": message, **extra})


def _session_or_404(store: SessionStore, session_id: str) -> EditSession:
    try:
        return store.get(session_id)
    except KeyError:
        raise _error(404, f"unknown session: {session_id}")


def create_app(bundle: WorkbenchBundle, store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="rule workbench", version="0.1.0")
    store = store if store is not None else SessionStore()
    # The browser workbench may be served from a different origin (static
    # file server or file://); the API itself is origin-agnostic.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(HTTPException)
    async def _http_error(request, exc: HTTPException):
        body = exc.detail if isinstance(exc.detail, dict) else {"error": str(exc.detail)}
        return JSONResponse(status_code=exc.status_code, content=body)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/relations")
    def relations():
        return {
            "relations": bundle.relations,
            "mode": bundle.mode.value,
            "threshold": bundle.threshold,
            "episodes": len(bundle.episodes),
            "version": None,
        }

    @app.get("/sessions")
    def list_sessions():
        return {
            "sessions": [
                {
                    "id": s.id,
                    "version": s.version,
                    "edits": len(s.log),
                    "created": s.created,
                    "updated": s.updated,
                }
                for s in store.list()
            ],
            "version": None,
        }

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(default={})):
        session_id = payload.get("id")
        if session_id is not None and not isinstance(session_id, str):
            raise _error(400, "session id must be a string")
        try:
            session = store.create(bundle.base, session_id)
        except KeyError:
            raise _error(409, f"session already exists: {session_id}")
        return {
            "id": session.id,
            "version": session.version,
            "created": session.created,
            "updated": session.updated,
        }

    @app.get("/sessions/{session_id}/rules")
    def list_rules(session_id: str):
        session = _session_or_404(store, session_id)
        with store.lock(session_id):
            return {
                "version": session.version,
                "rules": [e.to_json() for e in session.state()],
                "overrides": dict(session.overrides),
            }

    @app.post("/sessions/{session_id}/rules", status_code=201)
    def add_rule(session_id: str, payload: dict = Body(...)):
        session = _session_or_404(store, session_id)
        relation = payload.get("relation")
        text = payload.get("text")
        if not isinstance(relation, str) or not isinstance(text, str):
            raise _error(400, "payload must provide 'relation' and 'text' strings")
        if relation not in bundle.relations:
            raise _error(400, f"unknown relation: {relation}")
        with store.lock(session_id):
            try:
                rule_id = session.add_rule(relation, text)
            except ParseError as exc:
                raise _error(400, str(exc), offset=exc.offset)
            except DuplicateRuleError as exc:
                raise _error(409, str(exc), existing_id=exc.existing_id)
            store.persist(session)
            return {
                "version": session.version,
                "rule_id": rule_id,
                "rule": session.entry(rule_id).to_json(),
            }

    @app.delete("/sessions/{session_id}/rules/{rule_id}")
    def delete_rule(session_id: str, rule_id: str):
        session = _session_or_404(store, session_id)
        with store.lock(session_id):
            try:
                session.delete_rule(rule_id)
            except UnknownRuleError:
                raise _error(404, f"unknown rule: {rule_id}")
            store.persist(session)
            return {"version": session.version, "rule": session.entry(rule_id).to_json()}

    @app.put("/sessions/{session_id}/rules/{rule_id}")
    def modify_rule(session_id: str, rule_id: str, payload: dict = Body(...)):
        session = _session_or_404(store, session_id)
        text = payload.get("text")
        if not isinstance(text, str):
            raise _error(400, "payload must provide a 'text' string")
        with store.lock(session_id):
            try:
                session.modify_rule(rule_id, text)
            except UnknownRuleError:
                raise _error(404, f"unknown rule: {rule_id}")
            except ParseError as exc:
                raise _error(400, str(exc), offset=exc.offset)
            store.persist(session)
            return {"version": session.version, "rule": session.entry(rule_id).to_json()}

    @app.put("/sessions/{session_id}/overrides")
    def set_override(session_id: str, payload: dict = Body(...)):
        session = _session_or_404(store, session_id)
        relation = payload.get("relation")
        if not isinstance(relation, str) or relation not in bundle.relations:
            raise _error(400, f"unknown relation: {relation}")
        threshold = payload.get("threshold")
        if threshold is not None and not isinstance(threshold, (int, float)):
            raise _error(400, "threshold must be a number or null")
        with store.lock(session_id):
            try:
                session.set_override(relation, None if threshold is None else float(threshold))
            except ValueError as exc:
                raise _error(400, str(exc))
            store.persist(session)
            return {"version": session.version, "overrides": dict(session.overrides)}

    @app.post("/sessions/{session_id}/evaluate")
    def evaluate(session_id: str, payload: dict = Body(default={})):
        session = _session_or_404(store, session_id)
        try:
            mode = Mode(payload.get("mode", bundle.mode.value))
        except ValueError:
            raise _error(400, f"unknown mode: {payload.get('mode')}")
        threshold = payload.get("threshold", bundle.threshold)
        if not isinstance(threshold, (int, float)) or not 0.0 <= float(threshold) <= 1.0:
            raise _error(400, "threshold must be a number in [0, 1]")
        extra = payload.get("overrides", {})
        if not isinstance(extra, dict):
            raise _error(400, "overrides must be a mapping of relation to threshold")

        with store.lock(session_id):  # immutable snapshot of the session
            snapshot = EditSession.from_json(session.to_json())
        overrides = dict(snapshot.overrides)
        for rel, value in extra.items():
            if rel not in bundle.relations:
                raise _error(400, f"unknown relation in overrides: {rel}")
            if not isinstance(value, (int, float)) or not 0.0 <= float(value) <= 1.0:
                raise _error(400, f"override for {rel} must be a number in [0, 1]")
            overrides[rel] = float(value)

        cfg = SieveConfig(mode=mode, threshold=float(threshold), overrides=overrides)
        setup = EvalSetup(cfg=cfg, embedder=bundle.embedder,
                          rules_for=snapshot.rules_for_episode)
        report = run_evaluation(bundle.episodes, setup)
        base_report = bundle.baseline(cfg)

        empty = Metrics.from_counts(0, 0, 0)
        names = sorted(set(report.per_relation) | set(base_report.per_relation))
        deltas = {}
        for rel in names:
            now = report.per_relation.get(rel, empty)
            was = base_report.per_relation.get(rel, empty)
            deltas[rel] = {
                "precision": now.precision - was.precision,
                "recall": now.recall - was.recall,
                "f1": now.f1 - was.f1,
            }
        return {
            "version": snapshot.version,
            "mode": mode.value,
            "threshold": float(threshold),
            "overrides": overrides,
            "overall": _metrics_json(report.overall),
            "per_relation": {r: _metrics_json(m) for r, m in report.per_relation.items()},
            "baseline_overall": _metrics_json(base_report.overall),
            "baseline_per_relation": {r: _metrics_json(m) for r, m in base_report.per_relation.items()},
            "deltas": deltas,
            "overall_delta": {
                "precision": report.overall.precision - base_report.overall.precision,
                "recall": report.overall.recall - base_report.overall.recall,
                "f1": report.overall.f1 - base_report.overall.f1,
            },
        }

    @app.post("/preview")
    def preview(payload: dict = Body(...)):
        text = payload.get("rule")
        if not isinstance(text, str):
            raise _error(400, "payload must provide a 'rule' string")
        try:
            rule = parse_rule(text)
        except ParseError as exc:
            raise _error(400, str(exc), offset=exc.offset)

        if "instance_id" in payload:
            inst = bundle.instances.get(payload["instance_id"])
            if inst is None:
                raise _error(404, f"unknown instance: {payload['instance_id']}")
        elif "instance" in payload:
            try:
                inst = instance_from_json(payload["instance"])
            except (CorpusError, KeyError, TypeError, ValueError) as exc:
                raise _error(400, f"invalid instance: {exc}")
        else:
            raise _error(400, "payload must provide 'instance' or 'instance_id'")

        result = matches(rule, inst)
        marked = mark_entities(inst)
        return {
            "strict": {
                "matched": result.matched,
                "path": list(result.path) if result.path else [],
                "edges": [[h, d, lab] for h, d, lab in result.edges] if result.edges else [],
                "interval": list(result.interval) if result.interval else None,
            },
            "similarity": similarity(bundle.embedder, text, marked),
            "marked": marked,
            "version": None,
        }

    return app


def serve(bundle_dir, host: str = "127.0.0.1", port: int = 8000, persist_dir=None):
    """Blocking uvicorn server over a bundle directory; returns on shutdown.

    Binds before serving (port 0 picks an ephemeral port) and announces the
    bound address as JSON on stdout so harnesses can discover it.
    """
    import socket

    import uvicorn

    bundle = WorkbenchBundle.load(bundle_dir)
    app = create_app(bundle, SessionStore(persist_dir))
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    bound_host, bound_port = sock.getsockname()[:2]
    print(json.dumps({"address": f"http://{bound_host}:{bound_port}"}), flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
