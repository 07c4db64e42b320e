"""HTTP facade over the session engine.

Turn-based protocol for the expert console: create a session, grade the
pending question, read state or the final report. Every mutation carries a
client-supplied 1-based step index; re-submitting an already-graded step
returns the stored result with a 409 and changes nothing, so flaky
connections can retry safely. Per-session mutations are serialized behind
a lock; pools are loaded once and shared read-only.
"""

from __future__ import annotations

import math
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import httpx
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .calibration import CalibratedPool, pool_statistics
from .errors import EmptyConceptPoolError, EndpointUnreachableError, PoolExhaustedError
from .session import (
    DiagnosticReport,
    SessionStatus,
    StoppingRule,
    TestSession,
    build_report,
    start_session,
    submit_grade,
)
from .selection import FISHER, RANDOM, SelectionPolicy

DEFAULT_PROMPT = "You are an examinee and please answer the following question: {content}"


@dataclass
class ServiceConfig:
    pools: dict[str, Path] = field(default_factory=dict)
    port: int = 8000
    prompt_template: str = DEFAULT_PROMPT
    examinee_endpoint: str | None = None
    default_rule: StoppingRule = field(default_factory=StoppingRule)
    default_policy: SelectionPolicy = field(default_factory=SelectionPolicy)
    event_log_dir: Path | None = None

    def __post_init__(self):
        if "{content}" not in self.prompt_template:
            raise ValueError("prompt_template must contain the {content} placeholder")


def load_config(path, env=None) -> ServiceConfig:
    """Read a JSON config file; IRTCAT_PORT / IRTCAT_POOL env vars override."""
    import json
    import os

    env = env if env is not None else os.environ
    raw = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    pools = {name: Path(p) for name, p in (raw.get("pools") or {}).items()}
    if raw.get("pool"):
        pools.setdefault(Path(raw["pool"]).stem, Path(raw["pool"]))
    if env.get("IRTCAT_POOL"):
        pool = Path(env["IRTCAT_POOL"])
        pools[pool.stem] = pool
    rule_raw = raw.get("rule") or {}
    policy_raw = raw.get("policy") or {}
    return ServiceConfig(
        pools=pools,
        port=int(env.get("IRTCAT_PORT", raw.get("port", 8000))),
        prompt_template=raw.get("prompt_template", DEFAULT_PROMPT),
        examinee_endpoint=raw.get("examinee_endpoint"),
        default_rule=StoppingRule(
            max_length=int(rule_raw.get("max_length", 20)),
            se_threshold=float(rule_raw.get("se_threshold", 0.35)),
            min_length=int(rule_raw.get("min_length", 5)),
        ),
        default_policy=SelectionPolicy(
            kind=policy_raw.get("kind", FISHER),
            seed=policy_raw.get("seed"),
        ),
        event_log_dir=Path(raw["event_log_dir"]) if raw.get("event_log_dir") else None,
    )


def examinee_adapter(content: str, config: ServiceConfig) -> str:
    """Forward the configured prompt to the answer endpoint; return raw text.

    Never grades anything — the expert judges the returned answer.
    """
    if not config.examinee_endpoint:
        raise EndpointUnreachableError("no examinee endpoint configured")
    prompt = config.prompt_template.replace("{content}", content)
    try:
        response = httpx.post(config.examinee_endpoint, json={"prompt": prompt}, timeout=30.0)
        response.raise_for_status()
    except httpx.HTTPError as exc:
        raise EndpointUnreachableError(f"examinee endpoint failed: {exc}") from exc
    try:
        body = response.json()
    except ValueError:
        return response.text
    if isinstance(body, dict) and isinstance(body.get("answer"), str):
        return body["answer"]
    return response.text


# ---------------------------------------------------------------------------
# Wire models
# ---------------------------------------------------------------------------

class PolicyBody(BaseModel):
    kind: str = FISHER
    seed: int | None = None


class RuleBody(BaseModel):
    max_length: int = Field(default=20, ge=1)
    se_threshold: float = Field(default=0.35, gt=0)
    min_length: int = Field(default=5, ge=1)


class CreateSessionBody(BaseModel):
    pool: str | None = None
    concept: str | None = None
    policy: PolicyBody | None = None
    rule: RuleBody | None = None
    session_id: str | None = None


class GradeBody(BaseModel):
    step: int = Field(ge=1)
    correct: int = Field(ge=0, le=1)


@dataclass
class _SessionRecord:
    session: TestSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    results: dict[int, dict] = field(default_factory=dict)
    report: dict | None = None
    event_sink: object | None = None


def _json_float(value: float):
    return None if value is None or not math.isfinite(value) else value


def _question_payload(session: TestSession, pool: CalibratedPool):
    if session.pending_question is None:
        return None
    qid = session.pending_question
    return {"id": qid, "content": pool.content.get(qid)}


def _report_payload(report: DiagnosticReport) -> dict:
    return {
        "per_concept": [
            {
                "concept": row.concept,
                "theta": row.theta_hat,
                "normalized_theta": row.normalized_theta,
                "se": _json_float(row.se),
                "items_used": row.items_used,
            }
            for row in report.per_concept
        ],
        "average_theta": report.average_theta,
        "average_normalized": report.average_normalized,
        "top20_theta": report.top20_theta,
        "top50_theta": report.top50_theta,
        "top20_normalized": report.top20_normalized,
        "top50_normalized": report.top50_normalized,
        "rank_line": report.rank_line,
        "table": report.format_table(),
    }


def _state_payload(session: TestSession, pool: CalibratedPool) -> dict:
    return {
        "session_id": session.session_id,
        "pool": session.pool_ref,
        "concept": session.concept,
        "status": session.status.value,
        "stop_reason": session.stop_reason.value if session.stop_reason else None,
        "step": session.step,
        "theta": session.theta_hat if session.trajectory else 0.0,
        "se": _json_float(session.se),
        "question": _question_payload(session, pool),
        "trajectory": [
            {
                "step": est.step,
                "question_id": resp.item.question_id,
                "correct": resp.correct,
                "theta": est.theta_hat,
                "se": _json_float(est.se),
            }
            for resp, est in zip(session.responses, session.trajectory)
        ],
    }


def create_app(config: ServiceConfig, pools: dict[str, CalibratedPool] | None = None) -> FastAPI:
    """Build the service; ``pools`` may be passed directly (tests) or loaded
    from the config's paths."""
    from .datastore import EventLogWriter, load_pool

    if pools is None:
        pools = {name: load_pool(path) for name, path in config.pools.items()}
    if not pools:
        raise ValueError("the service needs at least one pool")

    app = FastAPI(title="irtcat", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])
    sessions: dict[str, _SessionRecord] = {}
    app.state.pools = pools
    app.state.sessions = sessions
    app.state.config = config

    def get_pool(name: str | None) -> tuple[str, CalibratedPool]:
        if name is None:
            if len(pools) == 1:
                return next(iter(pools.items()))
            raise HTTPException(404, "multiple pools loaded; specify one")
        if name not in pools:
            raise HTTPException(404, f"unknown pool {name!r}")
        return name, pools[name]

    def get_record(session_id: str) -> _SessionRecord:
        record = sessions.get(session_id)
        if record is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return record

    @app.get("/pools")
    def list_pools():
        return {
            "pools": [
                {
                    "name": name,
                    "items": len(pool.items),
                    "concepts": pool.concept_counts(),
                    "humans": int(pool.human_abilities.size),
                }
                for name, pool in sorted(pools.items())
            ]
        }

    @app.get("/pools/{name}")
    def pool_detail(name: str):
        name, pool = get_pool(name)
        stats = pool_statistics(pool)
        return {
            "name": name,
            "items": stats.n_items,
            "concepts": stats.per_concept,
            "alpha": stats.alpha_range,
            "beta": stats.beta_range,
            "c": stats.c_range,
            "hardest": stats.hardest,
            "easiest": stats.easiest,
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        pool_ref, pool = get_pool(body.pool)
        policy = config.default_policy
        if body.policy is not None:
            try:
                policy = SelectionPolicy(body.policy.kind, body.policy.seed)
            except ValueError as exc:
                raise HTTPException(422, str(exc))
        rule = config.default_rule
        if body.rule is not None:
            try:
                rule = StoppingRule(body.rule.max_length, body.rule.se_threshold,
                                    body.rule.min_length)
            except ValueError as exc:
                raise HTTPException(422, str(exc))
        session_id = body.session_id or uuid.uuid4().hex
        if session_id in sessions:
            raise HTTPException(409, f"session {session_id!r} already exists")
        sink = None
        if config.event_log_dir is not None:
            config.event_log_dir.mkdir(parents=True, exist_ok=True)
            sink = EventLogWriter(config.event_log_dir / f"{session_id}.jsonl")
        try:
            session, _first = start_session(
                pool, concept=body.concept, policy=policy, rule=rule,
                pool_ref=pool_ref, session_id=session_id, event_sink=sink)
        except EmptyConceptPoolError as exc:
            raise HTTPException(404, str(exc))
        except PoolExhaustedError as exc:
            raise HTTPException(409, str(exc))
        sessions[session_id] = _SessionRecord(session=session, event_sink=sink)
        return _state_payload(session, pool)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        record = get_record(session_id)
        with record.lock:
            return _state_payload(record.session, record.session.pool)

    @app.post("/sessions/{session_id}/grade")
    def grade(session_id: str, body: GradeBody):
        record = get_record(session_id)
        with record.lock:
            session = record.session
            if body.step in record.results:
                # Idempotent retry: no state change, stored result back.
                return JSONResponse(record.results[body.step], status_code=409)
            expected = session.step + 1
            if session.status is SessionStatus.STOPPED:
                raise HTTPException(409, "session already stopped")
            if body.step != expected:
                raise HTTPException(409, f"stale step index {body.step}; expected {expected}")
            outcome = submit_grade(session, body.correct, step=body.step,
                                   event_sink=record.event_sink)
            payload = _state_payload(session, session.pool)
            if isinstance(outcome, DiagnosticReport):
                report = _report_payload(outcome)
                record.report = report
                payload["report"] = report
            record.results[body.step] = payload
            return payload

    @app.get("/sessions/{session_id}/report")
    def report(session_id: str):
        record = get_record(session_id)
        with record.lock:
            session = record.session
            if session.status is not SessionStatus.STOPPED:
                raise HTTPException(409, "session has not finished")
            if record.report is None:
                record.report = _report_payload(build_report([session], session.pool))
            return record.report

    @app.post("/sessions/{session_id}/answer")
    def ask_examinee(session_id: str):
        record = get_record(session_id)
        with record.lock:
            session = record.session
            if session.status is not SessionStatus.AWAITING_GRADE or session.pending_question is None:
                raise HTTPException(409, "no question is awaiting an answer")
            content = session.pool.content.get(session.pending_question)
        if content is None:
            raise HTTPException(409, "the pending question has no stored content")
        try:
            answer = examinee_adapter(content, config)
        except EndpointUnreachableError as exc:
            # Session state untouched; the expert can paste an answer manually.
            raise HTTPException(502, str(exc))
        return {"question_id": session.pending_question, "answer": answer}

    return app


def serve(config: ServiceConfig, pools: dict[str, CalibratedPool] | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(config, pools), host="127.0.0.1", port=config.port, log_level="warning")
