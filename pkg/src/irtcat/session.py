"""The interactive adaptive-test loop.

A session alternates selection -> grading -> re-estimation until the
stopping rule fires, then folds into a diagnostic report comparable with
the calibrated human population. The state machine only ever moves
AWAITING_GRADE -> (grade accepted) -> AWAITING_GRADE | STOPPED; the ability
estimate starts at the population mean (0 after standardization).

Sessions are deterministic given (pool, policy, rule, grades), which is
what makes the append-only event log replayable bit-for-bit.
"""

from __future__ import annotations

import math
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .ability import AbilityEstimate, GradedResponse, estimate_ability
from .calibration import CalibratedPool
from .errors import (
    CorruptLogError,
    PoolExhaustedError,
    SessionNotFinishedError,
    SessionStoppedError,
    WrongStateError,
)
from .selection import CandidateSet, SelectionPolicy, select_next


class SessionStatus(Enum):
    ACTIVE = "active"
    AWAITING_GRADE = "awaiting_grade"
    STOPPED = "stopped"


class StopReason(Enum):
    MAX_LENGTH = "max_length"
    PRECISION = "precision"
    POOL_EXHAUSTED = "pool_exhausted"


@dataclass(frozen=True)
class StoppingRule:
    max_length: int = 20
    se_threshold: float = 0.35
    min_length: int = 5

    def __post_init__(self):
        if not (1 <= self.min_length <= self.max_length):
            raise ValueError("need 1 <= min_length <= max_length")
        if self.se_threshold <= 0:
            raise ValueError("se_threshold must be positive")


@dataclass
class TestSession:
    session_id: str
    pool: CalibratedPool
    pool_ref: str
    concept: str | None
    policy: SelectionPolicy
    rule: StoppingRule
    responses: list[GradedResponse] = field(default_factory=list)
    trajectory: list[AbilityEstimate] = field(default_factory=list)
    status: SessionStatus = SessionStatus.ACTIVE
    pending_question: str | None = None
    stop_reason: StopReason | None = None

    @property
    def step(self) -> int:
        return len(self.responses)

    @property
    def theta_hat(self) -> float:
        return self.trajectory[-1].theta_hat if self.trajectory else 0.0

    @property
    def se(self) -> float:
        return self.trajectory[-1].se if self.trajectory else math.inf

    @property
    def administered(self) -> frozenset[str]:
        ids = {r.item.question_id for r in self.responses}
        if self.pending_question is not None:
            ids.add(self.pending_question)
        return frozenset(ids)

    def candidate_set(self) -> CandidateSet:
        return CandidateSet(self.pool, self.administered, self.concept)


# Called after every accepted grade with the grade's event record.
EventSink = Callable[[dict], None]


def start_session(pool: CalibratedPool, *, concept: str | None = None,
                  policy: SelectionPolicy | None = None,
                  rule: StoppingRule | None = None,
                  pool_ref: str = "default", session_id: str | None = None,
                  event_sink: EventSink | None = None) -> tuple[TestSession, str]:
    """Open a session and select its first question at theta = 0.

    Returns (session, first question id); the session is AWAITING_GRADE.
    """
    session = TestSession(
        session_id=session_id or uuid.uuid4().hex,
        pool=pool,
        pool_ref=pool_ref,
        concept=concept,
        policy=policy or SelectionPolicy(),
        rule=rule or StoppingRule(),
    )
    first = select_next(session.candidate_set(), 0.0, session.policy, draw_index=0)
    session.pending_question = first
    session.status = SessionStatus.AWAITING_GRADE
    if event_sink is not None:
        event_sink(_start_record(session))
    return session, first


def submit_grade(session: TestSession, correct: int, *, step: int | None = None,
                 event_sink: EventSink | None = None):
    """Record the expert's grade for the pending question.

    Returns the next question id, or the final DiagnosticReport once the
    stopping rule fires. ``step`` (1-based) guards against double grading.
    """
    if session.status is SessionStatus.STOPPED:
        raise SessionStoppedError(f"session {session.session_id} already stopped")
    if session.status is not SessionStatus.AWAITING_GRADE or session.pending_question is None:
        raise WrongStateError(f"session {session.session_id} is not awaiting a grade")
    expected = session.step + 1
    if step is not None and step != expected:
        raise WrongStateError(f"expected grade for step {expected}, got {step}")
    if correct not in (0, 1):
        raise ValueError(f"correct must be 0 or 1, got {correct!r}")

    item = session.pool.items[session.pending_question]
    session.status = SessionStatus.ACTIVE
    session.pending_question = None
    session.responses.append(GradedResponse(item=item, correct=correct, step_index=expected))
    estimate = estimate_ability(session.responses)
    session.trajectory.append(estimate)
    if event_sink is not None:
        event_sink(_grade_record(session, item.question_id, correct, estimate))

    t = session.step
    if t >= session.rule.max_length:
        return _stop(session, StopReason.MAX_LENGTH)
    if t >= session.rule.min_length and estimate.se <= session.rule.se_threshold:
        return _stop(session, StopReason.PRECISION)
    try:
        nxt = select_next(session.candidate_set(), estimate.theta_hat,
                          session.policy, draw_index=t)
    except PoolExhaustedError:
        return _stop(session, StopReason.POOL_EXHAUSTED)
    session.pending_question = nxt
    session.status = SessionStatus.AWAITING_GRADE
    return nxt


def _stop(session: TestSession, reason: StopReason):
    session.status = SessionStatus.STOPPED
    session.stop_reason = reason
    return build_report([session], session.pool)


# ---------------------------------------------------------------------------
# Diagnostic reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConceptResult:
    concept: str | None
    theta_hat: float
    normalized_theta: float
    se: float
    items_used: int


@dataclass(frozen=True)
class DiagnosticReport:
    """Per-concept ability estimates normalized against the human population.

    ``normalized_theta`` is the min-max image of theta over the pool's human
    abilities, clamped to [0, 1]. Top-20%/Top-50% rows give the 80th/50th
    percentile human ability for side-by-side ranking.
    """

    per_concept: tuple[ConceptResult, ...]
    average_theta: float
    average_normalized: float
    top20_theta: float
    top50_theta: float
    top20_normalized: float
    top50_normalized: float
    rank_line: str

    def format_table(self) -> str:
        header = f"{'concept':<28}{'theta':>9}{'norm':>8}{'se':>8}{'items':>7}  vs humans"
        lines = [header, "-" * len(header)]
        for row in self.per_concept:
            marks = ""
            if row.theta_hat > self.top50_theta:
                marks += "_"  # above mid-ability humans
            if row.theta_hat > self.top20_theta:
                marks += "*"  # above high-ability humans
            lines.append(
                f"{(row.concept or 'overall'):<28}{row.theta_hat:>9.3f}"
                f"{row.normalized_theta:>8.3f}{row.se:>8.3f}{row.items_used:>7}  {marks}"
            )
        lines.append(
            f"{'average':<28}{self.average_theta:>9.3f}{self.average_normalized:>8.3f}"
        )
        lines.append(
            f"{'Top-20% humans':<28}{self.top20_theta:>9.3f}{self.top20_normalized:>8.3f}"
        )
        lines.append(
            f"{'Top-50% humans':<28}{self.top50_theta:>9.3f}{self.top50_normalized:>8.3f}"
        )
        lines.append(f"rank: {self.rank_line}")
        return "\n".join(lines)


def normalize_against_humans(theta: float, human_abilities: np.ndarray) -> float:
    """Min-max image of theta over the human ability vector, clamped to [0, 1]."""
    lo = float(np.min(human_abilities))
    hi = float(np.max(human_abilities))
    if hi - lo < 1e-12:
        return 0.5
    return min(max((theta - lo) / (hi - lo), 0.0), 1.0)


def build_report(sessions: Sequence[TestSession], pool: CalibratedPool) -> DiagnosticReport:
    """Fold one or more finished sessions (one per concept) into a report."""
    sessions = list(sessions)
    if not sessions:
        raise ValueError("need at least one session")
    for s in sessions:
        if s.status is not SessionStatus.STOPPED:
            raise SessionNotFinishedError(f"session {s.session_id} has not stopped")
    humans = pool.human_abilities
    rows = []
    for s in sorted(sessions, key=lambda s: (s.concept or "")):
        last = s.trajectory[-1]
        rows.append(ConceptResult(
            concept=s.concept,
            theta_hat=last.theta_hat,
            normalized_theta=normalize_against_humans(last.theta_hat, humans),
            se=last.se,
            items_used=s.step,
        ))
    avg_theta = float(np.mean([r.theta_hat for r in rows]))
    top20 = float(np.quantile(humans, 0.8))
    top50 = float(np.quantile(humans, 0.5))
    names = {"examinee": avg_theta, "Top-20% humans": top20, "Top-50% humans": top50}
    rank = " > ".join(sorted(names, key=lambda k: -names[k]))
    return DiagnosticReport(
        per_concept=tuple(rows),
        average_theta=avg_theta,
        average_normalized=normalize_against_humans(avg_theta, humans),
        top20_theta=top20,
        top50_theta=top50,
        top20_normalized=normalize_against_humans(top20, humans),
        top50_normalized=normalize_against_humans(top50, humans),
        rank_line=rank,
    )


# ---------------------------------------------------------------------------
# Event log records and replay
# ---------------------------------------------------------------------------

def _start_record(session: TestSession) -> dict:
    return {
        "session_id": session.session_id,
        "step": 0,
        "event": "start",
        "pool_ref": session.pool_ref,
        "concept": session.concept,
        "policy": {"kind": session.policy.kind, "seed": session.policy.seed},
        "rule": {
            "max_length": session.rule.max_length,
            "se_threshold": session.rule.se_threshold,
            "min_length": session.rule.min_length,
        },
    }


def _grade_record(session: TestSession, question_id: str, correct: int,
                  estimate: AbilityEstimate) -> dict:
    return {
        "session_id": session.session_id,
        "step": estimate.step,
        "question_id": question_id,
        "correct": correct,
        "theta_hat": estimate.theta_hat,
        "se": estimate.se if math.isfinite(estimate.se) else None,
    }


def replay_session(records: Iterable[dict], pool: CalibratedPool) -> TestSession:
    """Rebuild a session from its event log.

    Selection and estimation are deterministic, so the reconstructed
    trajectory must match the recorded one exactly; any disagreement,
    duplicate question, or malformed record raises CorruptLogError. A
    truncated log leaves the session AWAITING_GRADE at the cut.
    """
    records = list(records)
    if not records or records[0].get("event") != "start":
        raise CorruptLogError("event log must begin with a start record")
    head = records[0]
    try:
        policy = SelectionPolicy(head["policy"]["kind"], head["policy"]["seed"])
        rule = StoppingRule(**head["rule"])
        session, _ = start_session(
            pool, concept=head.get("concept"), policy=policy, rule=rule,
            pool_ref=head.get("pool_ref", "default"), session_id=head["session_id"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptLogError(f"bad start record: {exc}") from exc

    seen: set[str] = set()
    for i, rec in enumerate(records[1:], start=1):
        try:
            step, qid, correct = rec["step"], rec["question_id"], rec["correct"]
        except (KeyError, TypeError) as exc:
            raise CorruptLogError(f"record {i}: missing field {exc}") from exc
        if qid in seen:
            raise CorruptLogError(f"record {i}: duplicate question id {qid!r}")
        seen.add(qid)
        if step != session.step + 1:
            raise CorruptLogError(f"record {i}: step {step} out of order")
        if session.status is not SessionStatus.AWAITING_GRADE:
            raise CorruptLogError(f"record {i}: grade after session stopped")
        if qid != session.pending_question:
            raise CorruptLogError(
                f"record {i}: logged question {qid!r} but engine selected "
                f"{session.pending_question!r}")
        submit_grade(session, correct)
        recorded_theta = rec.get("theta_hat")
        if recorded_theta is not None and recorded_theta != session.theta_hat:
            raise CorruptLogError(
                f"record {i}: recorded theta {recorded_theta} != replayed {session.theta_hat}")
    return session
