"""Question-pool construction: joint MLE of item parameters and abilities.

Alternating block-coordinate ascent on the joint log-likelihood of all
response logs: an item block (alpha, beta, c per question) and an ability
block (theta per training examinee), each taking a bound-projected gradient
step per epoch. Gradients are preconditioned by the per-coordinate diagonal
Fisher curvature so one learning rate works for every parameter, and a step
that would lower the training log-likelihood is halved until it doesn't —
the accepted-iterate likelihood sequence is non-decreasing by construction.

A per-examinee stratified validation split drives early stopping. Because
the likelihood is invariant to an affine rescaling of the ability axis, the
fitted abilities are standardized to mean 0 / sd 1 afterwards and the item
parameters are transformed compatibly (a pure reparameterization; see
``standardize_scale``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .errors import EmptyDatasetError
from .irt import THETA_MAX, THETA_MIN, ItemParams, response_loglik_array
from .validation import check_bounds, check_fraction

_LL_SLACK = 1e-9          # ascent tolerance on accepted steps
_BACKTRACK_LIMIT = 10
_RIDGE = 1e-8


@dataclass(frozen=True)
class ResponseLog:
    """One graded human interaction; the unit of calibration input."""

    examinee_id: str
    question_id: str
    correct: int
    concept: str | None = None

    def __post_init__(self):
        if self.correct not in (0, 1):
            raise ValueError(f"correct must be 0 or 1, got {self.correct!r}")


@dataclass(frozen=True)
class CalibrationConfig:
    validation_fraction: float = 0.2
    max_epochs: int = 500
    patience: int = 10
    learning_rate: float = 0.05
    alpha_bounds: tuple[float, float] = (0.05, 5.0)
    beta_bounds: tuple[float, float] = (-4.0, 4.0)
    c_bounds: tuple[float, float] = (0.0, 0.6)
    min_logs_per_examinee: int = 5
    min_logs_per_question: int = 10
    seed: int = 0


@dataclass(frozen=True)
class FitReport:
    """Outcome of one calibration run."""

    train_loglik: float
    val_loglik: float
    epochs_run: int
    n_train_logs: int
    n_val_logs: int
    low_confidence: tuple[str, ...] = ()
    train_path: tuple[float, ...] = ()

    def format_text(self) -> str:
        lines = [
            "calibration fit report",
            f"  epochs run:          {self.epochs_run}",
            f"  train log-likelihood: {self.train_loglik:.6f} ({self.n_train_logs} logs)",
            f"  val log-likelihood:   {self.val_loglik:.6f} ({self.n_val_logs} logs)",
        ]
        if self.low_confidence:
            lines.append(f"  low-confidence items: {', '.join(self.low_confidence)}")
        return "\n".join(lines)


@dataclass(eq=False)
class CalibratedPool:
    """A calibrated question bank plus the training population's abilities."""

    items: dict[str, ItemParams]
    human_abilities: np.ndarray
    fit_report: FitReport
    content: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.human_abilities = np.asarray(self.human_abilities, dtype=float)

    def __eq__(self, other):
        if not isinstance(other, CalibratedPool):
            return NotImplemented
        return (
            self.items == other.items
            and np.array_equal(self.human_abilities, other.human_abilities)
            and self.fit_report == other.fit_report
            and self.content == other.content
        )

    @property
    def question_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.items))

    def concept_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for item in self.items.values():
            if item.concept is not None:
                counts[item.concept] = counts.get(item.concept, 0) + 1
        return dict(sorted(counts.items()))

    def items_for_concept(self, concept: str | None) -> list[ItemParams]:
        if concept is None:
            return [self.items[q] for q in self.question_ids]
        return [self.items[q] for q in self.question_ids if self.items[q].concept == concept]


def split_train_validation(logs: Sequence[ResponseLog], fraction: float, seed: int):
    """Disjoint, exhaustive split, stratified per examinee.

    Each examinee contributes floor(n_i * fraction) logs to validation and
    always keeps at least one training log; deterministic given the seed.
    """
    fraction = check_fraction(fraction, "validation fraction")
    ordered = sorted(logs, key=lambda r: (r.examinee_id, r.question_id))
    groups: dict[str, list[ResponseLog]] = {}
    for log in ordered:
        groups.setdefault(log.examinee_id, []).append(log)
    rng = np.random.default_rng(seed)
    train: list[ResponseLog] = []
    val: list[ResponseLog] = []
    for examinee in sorted(groups):
        group = groups[examinee]
        n_val = min(int(len(group) * fraction), len(group) - 1)
        picks = rng.permutation(len(group))
        chosen = set(picks[:n_val].tolist())
        for i, log in enumerate(group):
            (val if i in chosen else train).append(log)
    return train, val


def standardize_scale(alphas, betas, thetas):
    """Pin the ability scale: thetas to mean 0 / population sd 1.

    Item parameters are transformed compatibly (beta shifted and scaled,
    alpha scaled inversely) so every response probability is unchanged —
    a reparameterization, not a refit. Returns (alphas, betas, thetas,
    (mu, sd)).
    """
    thetas = np.asarray(thetas, dtype=float)
    mu = float(thetas.mean())
    sd = float(thetas.std())
    if sd < 1e-12:
        sd = 1.0
    return (
        np.asarray(alphas, dtype=float) * sd,
        (np.asarray(betas, dtype=float) - mu) / sd,
        (thetas - mu) / sd,
        (mu, sd),
    )


def _index_logs(logs: Sequence[ResponseLog]):
    ex_ids = sorted({r.examinee_id for r in logs})
    q_ids = sorted({r.question_id for r in logs})
    ex_pos = {x: i for i, x in enumerate(ex_ids)}
    q_pos = {x: i for i, x in enumerate(q_ids)}
    e = np.fromiter((ex_pos[r.examinee_id] for r in logs), dtype=np.int64, count=len(logs))
    q = np.fromiter((q_pos[r.question_id] for r in logs), dtype=np.int64, count=len(logs))
    y = np.fromiter((r.correct for r in logs), dtype=np.float64, count=len(logs))
    return ex_ids, q_ids, e, q, y


def _filter_min_support(logs, min_per_examinee, min_per_question):
    """Iteratively drop under-supported examinees/questions until stable."""
    current = list(logs)
    while True:
        by_e: dict[str, int] = {}
        by_q: dict[str, int] = {}
        for r in current:
            by_e[r.examinee_id] = by_e.get(r.examinee_id, 0) + 1
            by_q[r.question_id] = by_q.get(r.question_id, 0) + 1
        keep = [
            r for r in current
            if by_e[r.examinee_id] >= min_per_examinee and by_q[r.question_id] >= min_per_question
        ]
        if len(keep) == len(current):
            return current
        current = keep


class _Forward:
    """One likelihood/gradient pass over an indexed log set."""

    __slots__ = ("e", "q", "y")

    def __init__(self, e, q, y):
        self.e, self.q, self.y = e, q, y

    def loglik(self, alpha, beta, c, theta) -> float:
        return float(response_loglik_array(
            alpha[self.q], beta[self.q], c[self.q], theta[self.e], self.y).sum())

    def grads(self, alpha, beta, c, theta, n_items: int, n_ex: int):
        """Gradient and diagonal Fisher curvature for every coordinate."""
        a, b, cc = alpha[self.q], beta[self.q], c[self.q]
        th = theta[self.e]
        z = a * (th - b)
        sig = 1.0 / (1.0 + np.exp(-z))
        p = np.clip(cc + (1.0 - cc) * sig, 1e-12, 1.0 - 1e-12)
        pq = p * (1.0 - p)
        w = (self.y - p) / pq
        dsig = sig * (1.0 - sig)
        d_alpha = (1.0 - cc) * (th - b) * dsig
        d_beta = -(1.0 - cc) * a * dsig
        d_c = 1.0 - sig
        d_theta = (1.0 - cc) * a * dsig

        def acc(idx, values, size):
            return np.bincount(idx, weights=values, minlength=size)

        ll = float((self.y * np.log(p) + (1.0 - self.y) * np.log1p(-p)).sum())
        item = {
            "alpha": (acc(self.q, w * d_alpha, n_items), acc(self.q, d_alpha ** 2 / pq, n_items)),
            "beta": (acc(self.q, w * d_beta, n_items), acc(self.q, d_beta ** 2 / pq, n_items)),
            "c": (acc(self.q, w * d_c, n_items), acc(self.q, d_c ** 2 / pq, n_items)),
        }
        g_theta = acc(self.e, w * d_theta, n_ex)
        f_theta = acc(self.e, d_theta ** 2 / pq, n_ex)
        return ll, item, (g_theta, f_theta)


class JointCalibrator(BaseEstimator):
    """Sklearn-style calibrator: ``fit(response_logs)`` builds the pool.

    Parameters mirror CalibrationConfig; after ``fit`` the result lives in
    ``pool_`` (a CalibratedPool) with ``abilities_`` and ``fit_report_``
    as direct attributes. A fit run only mutates its own state, so separate
    instances can run concurrently.
    """

    def __init__(self, validation_fraction: float = 0.2, max_epochs: int = 500,
                 patience: int = 10, learning_rate: float = 0.05,
                 alpha_bounds=(0.05, 5.0), beta_bounds=(-4.0, 4.0), c_bounds=(0.0, 0.6),
                 min_logs_per_examinee: int = 5, min_logs_per_question: int = 10,
                 seed: int = 0):
        self.validation_fraction = validation_fraction
        self.max_epochs = max_epochs
        self.patience = patience
        self.learning_rate = learning_rate
        self.alpha_bounds = alpha_bounds
        self.beta_bounds = beta_bounds
        self.c_bounds = c_bounds
        self.min_logs_per_examinee = min_logs_per_examinee
        self.min_logs_per_question = min_logs_per_question
        self.seed = seed

    # -- fitting ------------------------------------------------------------

    def fit(self, X, y=None, questions: Mapping[str, Mapping[str, str]] | None = None):
        """X: collection of ResponseLog. ``questions`` optionally maps
        question_id to {"concept": ..., "content": ...} metadata."""
        logs = list(X)
        check_fraction(self.validation_fraction, "validation_fraction")
        a_lo, a_hi = check_bounds(self.alpha_bounds, "alpha")
        b_lo, b_hi = check_bounds(self.beta_bounds, "beta")
        c_lo, c_hi = check_bounds(self.c_bounds, "c")

        pairs = {(r.examinee_id, r.question_id) for r in logs}
        if len(pairs) != len(logs):
            raise ValueError("duplicate (examinee, question) pairs in input logs")

        logs = _filter_min_support(logs, self.min_logs_per_examinee, self.min_logs_per_question)
        ex_all = {r.examinee_id for r in logs}
        q_all = {r.question_id for r in logs}
        if len(q_all) < 2 or len(ex_all) < 2:
            raise EmptyDatasetError(
                "fewer than 2 questions or 2 examinees survive min-support filtering")

        train_logs, val_logs = split_train_validation(logs, self.validation_fraction, self.seed)
        # Stratification is per examinee, so a rare question can land entirely
        # in validation; pull one of its logs back so every item has training
        # signal.
        seen_q = {r.question_id for r in train_logs}
        promote: list[ResponseLog] = []
        for r in val_logs:
            if r.question_id not in seen_q:
                promote.append(r)
                seen_q.add(r.question_id)
        if promote:
            promoted = {id(r) for r in promote}
            val_logs = [r for r in val_logs if id(r) not in promoted]
            train_logs = train_logs + promote

        ex_ids, q_ids, e_tr, q_tr, y_tr = _index_logs(train_logs + val_logs)
        n_tr = len(train_logs)
        train = _Forward(e_tr[:n_tr], q_tr[:n_tr], y_tr[:n_tr])
        val = _Forward(e_tr[n_tr:], q_tr[n_tr:], y_tr[n_tr:])
        n_items, n_ex = len(q_ids), len(ex_ids)

        # Warm start from smoothed logit accuracies.
        acc_e = (np.bincount(train.e, weights=train.y, minlength=n_ex) + 0.5) / (
            np.bincount(train.e, minlength=n_ex) + 1.0)
        acc_q = (np.bincount(train.q, weights=train.y, minlength=n_items) + 0.5) / (
            np.bincount(train.q, minlength=n_items) + 1.0)
        theta = np.log(acc_e / (1.0 - acc_e))
        theta = np.clip((theta - theta.mean()) / max(theta.std(), 1e-6), THETA_MIN, THETA_MAX)
        beta = np.clip(-np.log(acc_q / (1.0 - acc_q)), b_lo, b_hi)
        alpha = np.clip(np.ones(n_items), a_lo, a_hi)
        c = np.full(n_items, np.clip(0.15, c_lo, c_hi))

        def project_items(al, be, cc):
            return np.clip(al, a_lo, a_hi), np.clip(be, b_lo, b_hi), np.clip(cc, c_lo, c_hi)

        cur_ll = train.loglik(alpha, beta, c, theta)
        train_path = []
        best = (cur_ll, -np.inf, alpha.copy(), beta.copy(), c.copy(), theta.copy(), 0)
        stale = 0
        epochs_run = 0
        for epoch in range(1, self.max_epochs + 1):
            epochs_run = epoch
            _, item_g, (g_th, f_th) = train.grads(alpha, beta, c, theta, n_items, n_ex)

            # Item block: one preconditioned, projected step (backtracked).
            step = self.learning_rate
            for _ in range(_BACKTRACK_LIMIT):
                prop = project_items(
                    alpha + step * item_g["alpha"][0] / (item_g["alpha"][1] + _RIDGE),
                    beta + step * item_g["beta"][0] / (item_g["beta"][1] + _RIDGE),
                    c + step * item_g["c"][0] / (item_g["c"][1] + _RIDGE),
                )
                prop_ll = train.loglik(*prop, theta)
                if prop_ll >= cur_ll - _LL_SLACK:
                    alpha, beta, c = prop
                    cur_ll = prop_ll
                    break
                step /= 2.0

            # Ability block.
            _, _, (g_th, f_th) = train.grads(alpha, beta, c, theta, n_items, n_ex)
            step = self.learning_rate
            for _ in range(_BACKTRACK_LIMIT):
                prop_theta = np.clip(theta + step * g_th / (f_th + _RIDGE), THETA_MIN, THETA_MAX)
                prop_ll = train.loglik(alpha, beta, c, prop_theta)
                if prop_ll >= cur_ll - _LL_SLACK:
                    theta = prop_theta
                    cur_ll = prop_ll
                    break
                step /= 2.0

            train_path.append(cur_ll)
            val_ll = val.loglik(alpha, beta, c, theta) if val.y.size else cur_ll
            if val_ll > best[1] + 1e-9:
                best = (cur_ll, val_ll, alpha.copy(), beta.copy(), c.copy(), theta.copy(), epoch)
                stale = 0
            else:
                stale += 1
                if stale >= self.patience:
                    break

        train_ll, val_ll, alpha, beta, c, theta = best[0], best[1], best[2], best[3], best[4], best[5]
        if not np.isfinite(val_ll):
            val_ll = val.loglik(alpha, beta, c, theta) if val.y.size else train_ll

        # Pin the scale; flag anything the rescaling pushes out of bounds.
        alpha, beta, theta, (mu, sd) = standardize_scale(alpha, beta, theta)
        low_confidence: set[str] = set()
        out = (alpha < a_lo) | (alpha > a_hi) | (beta < b_lo) | (beta > b_hi)
        low_confidence.update(q_ids[i] for i in np.flatnonzero(out))

        # Degenerate questions: all-correct or all-wrong across the filtered
        # dataset. Their difficulty is pinned to the bound and flagged.
        y_all = y_tr
        q_sum = np.bincount(q_tr, weights=y_all, minlength=n_items)
        q_cnt = np.bincount(q_tr, minlength=n_items)
        all_right = q_sum == q_cnt
        all_wrong = q_sum == 0
        beta = np.where(all_right, b_lo, beta)
        beta = np.where(all_wrong, b_hi, beta)
        low_confidence.update(q_ids[i] for i in np.flatnonzero(all_right | all_wrong))
        alpha, beta, c = project_items(alpha, beta, c)

        meta = dict(questions or {})
        concept_by_q: dict[str, str] = {}
        for r in logs:
            if r.concept is not None and r.question_id not in concept_by_q:
                concept_by_q[r.question_id] = r.concept
        items: dict[str, ItemParams] = {}
        content: dict[str, str] = {}
        for i, qid in enumerate(q_ids):
            q_meta = meta.get(qid, {})
            concept = q_meta.get("concept", concept_by_q.get(qid))
            items[qid] = ItemParams(qid, float(alpha[i]), float(beta[i]), float(c[i]), concept)
            if q_meta.get("content"):
                content[qid] = str(q_meta["content"])

        report = FitReport(
            train_loglik=float(train_ll),
            val_loglik=float(val_ll),
            epochs_run=epochs_run,
            n_train_logs=len(train_logs),
            n_val_logs=len(val_logs),
            low_confidence=tuple(sorted(low_confidence)),
            train_path=tuple(train_path),
        )
        self.examinee_ids_ = tuple(ex_ids)
        self.abilities_ = theta
        self.items_ = items
        self.fit_report_ = report
        self.scale_mu_ = mu
        self.scale_sd_ = sd
        # Pools carry the ability *distribution*; the canonical order is sorted
        # (matches the persisted form, so file round-trips are exact).
        self.pool_ = CalibratedPool(items=items, human_abilities=np.sort(theta),
                                    fit_report=report, content=content)
        return self


def calibrate(logs: Iterable[ResponseLog], config: CalibrationConfig | None = None,
              questions: Mapping[str, Mapping[str, str]] | None = None) -> CalibratedPool:
    """Fit a question pool from response logs (see JointCalibrator)."""
    cfg = config or CalibrationConfig()
    cal = JointCalibrator(
        validation_fraction=cfg.validation_fraction,
        max_epochs=cfg.max_epochs,
        patience=cfg.patience,
        learning_rate=cfg.learning_rate,
        alpha_bounds=cfg.alpha_bounds,
        beta_bounds=cfg.beta_bounds,
        c_bounds=cfg.c_bounds,
        min_logs_per_examinee=cfg.min_logs_per_examinee,
        min_logs_per_question=cfg.min_logs_per_question,
        seed=cfg.seed,
    )
    return cal.fit(logs, questions=questions).pool_


@dataclass(frozen=True)
class PoolStatistics:
    n_items: int
    per_concept: dict
    alpha_range: tuple[float, float, float]  # min, max, mean
    beta_range: tuple[float, float, float]
    c_range: tuple[float, float, float]
    hardest: str
    easiest: str
    most_discriminating: str
    least_discriminating: str
    most_guessable: str
    least_guessable: str
    guessable: tuple[str, ...]  # c > 0.9

    def format_text(self) -> str:
        lines = [f"items: {self.n_items}"]
        for concept, count in self.per_concept.items():
            lines.append(f"  concept {concept}: {count}")
        for name, rng in (("alpha", self.alpha_range), ("beta", self.beta_range), ("c", self.c_range)):
            lines.append(f"  {name}: min={rng[0]:.4f} max={rng[1]:.4f} mean={rng[2]:.4f}")
        lines.append(f"  hardest: {self.hardest}  easiest: {self.easiest}")
        lines.append(f"  most discriminating: {self.most_discriminating}  least: {self.least_discriminating}")
        lines.append(f"  most guessable: {self.most_guessable}  least: {self.least_guessable}")
        if self.guessable:
            lines.append(f"  guessable (c > 0.9): {', '.join(self.guessable)}")
        return "\n".join(lines)


def pool_statistics(pool: CalibratedPool) -> PoolStatistics:
    """Summarize a pool: concept counts, parameter ranges, extreme items."""
    if not pool.items:
        raise ValueError("pool is empty")
    items = [pool.items[q] for q in pool.question_ids]

    def extremum(key, reverse: bool) -> str:
        # Ties break toward the smallest question id.
        return sorted(items, key=lambda it: (-key(it) if reverse else key(it), it.question_id))[0].question_id

    alphas = np.array([it.alpha for it in items])
    betas = np.array([it.beta for it in items])
    cs = np.array([it.c for it in items])
    return PoolStatistics(
        n_items=len(items),
        per_concept=pool.concept_counts(),
        alpha_range=(float(alphas.min()), float(alphas.max()), float(alphas.mean())),
        beta_range=(float(betas.min()), float(betas.max()), float(betas.mean())),
        c_range=(float(cs.min()), float(cs.max()), float(cs.mean())),
        hardest=extremum(lambda it: it.beta, reverse=True),
        easiest=extremum(lambda it: it.beta, reverse=False),
        most_discriminating=extremum(lambda it: it.alpha, reverse=True),
        least_discriminating=extremum(lambda it: it.alpha, reverse=False),
        most_guessable=extremum(lambda it: it.c, reverse=True),
        least_guessable=extremum(lambda it: it.c, reverse=False),
        guessable=tuple(it.question_id for it in items if it.c > 0.9),
    )
