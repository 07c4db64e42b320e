"""Simulation experiments over synthetic examinees.

Reproduces the estimation-efficiency study (per-step MSE of Fisher vs
random selection), reliability curves under guess/slip response noise,
the asymptotic-variance check, and Jaccard similarity of administered
question sets. Policies are compared under common random numbers: the
true abilities and the per-(examinee, item) response uniforms are drawn
once per experiment, so two policies administering the same item to the
same examinee see the same outcome.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .ability import batch_mle_theta
from .calibration import CalibratedPool, FitReport
from .errors import BothEmptyError, PoolTooSmallError
from .irt import ItemParams, item_information_array, prob_correct, prob_correct_array
from .selection import FISHER, RANDOM
from .validation import check_probability


@dataclass(frozen=True)
class SyntheticExaminee:
    """A simulated examinee: true ability plus guess/slip label noise."""

    true_theta: float
    guess: float = 0.0
    slip: float = 0.0
    seed: int = 0

    def __post_init__(self):
        check_probability(self.guess, "guess")
        check_probability(self.slip, "slip")
        if self.guess + self.slip >= 1.0:
            raise ValueError("guess + slip must stay below 1 (responses must stay informative)")


def oracle_response(examinee: SyntheticExaminee, item: ItemParams, rng: np.random.Generator) -> int:
    """Draw one observed outcome.

    The latent outcome is Bernoulli(p(true_theta)); slip flips 1 -> 0 with
    probability s, guess flips 0 -> 1 with probability g, so
    P(observed = 1) = (1 - s) * p + g * (1 - p).
    """
    p = prob_correct(item, examinee.true_theta)
    u_latent, u_flip = rng.random(2)
    return int(_observe(u_latent < p, u_flip, examinee.guess, examinee.slip))


def _observe(latent, u_flip, guess: float, slip: float):
    return np.where(latent, u_flip >= slip, u_flip < guess)


def jaccard(a, b) -> float:
    """|A intersect B| / |A union B| over two question-id sets."""
    a, b = set(a), set(b)
    if not a and not b:
        raise BothEmptyError("Jaccard similarity is undefined for two empty sets")
    return len(a & b) / len(a | b)


@dataclass
class SimulationReport:
    """Aggregated experiment output; which fields are filled depends on the
    experiment that produced it."""

    seed: int
    n_examinees: int = 0
    max_steps: int = 0
    mse_curves: dict = field(default_factory=dict)          # policy -> tuple per step
    se_curves: dict = field(default_factory=dict)           # (guess, slip) -> tuple per step
    jaccard_matrix: np.ndarray | None = None                # over examinee pairs (fisher runs)
    efficiency_step: int | None = None                      # fisher step matching random's end
    efficiency_ratio: float | None = None                   # efficiency_step / random steps
    variance_rows: tuple = ()                               # (t, empirical, predicted) rows


def _pool_arrays(pool: CalibratedPool):
    ids = list(pool.question_ids)
    alphas = np.array([pool.items[q].alpha for q in ids])
    betas = np.array([pool.items[q].beta for q in ids])
    cs = np.array([pool.items[q].c for q in ids])
    return ids, alphas, betas, cs


def _run_adaptive_batch(pool, thetas0, policy_kind, max_steps, u_latent, u_flip,
                        guess, slip, policy_seeds):
    """Advance a cohort through an adaptive test, one shared step at a time.

    Returns (theta_path, se_path, administered mask) with shapes
    (n, max_steps), (n, max_steps), (n, n_items). Selection and estimation
    follow the session engine's exact rules (sorted-id tie-breaks, grid +
    golden-section MLE), evaluated for all examinees in parallel.
    """
    ids, alphas, betas, cs = _pool_arrays(pool)
    n = len(thetas0)
    n_items = len(ids)
    if n_items < max_steps:
        raise PoolTooSmallError(f"pool has {n_items} items but {max_steps} steps were requested")

    taken = np.zeros((n, n_items), dtype=bool)
    adm_a = np.zeros((n, max_steps))
    adm_b = np.zeros((n, max_steps))
    adm_c = np.zeros((n, max_steps))
    ys = np.zeros((n, max_steps))
    theta_path = np.zeros((n, max_steps))
    se_path = np.zeros((n, max_steps))
    theta_hat = np.zeros(n)

    p_true = prob_correct_array(alphas[None, :], betas[None, :], cs[None, :],
                                np.asarray(thetas0)[:, None])
    observed = _observe(u_latent < p_true, u_flip, guess, slip)

    for t in range(max_steps):
        if policy_kind == FISHER:
            info = item_information_array(alphas[None, :], betas[None, :], cs[None, :],
                                          theta_hat[:, None])
            info = np.where(taken, -1.0, info)
            choice = np.argmax(info, axis=1)  # ids sorted: first max = smallest id
        else:
            choice = np.empty(n, dtype=int)
            for e in range(n):
                remaining = np.flatnonzero(~taken[e])
                rng = np.random.default_rng((int(policy_seeds[e]), t))
                choice[e] = remaining[int(rng.integers(len(remaining)))]
        taken[np.arange(n), choice] = True
        adm_a[:, t] = alphas[choice]
        adm_b[:, t] = betas[choice]
        adm_c[:, t] = cs[choice]
        ys[:, t] = observed[np.arange(n), choice]

        theta_hat, _ = batch_mle_theta(adm_a[:, :t + 1], adm_b[:, :t + 1],
                                       adm_c[:, :t + 1], ys[:, :t + 1])
        theta_path[:, t] = theta_hat
        total_info = item_information_array(adm_a[:, :t + 1], adm_b[:, :t + 1],
                                            adm_c[:, :t + 1], theta_hat[:, None]).sum(axis=1)
        se_path[:, t] = np.where(total_info < 1e-12, np.inf, 1.0 / np.sqrt(np.maximum(total_info, 1e-300)))
    return theta_path, se_path, taken


def _examinee_policy_seeds(seed: int, n: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(n).astype(np.int64)


def run_mse_experiment(pool: CalibratedPool, n_examinees: int = 100,
                       policies: Sequence[str] = (FISHER, RANDOM),
                       max_steps: int = 20, seed: int = 0,
                       guess: float = 0.0, slip: float = 0.0) -> SimulationReport:
    """Per-step MSE of the ability estimate for each selection policy.

    True abilities are standard normal; both policies see identical true
    abilities and response uniforms (common random numbers). The efficiency
    fields record the first Fisher step whose MSE reaches the random
    policy's final-step MSE.
    """
    if n_examinees < 2:
        raise ValueError("need at least 2 examinees")
    rng = np.random.default_rng(seed)
    thetas0 = rng.standard_normal(n_examinees)
    n_items = len(pool.items)
    u_latent = rng.random((n_examinees, n_items))
    u_flip = rng.random((n_examinees, n_items))
    policy_seeds = _examinee_policy_seeds(seed, n_examinees)

    report = SimulationReport(seed=seed, n_examinees=n_examinees, max_steps=max_steps)
    taken_by_policy = {}
    for policy in policies:
        theta_path, _, taken = _run_adaptive_batch(
            pool, thetas0, policy, max_steps, u_latent, u_flip, guess, slip, policy_seeds)
        mse = ((theta_path - thetas0[:, None]) ** 2).mean(axis=0)
        report.mse_curves[policy] = tuple(float(v) for v in mse)
        taken_by_policy[policy] = taken

    if FISHER in report.mse_curves and RANDOM in report.mse_curves:
        target = report.mse_curves[RANDOM][-1]
        fisher = report.mse_curves[FISHER]
        hits = [t + 1 for t, v in enumerate(fisher) if v <= target]
        if hits:
            report.efficiency_step = hits[0]
            report.efficiency_ratio = hits[0] / max_steps
    if FISHER in taken_by_policy:
        taken = taken_by_policy[FISHER]
        inter = taken.astype(int) @ taken.astype(int).T
        sizes = taken.sum(axis=1)
        union = sizes[:, None] + sizes[None, :] - inter
        report.jaccard_matrix = inter / np.maximum(union, 1)
    return report


def run_se_experiment(pool: CalibratedPool, noise_conditions: Sequence[tuple[float, float]],
                      n_examinees: int = 100, max_steps: int = 20,
                      seed: int = 0) -> SimulationReport:
    """Mean SE per step under each (guess, slip) condition, Fisher selection.

    Conditions share abilities and response uniforms, so curves differ only
    through the label noise itself.
    """
    rng = np.random.default_rng(seed)
    thetas0 = rng.standard_normal(n_examinees)
    n_items = len(pool.items)
    u_latent = rng.random((n_examinees, n_items))
    u_flip = rng.random((n_examinees, n_items))
    policy_seeds = _examinee_policy_seeds(seed, n_examinees)

    report = SimulationReport(seed=seed, n_examinees=n_examinees, max_steps=max_steps)
    for guess, slip in noise_conditions:
        SyntheticExaminee(0.0, guess, slip)  # validate the condition
        _, se_path, _ = _run_adaptive_batch(
            pool, thetas0, FISHER, max_steps, u_latent, u_flip, guess, slip, policy_seeds)
        report.se_curves[(guess, slip)] = tuple(float(v) for v in se_path.mean(axis=0))
    return report


def run_variance_check(item_template: ItemParams, theta0: float, t_values: Sequence[int],
                       replications: int = 2000, seed: int = 0) -> SimulationReport:
    """Empirical variance of the MLE vs the 1/(t * I(theta0)) prediction.

    Administers t copies of the template item to ``replications`` noiseless
    examinees at theta0 and compares across the requested t values.
    """
    if replications < 500:
        raise ValueError("need at least 500 replications for a stable variance estimate")
    rng = np.random.default_rng(seed)
    p = prob_correct(item_template, theta0)
    info = float(item_information_array(item_template.alpha, item_template.beta,
                                        item_template.c, theta0))
    rows = []
    for t in t_values:
        ys = (rng.random((replications, t)) < p).astype(float)
        shape = (replications, t)
        theta_hat, _ = batch_mle_theta(
            np.full(shape, item_template.alpha), np.full(shape, item_template.beta),
            np.full(shape, item_template.c), ys)
        empirical = float(theta_hat.var())
        predicted = math.inf if info <= 0 else 1.0 / (t * info)
        rows.append((int(t), empirical, predicted))
    return SimulationReport(seed=seed, n_examinees=replications, variance_rows=tuple(rows))


def make_synthetic_pool(n_items: int, seed: int = 0,
                        alpha_range: tuple[float, float] = (0.5, 2.5),
                        beta_mean: float = 0.0, beta_sd: float = 1.0,
                        c_range: tuple[float, float] = (0.0, 0.3),
                        n_humans: int = 1000,
                        concepts: Sequence[str] | None = None) -> CalibratedPool:
    """A pool for experiments: alpha uniform, beta normal, c uniform.

    Human abilities are a standardized normal sample so reports and
    normalization behave like a freshly calibrated pool.
    """
    rng = np.random.default_rng(seed)
    alphas = rng.uniform(*alpha_range, size=n_items)
    betas = rng.normal(beta_mean, beta_sd, size=n_items)
    cs = rng.uniform(*c_range, size=n_items)
    humans = rng.standard_normal(n_humans)
    humans = np.sort((humans - humans.mean()) / humans.std())
    width = len(str(n_items))
    items = {}
    for i in range(n_items):
        qid = f"q{i + 1:0{width}d}"
        concept = concepts[i % len(concepts)] if concepts else None
        items[qid] = ItemParams(qid, float(alphas[i]), float(np.clip(betas[i], -4.0, 4.0)),
                                float(cs[i]), concept)
    report = FitReport(train_loglik=0.0, val_loglik=0.0, epochs_run=0,
                       n_train_logs=0, n_val_logs=0)
    return CalibratedPool(items=items, human_abilities=humans, fit_report=report)


def write_report_files(report: SimulationReport, outdir) -> list[Path]:
    """Emit the report as comma-separated tables (plus a text summary)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    if report.mse_curves:
        path = outdir / "mse_curves.csv"
        policies = sorted(report.mse_curves)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step"] + policies)
            for t in range(report.max_steps):
                writer.writerow([t + 1] + [repr(report.mse_curves[p][t]) for p in policies])
        written.append(path)

    if report.se_curves:
        path = outdir / "se_curves.csv"
        conditions = sorted(report.se_curves)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step"] + [f"guess={g},slip={s}" for g, s in conditions])
            for t in range(report.max_steps):
                writer.writerow([t + 1] + [repr(report.se_curves[c][t]) for c in conditions])
        written.append(path)

    if report.jaccard_matrix is not None:
        path = outdir / "jaccard_matrix.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            for row in report.jaccard_matrix:
                writer.writerow([repr(float(v)) for v in row])
        written.append(path)

    if report.variance_rows:
        path = outdir / "variance_check.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "empirical_variance", "predicted_variance"])
            for t, emp, pred in report.variance_rows:
                writer.writerow([t, repr(emp), repr(pred)])
        written.append(path)

    summary = outdir / "summary.txt"
    with summary.open("w") as fh:
        fh.write(f"seed: {report.seed}\n")
        if report.efficiency_step is not None:
            fh.write(f"fisher reaches the random policy's final MSE at step {report.efficiency_step} "
                     f"of {report.max_steps} (ratio {report.efficiency_ratio:.3f})\n")
        if report.jaccard_matrix is not None and report.jaccard_matrix.shape[0] > 1:
            off = report.jaccard_matrix[~np.eye(report.jaccard_matrix.shape[0], dtype=bool)]
            fh.write(f"mean pairwise Jaccard of administered sets: {off.mean():.4f}\n")
    written.append(summary)
    return written
