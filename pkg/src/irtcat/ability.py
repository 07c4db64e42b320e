"""Maximum-likelihood ability estimation from graded responses.

The MLE is found by a coarse grid scan (161 points over the ability scale)
followed by golden-section refinement inside the winning bracket, then a
snap to whichever of {refined point, bracket ends} scores best. The grid
step is wide enough to catch the global basin when guessing makes the
likelihood multimodal, and the snap makes all-correct / all-wrong patterns
land exactly on the scale bounds. The same core runs one session or many
in parallel (the simulator batches thousands of sessions through it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import EmptyResponsesError
from .irt import (
    EPS,
    THETA_MAX,
    THETA_MIN,
    ItemParams,
    item_information_array,
    prob_correct_array,
    response_loglik_array,
)
from .validation import check_binary, check_param_matrix

GRID_POINTS = 161
REFINE_TOL = 1e-6

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0

# Cap on elements touched per grid chunk; keeps big batches out of swap.
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class GradedResponse:
    """One graded interaction: which item, the binary outcome, the test step."""

    item: ItemParams
    correct: int
    step_index: int

    def __post_init__(self):
        if self.correct not in (0, 1):
            raise ValueError(f"correct must be 0 or 1, got {self.correct!r}")
        if self.step_index < 1:
            raise ValueError("step_index is 1-based")


@dataclass(frozen=True)
class AbilityEstimate:
    """Ability point estimate at one test step.

    ``se`` is 1/sqrt(total information at theta_hat); ``math.inf`` marks a
    session whose administered items carry no information yet.
    """

    theta_hat: float
    se: float
    step: int
    loglik: float


def _batch_loglik(alphas, betas, cs, ys, thetas):
    """Total log-likelihood per session at per-session thetas (n,) -> (n,)."""
    return response_loglik_array(alphas, betas, cs, thetas[:, None], ys).sum(axis=1)


def batch_mle_theta(alphas, betas, cs, ys, *, lo: float = THETA_MIN, hi: float = THETA_MAX,
                    grid_points: int = GRID_POINTS, tol: float = REFINE_TOL):
    """MLE of theta for a batch of sessions.

    All arrays have shape (n_sessions, n_steps). Returns (theta, loglik),
    each of shape (n_sessions,). Every session's theta maximizes its summed
    response log-likelihood over [lo, hi].
    """
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    cs = np.asarray(cs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n, t = alphas.shape

    grid = np.linspace(lo, hi, grid_points)
    chunk = max(1, min(grid_points, _CHUNK_BUDGET // max(1, n * t)))
    best_ll = np.full(n, -np.inf)
    best_idx = np.zeros(n, dtype=int)
    for start in range(0, grid_points, chunk):
        g = grid[start:start + chunk]
        # (n, t) params against (k,) grid -> (k, n, t) -> (k, n)
        ll = response_loglik_array(
            alphas[None, :, :], betas[None, :, :], cs[None, :, :],
            g[:, None, None], ys[None, :, :],
        ).sum(axis=2)
        idx = np.argmax(ll, axis=0)
        val = ll[idx, np.arange(n)]
        better = val > best_ll
        best_ll = np.where(better, val, best_ll)
        best_idx = np.where(better, start + idx, best_idx)

    step = grid[1] - grid[0] if grid_points > 1 else 0.0
    lo0 = np.maximum(grid[best_idx] - step, lo)
    hi0 = np.minimum(grid[best_idx] + step, hi)

    # Golden-section refinement inside the bracket, vectorized over sessions.
    a, b = lo0.copy(), hi0.copy()
    h = b - a
    x1 = a + _INVPHI2 * h
    x2 = a + _INVPHI * h
    f1 = _batch_loglik(alphas, betas, cs, ys, x1)
    f2 = _batch_loglik(alphas, betas, cs, ys, x2)
    width = float(np.max(h)) if n else 0.0
    while width > tol:
        left = f1 > f2
        a = np.where(left, a, x1)
        b = np.where(left, x2, b)
        h = b - a
        probe = np.where(left, a + _INVPHI2 * h, a + _INVPHI * h)
        fprobe = _batch_loglik(alphas, betas, cs, ys, probe)
        x1, f1, x2, f2 = (
            np.where(left, probe, x2),
            np.where(left, fprobe, f2),
            np.where(left, x1, probe),
            np.where(left, f1, fprobe),
        )
        width *= _INVPHI

    refined = (a + b) / 2.0
    candidates = np.stack([refined, lo0, hi0])
    cand_ll = np.stack([_batch_loglik(alphas, betas, cs, ys, c) for c in candidates])
    pick = np.argmax(cand_ll, axis=0)
    cols = np.arange(n)
    return candidates[pick, cols], cand_ll[pick, cols]


def _response_arrays(responses):
    # Summations run in sorted-question-id order so results do not depend on
    # administration order (bit-reproducible runs).
    ordered = sorted(responses, key=lambda r: r.item.question_id)
    items = [r.item for r in ordered]
    ys = check_binary([r.correct for r in ordered])
    alphas, betas, cs = check_param_matrix(items)
    return alphas, betas, cs, ys


def estimate_ability(responses) -> AbilityEstimate:
    """MLE ability estimate from an ordered collection of graded responses.

    All-correct and all-wrong patterns land on the scale bounds (boundary
    maxima) rather than diverging.
    """
    responses = list(responses)
    if not responses:
        raise EmptyResponsesError("cannot estimate ability from zero responses")
    alphas, betas, cs, ys = _response_arrays(responses)
    theta, ll = batch_mle_theta(alphas[None, :], betas[None, :], cs[None, :], ys[None, :])
    theta_hat = float(theta[0])
    return AbilityEstimate(
        theta_hat=theta_hat,
        se=standard_error(responses, theta_hat),
        step=len(responses),
        loglik=float(ll[0]),
    )


def standard_error(responses, theta_hat: float) -> float:
    """1/sqrt(sum of item information at theta_hat) over administered items.

    Returns math.inf when the total information is below 1e-12.
    """
    responses = list(responses)
    if not responses:
        raise EmptyResponsesError("standard error needs at least one response")
    alphas, betas, cs, _ = _response_arrays(responses)
    total = float(item_information_array(alphas, betas, cs, theta_hat).sum())
    if total < 1e-12:
        return math.inf
    return 1.0 / math.sqrt(total)


def asymptotic_variance(items, theta0: float) -> float:
    """Predicted variance of the MLE after administering ``items`` at theta0.

    1 / sum_j I_j(theta0), i.e. 1 / (t * mean information).
    """
    items = list(items)
    if not items:
        raise ValueError("item set must be non-empty")
    alphas, betas, cs = check_param_matrix(items)
    total = float(item_information_array(alphas, betas, cs, theta0).sum())
    if total < EPS:
        return math.inf
    return 1.0 / total


class AbilityEstimator(BaseEstimator):
    """Sklearn-style wrapper around the MLE: ``fit(items, outcomes)``.

    Parameters
    ----------
    theta_bounds : (low, high) search interval on the ability scale.
    grid_points : size of the coarse global scan.
    refine_tol : width at which golden-section refinement stops.

    After ``fit``: ``theta_``, ``se_``, ``loglik_``, ``n_items_``.
    """

    def __init__(self, theta_bounds=(THETA_MIN, THETA_MAX),
                 grid_points: int = GRID_POINTS, refine_tol: float = REFINE_TOL):
        self.theta_bounds = theta_bounds
        self.grid_points = grid_points
        self.refine_tol = refine_tol

    def fit(self, X, y):
        """X: ItemParams sequence or (n, 3) array of (alpha, beta, c); y: 0/1."""
        alphas, betas, cs = check_param_matrix(X)
        ys = check_binary(y, n=len(alphas))
        lo, hi = float(self.theta_bounds[0]), float(self.theta_bounds[1])
        theta, ll = batch_mle_theta(
            alphas[None, :], betas[None, :], cs[None, :], ys[None, :],
            lo=lo, hi=hi, grid_points=self.grid_points, tol=self.refine_tol,
        )
        self.theta_ = float(theta[0])
        self.loglik_ = float(ll[0])
        total = float(item_information_array(alphas, betas, cs, self.theta_).sum())
        self.se_ = math.inf if total < 1e-12 else 1.0 / math.sqrt(total)
        self.n_items_ = int(len(alphas))
        return self

    def predict_proba(self, X):
        """Probability of a correct response to each item at the fitted theta."""
        if not hasattr(self, "theta_"):
            raise RuntimeError("estimator is not fitted")
        alphas, betas, cs = check_param_matrix(X)
        return prob_correct_array(alphas, betas, cs, self.theta_)
