"""Three-parameter-logistic response model.

Pure functions of ability and item parameters: response probability, its
derivative, Fisher item information, and per-response log-likelihood terms.
Everything here is stateless and safe to call concurrently.

The model for a correct response is

    p(theta) = c + (1 - c) / (1 + exp(-alpha * (theta - beta)))

so ``prob_correct`` ranges over [c, 1) and is strictly increasing in theta
for alpha > 0. The one-parameter variant is the same curve with alpha = 1
and c = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

THETA_MIN = -4.0
THETA_MAX = 4.0

# Numerical guard: probabilities are clamped to [EPS, 1-EPS] inside logs, and
# item information is defined as 0 once p >= 1 - EPS.
EPS = 1e-12


@dataclass(frozen=True)
class ItemParams:
    """Calibrated parameters of one question.

    alpha: discrimination, > 0.
    beta: difficulty, on the ability scale.
    c: lower asymptote (guessing probability), in [0, 1).
    concept: optional concept label used for filtered sessions.
    """

    question_id: str
    alpha: float
    beta: float
    c: float = 0.0
    concept: str | None = None

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha}")
        if not (0.0 <= self.c < 1.0):
            raise ValueError(f"c must be in [0, 1), got {self.c}")
        if not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite, got {self.beta}")


class ModelKind(Enum):
    """Which logistic variant an item is evaluated under.

    ONE_PL is the THREE_PL curve with alpha pinned to 1 and c to 0; both
    variants share the same evaluation code path, so they agree bit-for-bit.
    """

    ONE_PL = "1pl"
    THREE_PL = "3pl"

    def make_item(self, question_id: str, *, beta: float, alpha: float = 1.0,
                  c: float = 0.0, concept: str | None = None) -> ItemParams:
        if self is ModelKind.ONE_PL:
            return ItemParams(question_id, 1.0, beta, 0.0, concept)
        return ItemParams(question_id, alpha, beta, c, concept)


def clamp_theta(theta: float) -> float:
    """Clamp an ability value to the supported scale [-4, 4]."""
    return min(max(float(theta), THETA_MIN), THETA_MAX)


# ---------------------------------------------------------------------------
# Array forms. alpha/beta/c/theta broadcast like numpy operands; these are the
# primitives the calibrator, selector and simulator run on.
# ---------------------------------------------------------------------------

def prob_correct_array(alpha, beta, c, theta):
    """p(theta) = c + (1-c) * sigmoid(alpha * (theta - beta)), elementwise."""
    alpha = np.asarray(alpha, dtype=float)
    c = np.asarray(c, dtype=float)
    sig = expit(alpha * (np.asarray(theta, dtype=float) - np.asarray(beta, dtype=float)))
    return c + (1.0 - c) * sig


def prob_derivative_array(alpha, beta, c, theta):
    """dp/dtheta = (1-c) * alpha * sigma * (1 - sigma), elementwise; >= 0."""
    alpha = np.asarray(alpha, dtype=float)
    c = np.asarray(c, dtype=float)
    sig = expit(alpha * (np.asarray(theta, dtype=float) - np.asarray(beta, dtype=float)))
    return (1.0 - c) * alpha * sig * (1.0 - sig)


def item_information_array(alpha, beta, c, theta):
    """Fisher item information [p'(theta)]^2 / (p(theta) * (1 - p(theta))).

    Defined as 0 where p is within EPS of 0 or 1, so the ratio never blows up.
    """
    p = prob_correct_array(alpha, beta, c, theta)
    d = prob_derivative_array(alpha, beta, c, theta)
    denom = p * (1.0 - p)
    safe = (p > EPS) & (p < 1.0 - EPS)
    out = np.zeros(np.broadcast(p, d).shape)
    np.divide(d * d, denom, out=out, where=safe)
    if out.ndim == 0:
        return out[()]
    return out


def response_loglik_array(alpha, beta, c, theta, y):
    """y*ln(p) + (1-y)*ln(1-p) with p clamped to [EPS, 1-EPS], elementwise."""
    p = np.clip(prob_correct_array(alpha, beta, c, theta), EPS, 1.0 - EPS)
    y = np.asarray(y, dtype=float)
    return y * np.log(p) + (1.0 - y) * np.log1p(-p)


# ---------------------------------------------------------------------------
# Scalar forms over ItemParams — the shape most callers want.
# ---------------------------------------------------------------------------

def prob_correct(item: ItemParams, theta: float) -> float:
    """Probability of a correct response to ``item`` at ability ``theta``."""
    return float(prob_correct_array(item.alpha, item.beta, item.c, theta))


def prob_derivative(item: ItemParams, theta: float) -> float:
    """Slope of the response curve at ``theta`` (per ability unit)."""
    return float(prob_derivative_array(item.alpha, item.beta, item.c, theta))


def item_information(item: ItemParams, theta: float) -> float:
    """Informativeness of ``item`` at ``theta``; additive across items."""
    return float(item_information_array(item.alpha, item.beta, item.c, theta))


def response_loglik(item: ItemParams, theta: float, correct: int) -> float:
    """Log-likelihood contribution (nats) of one graded response."""
    if correct not in (0, 1):
        raise ValueError(f"correct must be 0 or 1, got {correct!r}")
    return float(response_loglik_array(item.alpha, item.beta, item.c, theta, correct))
