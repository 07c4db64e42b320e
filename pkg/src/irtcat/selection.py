"""Adaptive question selection.

The Fisher policy picks the unadministered candidate with maximal item
information at the current ability estimate; because information peaks
where difficulty sits near ability (scaled by discrimination), this is
what makes the test adapt. A seeded uniform-random policy serves as the
efficiency baseline. Both are pure functions over immutable snapshots —
the session layer owns all state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import CalibratedPool
from .errors import EmptyConceptPoolError, PoolExhaustedError
from .irt import item_information_array

FISHER = "fisher"
RANDOM = "random"


@dataclass(frozen=True)
class SelectionPolicy:
    kind: str = FISHER
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in (FISHER, RANDOM):
            raise ValueError(f"unknown selection policy {self.kind!r}")
        if self.kind == RANDOM and self.seed is None:
            raise ValueError("the random policy needs an explicit seed for reproducibility")


@dataclass(frozen=True)
class CandidateSet:
    """The selectable slice of a pool: everything not yet administered,
    optionally restricted to one concept."""

    pool: CalibratedPool
    administered: frozenset[str] = frozenset()
    concept: str | None = None

    def __post_init__(self):
        unknown = self.administered - set(self.pool.items)
        if unknown:
            raise ValueError(f"administered ids not in pool: {sorted(unknown)}")
        if self.concept is not None and not self.pool.items_for_concept(self.concept):
            raise EmptyConceptPoolError(f"no items carry concept {self.concept!r}")

    def candidate_ids(self) -> list[str]:
        """Sorted ids of the remaining candidates."""
        items = self.pool.items_for_concept(self.concept)
        return [it.question_id for it in items if it.question_id not in self.administered]


def select_next(candidates: CandidateSet, theta_hat: float,
                policy: SelectionPolicy, draw_index: int = 0) -> str:
    """Pick the next question id.

    Fisher: argmax of item information at theta_hat, ties broken toward the
    lexicographically smallest id. Random: uniform over the candidates, a
    pure function of (candidates, seed, draw_index).
    """
    ids = candidates.candidate_ids()
    if not ids:
        raise PoolExhaustedError("no unadministered candidates remain")
    if policy.kind == RANDOM:
        rng = np.random.default_rng((policy.seed, draw_index))
        return ids[int(rng.integers(len(ids)))]
    items = [candidates.pool.items[qid] for qid in ids]
    info = item_information_array(
        np.array([it.alpha for it in items]),
        np.array([it.beta for it in items]),
        np.array([it.c for it in items]),
        float(theta_hat),
    )
    # ids are sorted, argmax returns the first maximum -> smallest id wins ties
    return ids[int(np.argmax(info))]


def information_profile(candidates: CandidateSet, theta_grid) -> tuple[list[str], np.ndarray]:
    """Item information for every candidate over a theta grid.

    Returns (question ids, matrix of shape (n_candidates, n_grid)); a pool
    coverage diagnostic used by the CLI.
    """
    grid = np.asarray(theta_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("theta grid must be non-empty")
    ids = candidates.candidate_ids()
    items = [candidates.pool.items[qid] for qid in ids]
    matrix = item_information_array(
        np.array([it.alpha for it in items])[:, None],
        np.array([it.beta for it in items])[:, None],
        np.array([it.c for it in items])[:, None],
        grid[None, :],
    )
    return ids, matrix
