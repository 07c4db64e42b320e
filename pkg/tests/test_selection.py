"""Tests for Fisher / random question selection."""
import numpy as np
import pytest

from irtcat import (
    CandidateSet,
    EmptyConceptPoolError,
    ItemParams,
    PoolExhaustedError,
    SelectionPolicy,
    information_profile,
    item_information,
    select_next,
)
from tests.conftest import build_pool


def scan_argmax(candidates: CandidateSet, theta: float) -> str:
    """Independently coded exhaustive scan (the oracle for Fisher selection)."""
    best_id, best_info = None, -1.0
    for qid in sorted(candidates.candidate_ids()):
        info = item_information(candidates.pool.items[qid], theta)
        if info > best_info:
            best_id, best_info = qid, info
    return best_id


class TestFisherSelection:
    def test_prefers_higher_discrimination(self):
        pool = build_pool([ItemParams("q1", 2.0, 0.0, 0.0), ItemParams("q2", 1.0, 0.0, 0.0)])
        # informations are 1.0 vs 0.25 at theta = 0 (alpha^2 / 4 with c = 0)
        assert select_next(CandidateSet(pool), 0.0, SelectionPolicy()) == "q1"

    def test_difficulty_tracks_ability(self):
        pool = build_pool([
            ItemParams("a", 1.0, -1.0, 0.0),
            ItemParams("b", 1.0, 0.0, 0.0),
            ItemParams("c", 1.0, 2.0, 0.0),
        ])
        assert select_next(CandidateSet(pool), 0.0, SelectionPolicy()) == "b"

    def test_single_candidate_any_policy(self):
        pool = build_pool([ItemParams("only", 1.0, 3.0, 0.0)])
        assert select_next(CandidateSet(pool), -2.0, SelectionPolicy()) == "only"
        assert select_next(CandidateSet(pool), -2.0, SelectionPolicy("random", seed=1)) == "only"

    def test_tie_breaks_to_smallest_id(self):
        pool = build_pool([ItemParams("z", 1.0, 0.0, 0.0), ItemParams("a", 1.0, 0.0, 0.0)])
        assert select_next(CandidateSet(pool), 0.0, SelectionPolicy()) == "a"

    def test_matches_exhaustive_scan(self, concept_pool):
        rng = np.random.default_rng(14)
        for _ in range(50):
            administered = frozenset(
                rng.choice(sorted(concept_pool.items), size=rng.integers(0, 10), replace=False))
            theta = float(rng.uniform(-3, 3))
            candidates = CandidateSet(concept_pool, administered)
            assert select_next(candidates, theta, SelectionPolicy()) == scan_argmax(candidates, theta)

    def test_adaptivity_direction(self, ladder_pool):
        # on the equal-alpha ladder, a higher ability never selects an
        # easier item than a lower ability does
        policy = SelectionPolicy()
        candidates = CandidateSet(ladder_pool)
        rng = np.random.default_rng(9)
        for _ in range(50):
            lo, hi = np.sort(rng.uniform(-3, 3, size=2))
            beta_lo = ladder_pool.items[select_next(candidates, lo, policy)].beta
            beta_hi = ladder_pool.items[select_next(candidates, hi, policy)].beta
            assert beta_hi >= beta_lo

    def test_excludes_administered(self, ladder_pool):
        first = select_next(CandidateSet(ladder_pool), 0.0, SelectionPolicy())
        second = select_next(CandidateSet(ladder_pool, frozenset([first])), 0.0, SelectionPolicy())
        assert second != first

    def test_pool_exhausted(self, ladder_pool):
        administered = frozenset(ladder_pool.items)
        with pytest.raises(PoolExhaustedError):
            select_next(CandidateSet(ladder_pool, administered), 0.0, SelectionPolicy())


class TestRandomPolicy:
    def test_requires_seed(self):
        with pytest.raises(ValueError):
            SelectionPolicy("random")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            SelectionPolicy("greedy")

    def test_pure_function_of_seed_and_draw_index(self, concept_pool):
        candidates = CandidateSet(concept_pool)
        policy = SelectionPolicy("random", seed=123)
        first = [select_next(candidates, 0.0, policy, draw_index=k) for k in range(10)]
        second = [select_next(candidates, 0.0, policy, draw_index=k) for k in range(10)]
        assert first == second

    def test_different_seeds_vary(self, concept_pool):
        candidates = CandidateSet(concept_pool)
        picks = {
            select_next(candidates, 0.0, SelectionPolicy("random", seed=s), draw_index=0)
            for s in range(20)
        }
        assert len(picks) > 1

    def test_selection_within_candidates(self, concept_pool):
        administered = frozenset(list(sorted(concept_pool.items))[:20])
        candidates = CandidateSet(concept_pool, administered)
        pick = select_next(candidates, 0.0, SelectionPolicy("random", seed=7))
        assert pick in candidates.candidate_ids()


class TestCandidateSet:
    def test_concept_filter(self, concept_pool):
        geometry = CandidateSet(concept_pool, concept="Geometry")
        assert all(concept_pool.items[q].concept == "Geometry" for q in geometry.candidate_ids())

    def test_unknown_concept(self, concept_pool):
        with pytest.raises(EmptyConceptPoolError):
            CandidateSet(concept_pool, concept="Astrology")

    def test_administered_must_exist(self, concept_pool):
        with pytest.raises(ValueError):
            CandidateSet(concept_pool, frozenset(["nope"]))


class TestInformationProfile:
    def test_peak_near_beta_for_c_zero(self):
        pool = build_pool([ItemParams("q", 1.5, 0.8, 0.0)])
        grid = np.linspace(-4, 4, 801)
        ids, matrix = information_profile(CandidateSet(pool), grid)
        assert ids == ["q"]
        assert grid[np.argmax(matrix[0])] == pytest.approx(0.8, abs=0.02)

    def test_covers_whole_pool_when_nothing_administered(self, concept_pool):
        ids, matrix = information_profile(CandidateSet(concept_pool), np.linspace(-2, 2, 5))
        assert len(ids) == len(concept_pool.items)
        assert matrix.shape == (len(ids), 5)

    def test_random_pool_rows_finite_nonnegative(self):
        rng = np.random.default_rng(2)
        items = [ItemParams(f"q{i:03d}", rng.uniform(0.3, 3), rng.normal(), rng.uniform(0, 0.4))
                 for i in range(100)]
        ids, matrix = information_profile(CandidateSet(build_pool(items)), np.linspace(-4, 4, 41))
        assert np.isfinite(matrix).all()
        assert (matrix >= 0).all()
        assert (matrix.max(axis=1) >= 0).all()

    def test_empty_grid_rejected(self, concept_pool):
        with pytest.raises(ValueError):
            information_profile(CandidateSet(concept_pool), [])
