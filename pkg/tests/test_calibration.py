"""Tests for the joint-MLE pool calibrator and its plumbing."""
import numpy as np
import pytest
from sklearn.base import clone

from irtcat import (
    CalibrationConfig,
    EmptyDatasetError,
    ItemParams,
    JointCalibrator,
    ResponseLog,
    calibrate,
    pool_statistics,
    split_train_validation,
    standardize_scale,
)
from irtcat.irt import prob_correct_array
from tests.conftest import build_pool


def synthetic_logs(n_ex, n_q, seed, alpha_range=(0.5, 2.5), c_range=(0.0, 0.3)):
    """Generate-then-recover oracle data: known parameters, Bernoulli draws."""
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal(n_ex)
    alpha = rng.uniform(*alpha_range, n_q)
    beta = rng.normal(0, 1, n_q)
    c = rng.uniform(*c_range, n_q)
    p = prob_correct_array(alpha[None, :], beta[None, :], c[None, :], theta[:, None])
    y = (rng.random((n_ex, n_q)) < p).astype(int)
    logs = [ResponseLog(f"e{i:04d}", f"q{j:03d}", int(y[i, j]))
            for i in range(n_ex) for j in range(n_q)]
    return logs, {"theta": theta, "alpha": alpha, "beta": beta, "c": c}


class TestSplit:
    def _logs(self, counts):
        logs = []
        for e, n in enumerate(counts):
            for j in range(n):
                logs.append(ResponseLog(f"e{e}", f"q{e}_{j}", j % 2))
        return logs

    def test_eight_two_split(self):
        logs = self._logs([5, 5])
        train, val = split_train_validation(logs, 0.2, seed=3)
        assert (len(train), len(val)) == (8, 2)

    def test_deterministic_given_seed(self):
        logs = self._logs([7, 3, 12])
        first = split_train_validation(logs, 0.3, seed=11)
        second = split_train_validation(logs, 0.3, seed=11)
        assert first == second
        assert split_train_validation(logs, 0.3, seed=12) != first

    def test_single_log_examinee_stays_in_training(self):
        logs = self._logs([1, 6])
        train, val = split_train_validation(logs, 0.5, seed=0)
        assert any(l.examinee_id == "e0" for l in train)
        assert not any(l.examinee_id == "e0" for l in val)

    def test_disjoint_and_exhaustive(self):
        logs = self._logs([4, 9, 2, 15])
        train, val = split_train_validation(logs, 0.25, seed=5)
        assert len(train) + len(val) == len(logs)
        assert not (set(id(l) for l in train) & set(id(l) for l in val))
        assert sorted((l.examinee_id, l.question_id) for l in train + val) == \
            sorted((l.examinee_id, l.question_id) for l in logs)

    def test_every_examinee_keeps_a_training_log(self):
        logs = self._logs([3, 8, 1, 2, 20])
        train, _ = split_train_validation(logs, 0.5, seed=1)
        assert {l.examinee_id for l in logs} == {l.examinee_id for l in train}

    def test_half_split_size_bound(self):
        # counting argument: per-examinee floor rounding makes the two halves
        # differ by at most the number of examinees
        rng = np.random.default_rng(8)
        counts = rng.integers(1, 40, size=120)
        logs = self._logs(counts)
        train, val = split_train_validation(logs, 0.5, seed=2)
        assert abs(len(train) - len(val)) <= len(counts)

    def test_half_split_at_benchmark_scale(self):
        # 66,437 logs (the first benchmark row's log count) over 113 examinees
        n_logs, n_q = 66_437, 592
        logs = [ResponseLog(f"e{i // n_q:03d}", f"q{i % n_q:03d}", i % 2)
                for i in range(n_logs)]
        n_examinees = len({l.examinee_id for l in logs})
        train, val = split_train_validation(logs, 0.5, seed=0)
        assert len(train) + len(val) == n_logs
        assert abs(len(train) - len(val)) <= n_examinees

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            split_train_validation(self._logs([4]), 0.0, seed=0)
        with pytest.raises(ValueError):
            split_train_validation(self._logs([4]), 1.0, seed=0)


@pytest.fixture(scope="module")
def fitted():
    logs, truth = synthetic_logs(400, 40, seed=10)
    config = CalibrationConfig(seed=7, learning_rate=0.5, max_epochs=200)
    return calibrate(logs, config), truth


class TestCalibrate:
    def test_recovers_parameters(self, fitted):
        pool, truth = fitted
        qids = sorted(pool.items)
        est_beta = np.array([pool.items[q].beta for q in qids])
        est_alpha = np.array([pool.items[q].alpha for q in qids])
        assert np.corrcoef(truth["beta"], est_beta)[0, 1] > 0.85
        assert np.corrcoef(truth["alpha"], est_alpha)[0, 1] > 0.5
        est_c = np.array([pool.items[q].c for q in qids])
        assert np.abs(est_c - truth["c"]).mean() <= 0.12

    def test_abilities_standardized(self, fitted):
        pool, _ = fitted
        assert abs(pool.human_abilities.mean()) <= 1e-6
        assert abs(pool.human_abilities.std() - 1.0) <= 1e-6

    def test_likelihood_ascent(self, fitted):
        pool, _ = fitted
        path = np.array(pool.fit_report.train_path)
        assert len(path) == pool.fit_report.epochs_run
        assert (np.diff(path) >= -1e-9).all()

    def test_bounds_respected(self, fitted):
        pool, _ = fitted
        cfg = CalibrationConfig()
        for item in pool.items.values():
            assert cfg.alpha_bounds[0] <= item.alpha <= cfg.alpha_bounds[1]
            assert cfg.beta_bounds[0] <= item.beta <= cfg.beta_bounds[1]
            assert cfg.c_bounds[0] <= item.c <= cfg.c_bounds[1]

    def test_deterministic(self):
        logs, _ = synthetic_logs(120, 15, seed=3)
        config = CalibrationConfig(seed=5, learning_rate=0.5, max_epochs=40)
        assert calibrate(logs, config) == calibrate(logs, config)

    def test_min_support_filtering_empties_dataset(self):
        logs = [ResponseLog("e1", "q1", 1), ResponseLog("e1", "q2", 0)]
        with pytest.raises(EmptyDatasetError):
            calibrate(logs)

    def test_duplicate_pairs_rejected(self):
        logs = [ResponseLog("e1", "q1", 1), ResponseLog("e1", "q1", 0)]
        with pytest.raises(ValueError):
            calibrate(logs)

    def test_degenerate_question_flagged_and_clamped(self):
        logs, _ = synthetic_logs(80, 10, seed=6)
        logs = [l for l in logs if l.question_id != "q000"]
        logs += [ResponseLog(f"e{i:04d}", "q000", 1) for i in range(80)]  # everyone right
        config = CalibrationConfig(seed=2, learning_rate=0.5, max_epochs=60)
        pool = calibrate(logs, config)
        assert "q000" in pool.fit_report.low_confidence
        assert pool.items["q000"].beta == config.beta_bounds[0]

    def test_concepts_and_content_attach(self):
        logs, _ = synthetic_logs(60, 8, seed=4)
        logs = [ResponseLog(l.examinee_id, l.question_id, l.correct, concept="Algebra")
                for l in logs]
        questions = {"q000": {"concept": "Geometry", "content": "Prove it."}}
        pool = calibrate(logs, CalibrationConfig(seed=1, max_epochs=15, learning_rate=0.5),
                         questions=questions)
        assert pool.items["q000"].concept == "Geometry"  # metadata overrides the log tag
        assert pool.items["q001"].concept == "Algebra"
        assert pool.content["q000"] == "Prove it."

    def test_math_shaped_scale(self):
        # a dataset at the scale of the large benchmark table: 2,242 questions,
        # 176,155 logs; synthetic content, only shape matters
        n_q, n_logs, n_ex = 2242, 176_155, 2000
        rng = np.random.default_rng(42)
        theta = rng.standard_normal(n_ex)
        beta = rng.normal(0, 1, n_q)
        base, extra = divmod(n_logs, n_q)
        logs = []
        for j in range(n_q):
            k = base + (1 if j < extra else 0)
            examinees = rng.choice(n_ex, size=k, replace=False)
            p = 1 / (1 + np.exp(-(theta[examinees] - beta[j])))
            ys = (rng.random(k) < p).astype(int)
            logs.extend(
                ResponseLog(f"e{e:05d}", f"q{j:04d}", int(y))
                for e, y in zip(examinees, ys))
        assert len(logs) == n_logs
        config = CalibrationConfig(seed=0, learning_rate=0.5, max_epochs=12, patience=3)
        pool = calibrate(logs, config)
        assert len(pool.items) == n_q


class TestStandardizeScale:
    def test_probabilities_invariant(self):
        # the rescaling is a pure reparameterization: every response
        # probability must survive it
        rng = np.random.default_rng(13)
        alphas = rng.uniform(0.3, 3, 50)
        betas = rng.normal(0.4, 1.3, 50)
        thetas = rng.normal(0.7, 1.9, 300)
        cs = rng.uniform(0, 0.4, 50)
        new_a, new_b, new_t, (mu, sd) = standardize_scale(alphas, betas, thetas)
        before = prob_correct_array(alphas[None, :], betas[None, :], cs[None, :], thetas[:, None])
        after = prob_correct_array(new_a[None, :], new_b[None, :], cs[None, :], new_t[:, None])
        assert np.max(np.abs(before - after)) < 1e-9
        assert mu == pytest.approx(0.7, abs=0.2)
        assert sd == pytest.approx(1.9, abs=0.3)

    def test_result_is_standardized(self):
        rng = np.random.default_rng(1)
        _, _, new_t, _ = standardize_scale(np.ones(3), np.zeros(3), rng.normal(2, 3, 500))
        assert abs(new_t.mean()) < 1e-12
        assert abs(new_t.std() - 1.0) < 1e-12

    def test_constant_population_shifts_only(self):
        _, new_b, new_t, (mu, sd) = standardize_scale(np.ones(2), np.array([1.0, 2.0]),
                                                      np.full(4, 1.5))
        assert sd == 1.0
        assert np.allclose(new_t, 0.0)


class TestJointCalibratorApi:
    def test_sklearn_surface(self):
        cal = JointCalibrator(learning_rate=0.5, max_epochs=10)
        params = cal.get_params()
        assert params["learning_rate"] == 0.5
        assert clone(cal).get_params() == params

    def test_fit_attributes(self):
        logs, _ = synthetic_logs(80, 10, seed=9)
        cal = JointCalibrator(seed=3, learning_rate=0.5, max_epochs=15).fit(logs)
        assert len(cal.items_) == 10
        assert len(cal.examinee_ids_) == 80
        assert cal.abilities_.shape == (80,)
        assert cal.pool_.fit_report is cal.fit_report_


class TestPoolStatistics:
    def test_extrema_by_difficulty(self):
        pool = build_pool([
            ItemParams("a", 1.0, -1.0, 0.0),
            ItemParams("b", 1.0, 0.0, 0.0),
            ItemParams("c", 1.0, 2.0, 0.0),
        ])
        stats = pool_statistics(pool)
        assert stats.hardest == "c"
        assert stats.easiest == "a"

    def test_high_guessing_flagged(self):
        pool = build_pool([
            ItemParams("q081", 1.0, 0.0, 0.951),
            ItemParams("q074", 1.0, 0.0, 0.01),
        ])
        stats = pool_statistics(pool)
        assert stats.guessable == ("q081",)
        assert stats.most_guessable == "q081"
        assert stats.least_guessable == "q074"

    def test_single_item_is_both_extremes(self):
        pool = build_pool([ItemParams("only", 1.2, 0.3, 0.1)])
        stats = pool_statistics(pool)
        assert stats.hardest == stats.easiest == "only"

    def test_tie_breaks_to_smallest_id(self):
        pool = build_pool([ItemParams("z", 1.0, 1.5, 0.0), ItemParams("a", 1.0, 1.5, 0.0)])
        stats = pool_statistics(pool)
        assert stats.hardest == "a"

    def test_concept_counts(self, concept_pool):
        stats = pool_statistics(concept_pool)
        assert stats.per_concept == {"Function": 15, "Geometry": 15}

    def test_empty_pool_rejected(self, concept_pool):
        empty = build_pool([ItemParams("x", 1.0, 0.0, 0.0)])
        empty.items.clear()
        with pytest.raises(ValueError):
            pool_statistics(empty)
