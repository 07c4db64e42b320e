import numpy as np
import pytest

from irtcat import CalibratedPool, FitReport, ItemParams


def build_pool(items, humans=None, content=None) -> CalibratedPool:
    """Assemble a pool directly from ItemParams (no calibration run)."""
    if humans is None:
        humans = np.sort(np.random.default_rng(99).standard_normal(500))
        humans = (humans - humans.mean()) / humans.std()
    report = FitReport(train_loglik=0.0, val_loglik=0.0, epochs_run=0,
                       n_train_logs=0, n_val_logs=0)
    return CalibratedPool(items={it.question_id: it for it in items},
                          human_abilities=np.asarray(humans, dtype=float),
                          fit_report=report, content=content or {})


@pytest.fixture
def ladder_pool():
    """Equal-alpha, c=0 items with difficulties on a grid: the pool where
    Fisher selection reduces to 'pick the beta nearest theta'."""
    betas = np.linspace(-3.0, 3.0, 25)
    items = [ItemParams(f"q{i:02d}", 1.0, float(b), 0.0) for i, b in enumerate(betas)]
    return build_pool(items)


@pytest.fixture
def concept_pool():
    """A small mixed pool with two concepts and some question content."""
    rng = np.random.default_rng(4)
    items = []
    for i in range(30):
        concept = "Geometry" if i % 2 == 0 else "Function"
        items.append(ItemParams(
            f"q{i:02d}", float(rng.uniform(0.8, 2.2)), float(rng.normal(0, 1)),
            float(rng.uniform(0, 0.25)), concept))
    content = {it.question_id: f"What is the answer to {it.question_id}?" for it in items}
    return build_pool(items, content=content)
