"""Tests for the response-model primitives."""
import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from irtcat import (
    ItemParams,
    ModelKind,
    clamp_theta,
    item_information,
    prob_correct,
    prob_derivative,
    response_loglik,
)
from irtcat.irt import item_information_array, prob_correct_array, prob_derivative_array


def decimal_prob(alpha, beta, c, theta, prec=30):
    """Independent arbitrary-precision evaluation of the response curve."""
    getcontext().prec = prec
    a, b, cc, t = map(Decimal, (str(alpha), str(beta), str(c), str(theta)))
    sig = 1 / (1 + (-(a * (t - b))).exp())
    return cc + (1 - cc) * sig


item_strategy = st.builds(
    ItemParams,
    question_id=st.just("q"),
    alpha=st.floats(0.2, 4.0),
    beta=st.floats(-3.5, 3.5),
    c=st.floats(0.0, 0.5),
)


class TestProbCorrect:
    def test_logistic_midpoint(self):
        assert prob_correct(ItemParams("q", 1.0, 0.0, 0.0), 0.0) == pytest.approx(0.5)

    def test_midpoint_with_guessing(self):
        # at theta = beta the curve sits at (1 + c) / 2
        assert prob_correct(ItemParams("q", 2.0, 1.0, 0.2), 1.0) == pytest.approx(0.6)

    def test_matches_high_precision_oracle(self):
        expected = float(decimal_prob(1.5, -0.5, 0.25, 1.0))
        got = prob_correct(ItemParams("q", 1.5, -0.5, 0.25), 1.0)
        assert got == pytest.approx(expected, abs=1e-14)
        assert got == pytest.approx(0.9284879013256679, abs=1e-15)  # frozen oracle value

    @given(
        alpha=st.floats(0.2, 2.5), beta=st.floats(-3.5, 3.5), c=st.floats(0.0, 0.5),
        t1=st.floats(-4, 4), t2=st.floats(-4, 4),
    )
    def test_strictly_increasing_in_theta(self, alpha, beta, c, t1, t2):
        # a gap below ~1e-3 in a saturated tail is not representable in
        # doubles, so strictness is asserted for meaningfully separated thetas
        assume(abs(t1 - t2) >= 1e-3)
        item = ItemParams("q", alpha, beta, c)
        lo, hi = sorted((t1, t2))
        assert prob_correct(item, lo) < prob_correct(item, hi)

    @given(item=st.builds(
        ItemParams, question_id=st.just("q"), alpha=st.floats(0.5, 4.0),
        beta=st.floats(-3.5, 3.5), c=st.floats(0.0, 0.5)))
    def test_asymptotes(self, item):
        # the 1e-9 window at theta = +/-50 needs exp(-alpha * 46.5) < 1e-9,
        # i.e. alpha >= ~0.45; below that the curve simply isn't there yet
        assert prob_correct(item, -50.0) == pytest.approx(item.c, abs=1e-9)
        assert prob_correct(item, 50.0) == pytest.approx(1.0, abs=1e-9)

    @given(item=item_strategy, theta=st.floats(-4, 4))
    def test_range(self, item, theta):
        p = prob_correct(item, theta)
        assert item.c <= p < 1.0


class TestProbDerivative:
    def test_quarter_at_midpoint(self):
        assert prob_derivative(ItemParams("q", 1.0, 0.0, 0.0), 0.0) == pytest.approx(0.25)

    def test_guessing_scales_slope(self):
        assert prob_derivative(ItemParams("q", 2.0, 0.0, 0.5), 0.0) == pytest.approx(0.25)

    @settings(max_examples=60)
    @given(item=item_strategy)
    def test_matches_finite_difference(self, item):
        theta, h = 0.7, 1e-5
        fd = (prob_correct(item, theta + h) - prob_correct(item, theta - h)) / (2 * h)
        assert prob_derivative(item, theta) == pytest.approx(fd, abs=1e-6)

    def test_finite_difference_grid(self):
        # 81-point theta grid x random items, the module-level consistency check
        rng = np.random.default_rng(12)
        thetas = np.arange(-4.0, 4.0001, 0.1)
        for _ in range(20):
            item = ItemParams("q", rng.uniform(0.2, 4), rng.normal(), rng.uniform(0, 0.5))
            h = 1e-5
            fd = (prob_correct_array(item.alpha, item.beta, item.c, thetas + h)
                  - prob_correct_array(item.alpha, item.beta, item.c, thetas - h)) / (2 * h)
            exact = prob_derivative_array(item.alpha, item.beta, item.c, thetas)
            assert np.max(np.abs(exact - fd)) < 1e-6

    @given(item=item_strategy, theta=st.floats(-6, 6))
    def test_nonnegative(self, item, theta):
        assert prob_derivative(item, theta) >= 0.0


class TestItemInformation:
    def test_no_guessing_reduction(self):
        # c = 0 collapses to alpha^2 * p * (1-p) = 4 * 0.25
        assert item_information(ItemParams("q", 2.0, 0.0, 0.0), 0.0) == pytest.approx(1.0)

    def test_alpha_one_midpoint(self):
        assert item_information(ItemParams("q", 1.0, 0.0, 0.0), 0.0) == pytest.approx(0.25)

    def test_guessing_reduces_information(self):
        # frozen from an exact rational evaluation of the ratio formula: 7/52
        got = item_information(ItemParams("q", 1.0, 0.0, 0.3), 0.0)
        assert got == pytest.approx(7.0 / 52.0, abs=1e-12)
        assert got < 0.25

    @settings(max_examples=60)
    @given(item=item_strategy, theta=st.floats(-4, 4))
    def test_closed_form_when_c_zero(self, item, theta):
        flat = ItemParams("q", item.alpha, item.beta, 0.0)
        p = prob_correct(flat, theta)
        assert abs(item_information(flat, theta) - flat.alpha ** 2 * p * (1 - p)) < 1e-10

    @given(item=item_strategy, theta=st.floats(-60, 60))
    def test_nonnegative_everywhere(self, item, theta):
        assert item_information(item, theta) >= 0.0

    def test_saturated_probability_returns_zero(self):
        assert item_information(ItemParams("q", 5.0, -4.0, 0.0), 50.0) == 0.0


class TestResponseLoglik:
    def test_correct_at_midpoint(self):
        got = response_loglik(ItemParams("q", 1.0, 0.0, 0.0), 0.0, 1)
        assert got == pytest.approx(math.log(0.5), abs=1e-12)

    def test_symmetry_at_midpoint(self):
        item = ItemParams("q", 1.0, 0.0, 0.0)
        assert response_loglik(item, 0.0, 0) == pytest.approx(math.log(0.5), abs=1e-12)

    def test_wrong_answer_with_guessing(self):
        got = response_loglik(ItemParams("q", 2.0, 1.0, 0.2), 1.0, 0)
        assert got == pytest.approx(math.log(0.4), abs=1e-12)

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            response_loglik(ItemParams("q", 1.0, 0.0, 0.0), 0.0, 2)

    def test_clamped_at_extremes(self):
        # log stays finite even where p underflows toward 0 or 1
        item = ItemParams("q", 5.0, 0.0, 0.0)
        assert math.isfinite(response_loglik(item, 50.0, 0))
        assert math.isfinite(response_loglik(item, -50.0, 1))


class TestModelKind:
    def test_one_pl_pins_alpha_and_c(self):
        item = ModelKind.ONE_PL.make_item("q", beta=0.7, alpha=2.5, c=0.3)
        assert (item.alpha, item.c) == (1.0, 0.0)

    def test_one_pl_equals_three_pl_bitwise(self):
        one = ModelKind.ONE_PL.make_item("q", beta=0.7)
        three = ModelKind.THREE_PL.make_item("q", beta=0.7, alpha=1.0, c=0.0)
        for theta in np.linspace(-4, 4, 33):
            assert prob_correct(one, theta) == prob_correct(three, theta)
            assert item_information(one, theta) == item_information(three, theta)
            assert response_loglik(one, theta, 1) == response_loglik(three, theta, 1)


class TestItemParamsValidation:
    @pytest.mark.parametrize("alpha,beta,c", [
        (0.0, 0.0, 0.0), (-1.0, 0.0, 0.0),
        (1.0, float("nan"), 0.0), (1.0, float("inf"), 0.0),
        (1.0, 0.0, 1.0), (1.0, 0.0, -0.1),
    ])
    def test_invalid_parameters_rejected(self, alpha, beta, c):
        with pytest.raises(ValueError):
            ItemParams("q", alpha, beta, c)

    def test_clamp_theta(self):
        assert clamp_theta(10.0) == 4.0
        assert clamp_theta(-10.0) == -4.0
        assert clamp_theta(1.25) == 1.25


def test_array_forms_match_scalar_forms():
    rng = np.random.default_rng(5)
    alphas = rng.uniform(0.3, 3, 20)
    betas = rng.normal(0, 1, 20)
    cs = rng.uniform(0, 0.4, 20)
    theta = 0.33
    probs = prob_correct_array(alphas, betas, cs, theta)
    infos = item_information_array(alphas, betas, cs, theta)
    for i in range(20):
        item = ItemParams("q", alphas[i], betas[i], cs[i])
        assert prob_correct(item, theta) == probs[i]
        assert item_information(item, theta) == infos[i]
