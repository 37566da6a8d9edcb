"""
Unit tests for loss functions
"""

import math

import pytest
import numpy as np

from sparsemeta.exceptions import DimensionError
from sparsemeta.models.losses import (
    LossKind,
    LossName,
    loss,
    loss_and_grad,
    margins,
    ramp,
    zero_one_loss,
)


class TestLossKind:
    """Test loss descriptors"""

    def test_margin_needs_positive_gamma(self):
        with pytest.raises(ValueError):
            LossKind.margin_ramp(0.0)
        with pytest.raises(ValueError):
            LossKind(LossName.MARGIN_RAMP)

    def test_uses_labels(self):
        assert LossKind.cross_entropy().uses_labels
        assert LossKind.margin_ramp(1.0).uses_labels
        assert not LossKind.mse().uses_labels


class TestCrossEntropy:
    """Test the stabilized cross-entropy"""

    def test_uniform_predictor_is_log_c(self):
        for classes in (2, 5, 17):
            value = loss(LossKind.cross_entropy(), np.zeros((3, classes)), [0, 1, 1])
            assert abs(value - math.log(classes)) < 1e-12

    def test_large_logits_are_stable(self):
        value, grad = loss_and_grad(LossKind.cross_entropy(), np.array([[1000.0, 0.0]]), [0])
        assert value == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.isfinite(grad))

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            loss(LossKind.cross_entropy(), np.zeros((1, 3)), [3])

    def test_label_count_mismatch(self):
        with pytest.raises(DimensionError):
            loss(LossKind.cross_entropy(), np.zeros((2, 3)), [0])


class TestMse:
    """Test mean squared error"""

    def test_identical_is_zero(self):
        assert loss(LossKind.mse(), np.array([[1.0, 2.0]]), np.array([[1.0, 2.0]])) == 0.0

    def test_sums_dims_averages_rows(self):
        outputs = np.array([[1.0, 2.0], [0.0, 0.0]])
        targets = np.array([[0.0, 0.0], [0.0, 3.0]])
        assert loss(LossKind.mse(), outputs, targets) == pytest.approx((1 + 4 + 9) / 2)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            loss(LossKind.mse(), np.zeros((2, 1)), np.zeros((2, 2)))


class TestMarginRamp:
    """Test the margin-based ramp loss"""

    def test_confident_correct(self):
        assert loss(LossKind.margin_ramp(1.0), np.array([[5.0, 0.0, 0.0]]), [0]) == 0.0

    def test_correct_inside_ramp(self):
        v = np.array([[1.0, 3.0, 2.0]])
        assert loss(LossKind.margin_ramp(1.0), v, [1]) == 0.0
        assert loss(LossKind.margin_ramp(2.0), v, [1]) == pytest.approx(0.5)

    def test_zero_margin_tie_pays_full(self):
        assert loss(LossKind.margin_ramp(1.0), np.array([[3.0, 3.0, 2.0]]), [1]) == 1.0

    def test_ramp_pieces(self):
        m = np.array([-2.0, -1.0, -0.25, 0.0, 3.0])
        assert np.array_equal(ramp(m, 1.0), [0.0, 0.0, 0.75, 1.0, 1.0])

    def test_margins_pick_lowest_runner_up(self):
        m, runner_up = margins(np.array([[2.0, 5.0, 5.0, 1.0]]), np.array([3]))
        assert m[0] == 4.0
        assert runner_up[0] == 1

    def test_subgradient_on_linear_segment(self):
        _, grad = loss_and_grad(LossKind.margin_ramp(2.0), np.array([[1.0, 3.0, 2.0]]), [1])
        assert np.allclose(grad, [[0.0, -0.5, 0.5]])

    def test_subgradient_zero_off_segment(self):
        _, grad = loss_and_grad(LossKind.margin_ramp(1.0), np.array([[5.0, 0.0, 0.0], [0.0, 4.0, 1.0]]), [0, 0])
        assert np.all(grad == 0.0)

    def test_dominates_zero_one_loss(self):
        """Ramp loss upper-bounds the 0/1 loss on 100000 random draws"""
        gen = np.random.default_rng(5)
        outputs = np.round(gen.normal(size=(100_000, 4)), 1)
        labels = gen.integers(0, 4, size=100_000)
        for gamma in (0.1, 1.0, 3.0):
            m, _ = margins(outputs, labels)
            per_row = ramp(m, gamma)
            assert np.all(per_row >= zero_one_loss(outputs, labels))
