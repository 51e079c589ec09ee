import math

import numpy as np
import pytest

from boundary_quality.boundary import LaplacianConfig
from boundary_quality.errors import InputError
from boundary_quality.gradcheck import LOSSES, check_loss, run_gradcheck
from boundary_quality.losses import (
    ObjectiveWeights,
    basis_objective,
    bce_loss,
    boundary_loss,
    dice_loss,
    finite_difference_gradient,
    max_relative_error,
    scoring_regression_loss,
)

from .conftest import rect_mask
from .oracles import boundary_loops, dice_loops, laplacian_loops


class TestBce:
    def test_saturated(self):
        assert bce_loss(np.full((4, 4), 40.0), np.ones((4, 4), np.uint8)).value < 1e-15

    def test_zero_logits(self, rng):
        g = (rng.random((5, 5)) < 0.5).astype(np.uint8)
        assert abs(bce_loss(np.zeros((5, 5)), g).value - math.log(2)) <= 4 * math.ulp(math.log(2))

    def test_no_overflow(self):
        r = bce_loss(np.array([[-800.0, 800.0]]), np.array([[1, 0]]))
        assert r.value == pytest.approx(800.0) and np.isfinite(r.gradient).all()

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            bce_loss(np.zeros((2, 2)), np.zeros((2, 3), np.uint8))


class TestDice:
    def test_perfect(self, rng):
        g = (rng.random((6, 6)) < 0.5).astype(np.uint8)
        assert dice_loss(g.astype(float), g).value == 0.0

    def test_zero_prediction(self):
        g = rect_mask(6, 6, 1, 1, 3, 4)
        assert dice_loss(np.zeros((6, 6)), g, 1.0).value == 1 - 1 / 13

    def test_out_of_range(self):
        with pytest.raises(InputError):
            dice_loss(np.full((2, 2), 1.5), np.zeros((2, 2), np.uint8))

    def test_pixel_permutation_invariant(self, rng):
        p = rng.random((5, 5))
        g = (rng.random((5, 5)) < 0.5).astype(np.uint8)
        perm = rng.permutation(25)
        a = dice_loss(p, g).value
        b = dice_loss(p.ravel()[perm].reshape(5, 5), g.ravel()[perm].reshape(5, 5)).value
        assert a == pytest.approx(b, abs=1e-15)


class TestBoundaryLoss:
    def test_prediction_equals_gt(self):
        g = rect_mask(7, 8, 2, 2, 3, 4)
        soft = [[abs(v) for v in row] for row in laplacian_loops(g.astype(float).tolist())]
        expected = 1 - dice_loops(soft, boundary_loops(g.tolist()))
        assert expected == pytest.approx(4 / 61, abs=1e-15)
        assert boundary_loss(g.astype(float), g).value == pytest.approx(expected, abs=1e-15)

    def test_constant_prediction(self):
        g = rect_mask(7, 8, 2, 2, 3, 4)
        p = np.full((7, 8), 0.3)
        soft = [[abs(v) for v in row] for row in laplacian_loops(p.tolist())]
        assert sum(v != 0 for row in soft for v in row) == 2 * (7 + 8) - 4
        expected = 1 - dice_loops(soft, boundary_loops(g.tolist()))
        assert boundary_loss(p, g).value == pytest.approx(expected, abs=1e-15)

    def test_explicit_boundary_target(self, rng):
        g = rect_mask(7, 8, 2, 2, 3, 4)
        p = rng.random((7, 8))
        b = np.array(boundary_loops(g.tolist()), dtype=np.uint8)
        assert boundary_loss(p, g, boundary_gt=b).value == boundary_loss(p, g).value

    def test_zero_response_subgradient(self):
        r = boundary_loss(np.zeros((5, 5)), rect_mask(5, 5, 1, 1, 2, 2))
        assert np.isfinite(r.gradient).all() and not r.gradient.any()


class TestObjective:
    def test_projection_onto_bce(self, rng):
        z = rng.normal(size=(8, 8))
        g = (rng.random((8, 8)) < 0.5).astype(np.uint8)
        a = basis_objective(z, g, weights=ObjectiveWeights(1, 0, 0))
        b = bce_loss(z, g)
        assert a.value == b.value
        np.testing.assert_array_equal(a.gradient, b.gradient)

    def test_zero_weights(self, rng):
        r = basis_objective(rng.normal(size=(4, 4)), np.ones((4, 4), np.uint8), weights=ObjectiveWeights(0, 0, 0))
        assert r.value == 0.0 and not r.gradient.any()

    def test_gradient_linear_in_weights(self, rng):
        z = rng.normal(size=(8, 8))
        g = (rng.random((8, 8)) < 0.5).astype(np.uint8)
        parts = [basis_objective(z, g, weights=ObjectiveWeights(*e)).gradient for e in np.eye(3)]
        w = (0.3, 1.7, 0.9)
        combined = basis_objective(z, g, weights=ObjectiveWeights(*w)).gradient
        np.testing.assert_allclose(combined, sum(c * p for c, p in zip(w, parts)), rtol=0, atol=1e-15)

    def test_attains_zero_at_saturated_truth(self):
        g = rect_mask(8, 8, 2, 2, 4, 4)
        z = np.where(g == 1, 40.0, -40.0)
        assert basis_objective(z, g, weights=ObjectiveWeights(1, 1, 0)).value < 1e-12

    def test_negative_weight_rejected(self):
        with pytest.raises(InputError):
            ObjectiveWeights(1, -1, 0)


class TestScoringLoss:
    def test_zero(self):
        assert scoring_regression_loss((0.3, 0.7), (0.3, 0.7)).value == 0.0

    def test_unit(self):
        r = scoring_regression_loss((0, 0), (1, 1))
        assert r.value == 1.0
        np.testing.assert_array_equal(r.gradient, [-1, -1])

    def test_out_of_range(self):
        with pytest.raises(InputError):
            scoring_regression_loss((0, 1.2), (1, 1))


@pytest.mark.parametrize("name", LOSSES)
def test_gradients_match_finite_differences(name):
    rng = np.random.default_rng(11)
    for _ in range(5):
        assert check_loss(name, rng) < 1e-4


def test_gradcheck_eight_connectivity():
    errs = run_gradcheck(instances=3, lcfg=LaplacianConfig("eight"), losses=("boundary", "objective"))
    assert all(v < 1e-4 for v in errs.values())


def test_finite_difference_helper_on_quadratic():
    x = np.array([[1.0, -2.0], [0.5, 3.0]])
    g = finite_difference_gradient(lambda a: float((a**2).sum()), x)
    assert max_relative_error(2 * x, g) < 1e-10


def test_all_losses_nonnegative(rng):
    for _ in range(20):
        z = rng.normal(size=(6, 6))
        g = (rng.random((6, 6)) < 0.5).astype(np.uint8)
        p = rng.random((6, 6))
        assert bce_loss(z, g).value >= 0
        assert dice_loss(p, g).value >= 0
        assert boundary_loss(p, g).value >= 0
        assert basis_objective(z, g).value >= 0
