"""Random forest and gradient boosting: training, prediction, guards."""

import numpy as np
import pytest

import oracles
from ganids import ensembles
from ganids.ensembles import (BoostConfig, BoostModel, ForestConfig,
                              ForestModel, Leaf, Split, predict,
                              predict_batch, train_boost, train_forest)
from ganids.errors import (EmptyDatasetError, LengthMismatchError,
                           SingleClassDataError)


def separable(rng, n=60, d=10, gap=4.0):
    """Labels decided by feature 0 with a wide margin, the rest noise."""
    labels = np.arange(n) % 2 == 0
    matrix = rng.normal(size=(n, d))
    matrix[:, 0] = labels * gap + rng.normal(scale=0.3, size=n)
    return matrix, labels


# ------------------------------------------------------------------ config

def test_config_validation():
    with pytest.raises(ValueError):
        ForestConfig(n_trees=0)
    with pytest.raises(ValueError):
        ForestConfig(min_leaf=0)
    with pytest.raises(ValueError):
        ForestConfig(feature_subsample=0)
    with pytest.raises(ValueError):
        BoostConfig(n_rounds=0)
    with pytest.raises(ValueError):
        BoostConfig(shrinkage=0.0)
    with pytest.raises(ValueError):
        BoostConfig(shrinkage=1.5)
    assert BoostConfig(shrinkage=1.0).shrinkage == 1.0


def test_training_data_guards():
    empty = np.empty((0, 5))
    with pytest.raises(EmptyDatasetError):
        train_forest(empty, np.array([]))
    with pytest.raises(EmptyDatasetError):
        train_boost(empty, np.array([]))
    ones = np.ones((4, 5))
    with pytest.raises(SingleClassDataError):
        train_forest(ones, np.ones(4))
    with pytest.raises(SingleClassDataError):
        train_boost(ones, np.zeros(4))


# ------------------------------------------------------- hand-built models

def test_forest_of_constant_leaves():
    model = ForestModel(trees=[Leaf(1.0), Leaf(1.0), Leaf(0.0)],
                        n_features=3, config=ForestConfig(n_trees=3))
    assert predict(model, np.zeros(3)) == pytest.approx(2 / 3)


def test_boost_with_no_contributions_is_the_base_rate():
    model = BoostModel(trees=[Leaf(0.0)], init_logit=0.0, n_features=2,
                       config=BoostConfig(n_rounds=1))
    assert predict(model, np.zeros(2)) == 0.5


def test_split_routing_is_left_inclusive():
    tree = Split(feature=2, threshold=0.5, left=Leaf(0.0), right=Leaf(1.0))
    model = ForestModel(trees=[tree], n_features=4, config=ForestConfig(n_trees=1))
    on_boundary = np.array([9.0, 9.0, 0.5, 9.0])
    assert predict(model, on_boundary) == 0.0
    on_boundary[2] = np.nextafter(0.5, 1.0)
    assert predict(model, on_boundary) == 1.0


def test_predict_rejects_wrong_width():
    model = ForestModel(trees=[Leaf(0.5)], n_features=4, config=ForestConfig(n_trees=1))
    with pytest.raises(LengthMismatchError):
        predict(model, np.zeros(5))


# ---------------------------------------------------------------- training

def test_forest_learns_a_separable_rule():
    rng = np.random.default_rng(0)
    matrix, labels = separable(rng)
    model = train_forest(matrix, labels, ForestConfig(n_trees=30, seed=1))
    preds = predict_batch(model, matrix) > 0.5
    assert (preds == labels).all()
    held_out, held_labels = separable(rng, n=30)
    assert ((predict_batch(model, held_out) > 0.5) == held_labels).all()


def test_boost_learns_a_separable_rule():
    rng = np.random.default_rng(2)
    matrix, labels = separable(rng)
    model = train_boost(matrix, labels, BoostConfig(n_rounds=30, seed=0))
    assert ((predict_batch(model, matrix) > 0.5) == labels).all()
    assert len(model.trees) == 30
    assert len(model.train_loss) == 31


def test_boost_memorizes_two_points():
    matrix = np.array([[0.0, 1.0], [1.0, 0.0]])
    labels = np.array([False, True])
    model = train_boost(matrix, labels, BoostConfig(n_rounds=40, shrinkage=1.0))
    assert predict(model, matrix[0]) < 0.1
    assert predict(model, matrix[1]) > 0.9


def test_training_is_seed_deterministic():
    rng = np.random.default_rng(3)
    matrix, labels = separable(rng)
    probe = rng.normal(size=(5, 10))
    a = train_forest(matrix, labels, ForestConfig(n_trees=10, seed=7))
    b = train_forest(matrix, labels, ForestConfig(n_trees=10, seed=7))
    assert predict_batch(a, probe).tolist() == predict_batch(b, probe).tolist()
    c = train_boost(matrix, labels, BoostConfig(n_rounds=10, seed=7))
    d = train_boost(matrix, labels, BoostConfig(n_rounds=10, seed=7))
    assert predict_batch(c, probe).tolist() == predict_batch(d, probe).tolist()


def test_unsplittable_features_fall_back_to_base_rate():
    # Constant features leave nothing to split on; boosting's Newton step
    # from the matching init logit is exactly zero.
    matrix = np.ones((8, 3))
    labels = np.array([True, True, False, False, False, False, False, False])
    boost = train_boost(matrix, labels, BoostConfig(n_rounds=5))
    assert predict(boost, np.ones(3)) == pytest.approx(0.25, rel=1e-12)
    assert max(boost.train_loss) == min(boost.train_loss)
    forest = train_forest(matrix, labels, ForestConfig(n_trees=40, seed=0))
    assert 0.05 < predict(forest, np.ones(3)) < 0.5


def test_boost_train_loss_never_increases():
    rng = np.random.default_rng(4)
    matrix, labels = separable(rng, n=80)
    model = train_boost(matrix, labels, BoostConfig(n_rounds=25, shrinkage=0.3))
    pairs = zip(model.train_loss, model.train_loss[1:])
    assert all(later <= earlier for earlier, later in pairs)
    assert model.train_loss[-1] < model.train_loss[0]


# -------------------------------------------------------------- prediction

def test_predict_matches_tree_walk_oracle():
    rng = np.random.default_rng(5)
    matrix, labels = separable(rng, n=50, gap=1.0)
    forest = train_forest(matrix, labels, ForestConfig(n_trees=15, seed=2))
    boost = train_boost(matrix, labels, BoostConfig(n_rounds=15, seed=2))
    for row in matrix[:10]:
        assert predict(forest, row) == pytest.approx(
            oracles.forest_predict_brute(forest, row), abs=1e-12)
        assert predict(boost, row) == pytest.approx(
            oracles.boost_predict_brute(boost, row), abs=1e-12)


def test_forest_prediction_ignores_tree_order():
    rng = np.random.default_rng(6)
    matrix, labels = separable(rng, n=40)
    model = train_forest(matrix, labels, ForestConfig(n_trees=9, seed=3))
    row = matrix[7]
    before = predict(model, row)
    model.trees.reverse()
    assert predict(model, row) == before


def test_predictions_are_probabilities():
    rng = np.random.default_rng(8)
    matrix, labels = separable(rng, n=40, gap=0.5)
    forest = train_forest(matrix, labels, ForestConfig(n_trees=10, seed=1))
    boost = train_boost(matrix, labels, BoostConfig(n_rounds=10, seed=1))
    probe = rng.normal(size=(30, 10)) * 10
    for model in (forest, boost):
        preds = predict_batch(model, probe)
        assert ((preds >= 0.0) & (preds <= 1.0)).all()
