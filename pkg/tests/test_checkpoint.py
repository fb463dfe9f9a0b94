"""Checkpoint envelope, exact round trips and format errors."""

import numpy as np
import pytest

from ganids import ensembles, gan
from ganids.checkpoint import (CHECKPOINT_VERSION, FEATURE_ORDER_TAG,
                               checkpoint_from_dict, checkpoint_to_dict,
                               load_checkpoint, model_kind, save_checkpoint)
from ganids.errors import CheckpointFormatError
from ganids.features import FEATURE_DIM


def tiny_gan(orientation="benign"):
    rng = np.random.default_rng(1)
    blob = rng.normal(size=(30, FEATURE_DIM)) + 4.0
    model, _ = gan.train_gan(blob, gan.TrainConfig(epochs=1, seed=6), orientation)
    return model, blob


def tiny_trees():
    rng = np.random.default_rng(2)
    matrix = rng.normal(size=(40, 8))
    labels = matrix[:, 0] > 0
    forest = ensembles.train_forest(matrix, labels,
                                    ensembles.ForestConfig(n_trees=5, seed=3))
    boost = ensembles.train_boost(matrix, labels,
                                  ensembles.BoostConfig(n_rounds=5, seed=3))
    return forest, boost, matrix


def test_model_kind_tags():
    benign, _ = tiny_gan()
    darknet, _ = tiny_gan(orientation="darknet")
    forest, boost, _ = tiny_trees()
    assert model_kind(benign) == "gan-benign"
    assert model_kind(darknet) == "gan-darknet"
    assert model_kind(forest) == "forest"
    assert model_kind(boost) == "boost"
    with pytest.raises(CheckpointFormatError):
        model_kind(object())


def test_envelope_fields():
    model, _ = tiny_gan()
    doc = checkpoint_to_dict(model)
    assert doc["format_version"] == CHECKPOINT_VERSION
    assert doc["model_kind"] == "gan-benign"
    assert doc["feature_order"] == FEATURE_ORDER_TAG
    assert doc["seed"] == 6


def test_gan_roundtrip_scores_identically(tmp_path):
    model, blob = tiny_gan(orientation="darknet")
    path = tmp_path / "gan.json"
    save_checkpoint(path, model)
    again = load_checkpoint(path)
    assert isinstance(again, gan.GanModel)
    assert again.orientation == "darknet"
    assert again.alpha == model.alpha
    assert again.threshold == model.threshold
    assert again.seed == model.seed
    assert (again.norm_stats.mean == model.norm_stats.mean).all()
    assert (again.norm_stats.std == model.norm_stats.std).all()
    for orig, back in ((model.generator, again.generator),
                       (model.encoder, again.encoder),
                       (model.disc_x, again.disc_x),
                       (model.disc_z, again.disc_z)):
        for lo, lb in zip(orig.layers, back.layers):
            assert (lo.weights == lb.weights).all()
            assert (lo.bias == lb.bias).all()
    probe = blob[:5]
    assert gan.score_batch(again, probe).tolist() == \
        gan.score_batch(model, probe).tolist()
    # Verdicts survive, including the inverted orientation.
    for row in probe:
        assert gan.anomaly_score(again, row).anomalous == \
            gan.anomaly_score(model, row).anomalous


def test_tree_roundtrips_predict_identically(tmp_path):
    forest, boost, matrix = tiny_trees()
    for name, model in (("forest", forest), ("boost", boost)):
        path = tmp_path / f"{name}.json"
        save_checkpoint(path, model)
        again = load_checkpoint(path)
        assert type(again) is type(model)
        assert again.n_features == model.n_features
        assert again.config == model.config
        assert ensembles.predict_batch(again, matrix).tolist() == \
            ensembles.predict_batch(model, matrix).tolist()
    again = load_checkpoint(tmp_path / "boost.json")
    assert again.train_loss == boost.train_loss
    assert again.init_logit == boost.init_logit


def test_bad_version_rejected():
    model, _ = tiny_gan()
    doc = checkpoint_to_dict(model)
    doc["format_version"] = 99
    with pytest.raises(CheckpointFormatError):
        checkpoint_from_dict(doc)


def test_bad_kind_rejected():
    model, _ = tiny_gan()
    doc = checkpoint_to_dict(model)
    doc["model_kind"] = "svm"
    with pytest.raises(CheckpointFormatError):
        checkpoint_from_dict(doc)


def test_damaged_payload_rejected():
    forest, _, _ = tiny_trees()
    doc = checkpoint_to_dict(forest)
    del doc["trees"]
    with pytest.raises(CheckpointFormatError):
        checkpoint_from_dict(doc)
    doc = checkpoint_to_dict(forest)
    doc["config"]["n_trees"] = 0
    with pytest.raises(CheckpointFormatError):
        checkpoint_from_dict(doc)


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)
