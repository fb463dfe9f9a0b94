"""Versioned JSON checkpoints for every model kind.

One envelope: format_version, model_kind, seed, and a feature-order tag
identifying the 52-dim layout the model was trained against. GAN payloads
carry the four nets plus normalization stats, orientation, alpha and the
calibrated threshold; tree payloads carry their trees and config. Floats
survive exactly (JSON round-trips Python doubles through repr).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import ensembles, gan, nn
from .errors import CheckpointFormatError
from .features import NormStats

CHECKPOINT_VERSION = 1
FEATURE_ORDER_TAG = "13stats-w50-100-500-2000-v1"

MODEL_KINDS = ("gan-benign", "gan-darknet", "forest", "boost")


def _tree_to_dict(node) -> dict:
    if isinstance(node, ensembles.Leaf):
        return {"v": node.value}
    return {"f": node.feature, "t": node.threshold,
            "l": _tree_to_dict(node.left), "r": _tree_to_dict(node.right)}


def _tree_from_dict(doc: dict):
    if "v" in doc:
        return ensembles.Leaf(doc["v"])
    return ensembles.Split(doc["f"], doc["t"],
                           _tree_from_dict(doc["l"]), _tree_from_dict(doc["r"]))


def model_kind(model) -> str:
    if isinstance(model, gan.GanModel):
        return "gan-benign" if model.orientation == "benign" else "gan-darknet"
    if isinstance(model, ensembles.ForestModel):
        return "forest"
    if isinstance(model, ensembles.BoostModel):
        return "boost"
    raise CheckpointFormatError(f"cannot checkpoint a {type(model).__name__}")


def checkpoint_to_dict(model) -> dict:
    kind = model_kind(model)
    doc = {"format_version": CHECKPOINT_VERSION, "model_kind": kind,
           "feature_order": FEATURE_ORDER_TAG}

    if isinstance(model, gan.GanModel):
        doc.update({
            "seed": model.seed,
            "latent_dim": model.latent_dim,
            "orientation": model.orientation,
            "alpha": model.alpha,
            "threshold": model.threshold,
            "norm_mean": model.norm_stats.mean.tolist(),
            "norm_std": model.norm_stats.std.tolist(),
            "generator": nn.net_to_dict(model.generator),
            "encoder": nn.net_to_dict(model.encoder),
            "disc_x": nn.net_to_dict(model.disc_x),
            "disc_z": nn.net_to_dict(model.disc_z),
        })
    elif isinstance(model, ensembles.ForestModel):
        cfg = model.config
        doc.update({
            "seed": cfg.seed,
            "n_features": model.n_features,
            "config": {"n_trees": cfg.n_trees, "max_depth": cfg.max_depth,
                       "min_leaf": cfg.min_leaf,
                       "feature_subsample": cfg.feature_subsample, "seed": cfg.seed},
            "trees": [_tree_to_dict(t) for t in model.trees],
        })
    else:
        cfg = model.config
        doc.update({
            "seed": cfg.seed,
            "n_features": model.n_features,
            "config": {"n_rounds": cfg.n_rounds, "max_depth": cfg.max_depth,
                       "shrinkage": cfg.shrinkage, "seed": cfg.seed},
            "init_logit": model.init_logit,
            "train_loss": model.train_loss,
            "trees": [_tree_to_dict(t) for t in model.trees],
        })
    return doc


def checkpoint_from_dict(doc: dict):
    if not isinstance(doc, dict) or doc.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointFormatError(
            f"unsupported checkpoint version {doc.get('format_version')!r}")
    kind = doc.get("model_kind")
    if kind not in MODEL_KINDS:
        raise CheckpointFormatError(f"unknown model kind {kind!r}")
    try:
        if kind.startswith("gan-"):
            return gan.GanModel(
                generator=nn.net_from_dict(doc["generator"]),
                encoder=nn.net_from_dict(doc["encoder"]),
                disc_x=nn.net_from_dict(doc["disc_x"]),
                disc_z=nn.net_from_dict(doc["disc_z"]),
                norm_stats=NormStats(mean=np.array(doc["norm_mean"]),
                                     std=np.array(doc["norm_std"])),
                seed=doc["seed"],
                latent_dim=doc["latent_dim"],
                orientation=doc["orientation"],
                alpha=doc["alpha"],
                threshold=doc["threshold"],
            )
        if kind == "forest":
            return ensembles.ForestModel(
                trees=[_tree_from_dict(t) for t in doc["trees"]],
                n_features=doc["n_features"],
                config=ensembles.ForestConfig(**doc["config"]),
            )
        return ensembles.BoostModel(
            trees=[_tree_from_dict(t) for t in doc["trees"]],
            init_logit=doc["init_logit"],
            n_features=doc["n_features"],
            config=ensembles.BoostConfig(**doc["config"]),
            train_loss=doc["train_loss"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointFormatError(f"bad checkpoint payload: {exc}") from exc


def save_checkpoint(path: str | Path, model) -> None:
    with open(path, "w") as fh:
        json.dump(checkpoint_to_dict(model), fh)


def load_checkpoint(path: str | Path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CheckpointFormatError(f"checkpoint is not valid JSON: {exc}") from exc
    return checkpoint_from_dict(doc)
