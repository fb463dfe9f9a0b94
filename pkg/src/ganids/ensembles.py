"""From-scratch tree ensembles: random forest and gradient boosting.

Both share one CART-style tree builder. Splits scan the midpoints of
consecutive sorted unique feature values; the best split is the strictly
best impurity improvement, scanning features in increasing index order so
ties land on the lower feature index (and on the lowest threshold within a
feature). The forest grows Gini classification trees on bootstrap samples
with a per-split feature subsample; boosting grows small variance-reduction
regression trees on logistic residuals.

Forest prediction is the mean of per-tree leaf class frequencies (summed
with fsum so tree order cannot move the result). Boost prediction is
sigmoid(init_logit + sum of stored leaf contributions); contributions are
Newton steps scaled by the shrinkage and, if a step would locally raise the
log-loss, halved until it does not, which makes the recorded training
log-loss non-increasing by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDatasetError, LengthMismatchError, SingleClassDataError


@dataclass(slots=True)
class Split:
    feature: int
    threshold: float
    left: "Split | Leaf"
    right: "Split | Leaf"


@dataclass(slots=True)
class Leaf:
    value: float


@dataclass(slots=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 8
    min_leaf: int = 2
    feature_subsample: int | None = None  # None -> round(sqrt(n_features))
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_leaf < 1:
            raise ValueError("n_trees, max_depth and min_leaf must all be >= 1")
        if self.feature_subsample is not None and self.feature_subsample < 1:
            raise ValueError("feature_subsample must be >= 1")


@dataclass(slots=True)
class BoostConfig:
    n_rounds: int = 100
    max_depth: int = 3
    shrinkage: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must be in (0, 1]")


@dataclass(slots=True)
class ForestModel:
    trees: list
    n_features: int
    config: ForestConfig


@dataclass(slots=True)
class BoostModel:
    trees: list
    init_logit: float
    n_features: int
    config: BoostConfig
    train_loss: list[float] = field(default_factory=list)


def _check_training_data(matrix: np.ndarray, labels: np.ndarray) -> None:
    if len(matrix) == 0:
        raise EmptyDatasetError("no training vectors")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise SingleClassDataError(
            f"supervised training needs both classes, got only {classes.tolist()}")


def _best_split(x_node: np.ndarray, target: np.ndarray, features: np.ndarray,
                min_leaf: int, classification: bool) -> tuple[int, float] | None:
    """Best (feature, threshold) by impurity improvement, or None.

    Scanning order realizes the tie rules: features ascending, and within a
    feature np.argmin picks the first (lowest) best threshold.
    """
    n = len(target)
    if classification:
        p = target.mean()
        parent = 2.0 * p * (1.0 - p) * n
    else:
        parent = float(np.sum(target * target) - target.sum() ** 2 / n)

    best: tuple[int, float] | None = None
    best_score = parent
    for f in features:
        xs = x_node[:, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        ts = target[order]
        boundary = xs[1:] != xs[:-1]
        if not boundary.any():
            continue
        left_n = np.arange(1, n)
        right_n = n - left_n
        csum = np.cumsum(ts)[:-1]
        if classification:
            pl = csum / left_n
            pr = (ts.sum() - csum) / right_n
            score = 2.0 * (left_n * pl * (1.0 - pl) + right_n * pr * (1.0 - pr))
        else:
            csq = np.cumsum(ts * ts)[:-1]
            total, total_sq = ts.sum(), float(np.sum(ts * ts))
            score = (csq - csum ** 2 / left_n) \
                + ((total_sq - csq) - (total - csum) ** 2 / right_n)
        score[~boundary] = np.inf
        score[(left_n < min_leaf) | (right_n < min_leaf)] = np.inf
        i = int(np.argmin(score))
        if score[i] < best_score:
            best_score = float(score[i])
            best = (int(f), float((xs[i] + xs[i + 1]) / 2.0))
    return best


def _build_tree(matrix: np.ndarray, target: np.ndarray, idx: np.ndarray,
                depth: int, cfg_depth: int, min_leaf: int, classification: bool,
                n_subsample: int | None, rng: np.random.Generator | None,
                leaves: list) -> "Split | Leaf":
    target_node = target[idx]
    if depth >= cfg_depth or len(idx) < 2 * min_leaf or \
            (classification and (target_node == target_node[0]).all()):
        leaf = Leaf(float(target_node.mean()))
        leaves.append((leaf, idx))
        return leaf

    d = matrix.shape[1]
    if n_subsample is not None and n_subsample < d:
        features = np.sort(rng.choice(d, size=n_subsample, replace=False))
    else:
        features = np.arange(d)

    found = _best_split(matrix[idx], target_node, features, min_leaf, classification)
    if found is None:
        leaf = Leaf(float(target_node.mean()))
        leaves.append((leaf, idx))
        return leaf

    feature, threshold = found
    mask = matrix[idx, feature] <= threshold
    left = _build_tree(matrix, target, idx[mask], depth + 1, cfg_depth, min_leaf,
                       classification, n_subsample, rng, leaves)
    right = _build_tree(matrix, target, idx[~mask], depth + 1, cfg_depth, min_leaf,
                        classification, n_subsample, rng, leaves)
    return Split(feature, threshold, left, right)


def _tree_value(node, row: np.ndarray) -> float:
    while isinstance(node, Split):
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.value


# ---------------------------------------------------------------- forest

def train_forest(matrix: np.ndarray, labels: np.ndarray,
                 cfg: ForestConfig | None = None) -> ForestModel:
    """Bootstrap-aggregated Gini trees over binary labels (1 = malicious)."""
    cfg = cfg or ForestConfig()
    matrix = np.asarray(matrix, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    _check_training_data(matrix, labels)

    d = matrix.shape[1]
    n_subsample = cfg.feature_subsample or round(math.sqrt(d))
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)
    trees = []
    for seq in seeds:
        rng = np.random.default_rng(seq)
        sample = rng.integers(0, len(matrix), size=len(matrix))
        root = _build_tree(matrix, labels, sample, 0, cfg.max_depth, cfg.min_leaf,
                           True, n_subsample, rng, leaves=[])
        trees.append(root)
    return ForestModel(trees=trees, n_features=d, config=cfg)


# ---------------------------------------------------------------- boosting

def _log_loss_terms(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return labels * np.logaddexp(0.0, -logits) + (1.0 - labels) * np.logaddexp(0.0, logits)


def train_boost(matrix: np.ndarray, labels: np.ndarray,
                cfg: BoostConfig | None = None) -> BoostModel:
    """Gradient boosting with logistic loss on binary labels (1 = malicious)."""
    cfg = cfg or BoostConfig()
    matrix = np.asarray(matrix, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    _check_training_data(matrix, labels)

    base = labels.mean()
    init_logit = float(np.log(base / (1.0 - base)))
    logits = np.full(len(labels), init_logit)
    losses = [float(_log_loss_terms(logits, labels).mean())]

    trees = []
    for _ in range(cfg.n_rounds):
        residual = labels - _sigmoid(logits)
        leaves: list = []
        root = _build_tree(matrix, residual, np.arange(len(labels)), 0,
                           cfg.max_depth, 1, False, None, None, leaves)
        for leaf, idx in leaves:
            p = _sigmoid(logits[idx])
            denom = float(np.sum(p * (1.0 - p)))
            step = float(residual[idx].sum()) / denom if denom > 1e-12 else 0.0
            contribution = cfg.shrinkage * step
            # Halve any step that would raise this leaf's summed log-loss;
            # zero is always admissible, so the recorded loss cannot rise.
            before = float(_log_loss_terms(logits[idx], labels[idx]).sum())
            for _ in range(60):
                after = float(_log_loss_terms(logits[idx] + contribution, labels[idx]).sum())
                if after <= before:
                    break
                contribution *= 0.5
            else:
                contribution = 0.0
            leaf.value = contribution
            logits[idx] += contribution
        trees.append(root)
        losses.append(float(_log_loss_terms(logits, labels).mean()))

    return BoostModel(trees=trees, init_logit=init_logit, n_features=matrix.shape[1],
                      config=cfg, train_loss=losses)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# ---------------------------------------------------------------- predict

def predict(model: ForestModel | BoostModel, row: np.ndarray) -> float:
    """Probability that one 52-dim vector is malicious."""
    row = np.asarray(row, dtype=np.float64)
    if row.shape[-1] != model.n_features:
        raise LengthMismatchError(
            f"row has {row.shape[-1]} features, model expects {model.n_features}")
    if isinstance(model, ForestModel):
        return math.fsum(_tree_value(t, row) for t in model.trees) / len(model.trees)
    logit = model.init_logit + math.fsum(_tree_value(t, row) for t in model.trees)
    return float(_sigmoid(np.array([logit]))[0])


def predict_batch(model: ForestModel | BoostModel, matrix: np.ndarray) -> np.ndarray:
    return np.array([predict(model, row) for row in np.asarray(matrix, dtype=np.float64)])
