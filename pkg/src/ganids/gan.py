"""Adversarially trained anomaly detector over 52-dim traffic vectors.

Four small dense nets: a generator G mapping 32-dim standard-normal latents
to feature space, an encoder E mapping feature vectors back to latent
space, and two discriminators, one over feature space (D_x) and one over
latent space (D_z). Training alternates per batch:

  discriminators:  D_x learns real x vs G(z); D_z learns E(x) vs prior z
  generator/encoder: non-saturating losses (G drives D_x(G(z)) up,
                     E drives D_z(E(x)) down)

Scoring combines reconstruction error with discriminator feature matching:

  recon_error = ||x - G(E(x))||_1 / dim(x)
  disc_error  = ||f(x) - f(G(E(x)))||_1 / dim(f),  f = D_x's hidden layer
  score       = alpha * recon_error + (1 - alpha) * disc_error

A model trained on benign traffic flags scores above its threshold; one
trained on attack-only (darknet-style) traffic inverts the verdict, since
there a low score means the sample matches the malicious distribution.

All log-losses are evaluated in logit space via softplus so confident
discriminators cannot produce log(0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import (EmptyDatasetError, EmptyScoresError, LengthMismatchError,
                     NonFiniteLossError)
from .features import FEATURE_DIM, NormStats, normalize

LATENT_DIM = 32

GENERATOR_DIMS = (LATENT_DIM, 64, 128, FEATURE_DIM)
GENERATOR_ACTS = ("relu", "relu", "linear")
ENCODER_DIMS = (FEATURE_DIM, 128, 64, LATENT_DIM)
ENCODER_ACTS = ("relu", "relu", "linear")
DISC_X_DIMS = (FEATURE_DIM, 128, 1)
DISC_Z_DIMS = (LATENT_DIM, 128, 1)
DISC_ACTS = ("relu", "sigmoid")

ORIENTATIONS = ("benign", "darknet")


@dataclass(slots=True)
class GanModel:
    generator: nn.DenseNet
    encoder: nn.DenseNet
    disc_x: nn.DenseNet
    disc_z: nn.DenseNet
    norm_stats: NormStats
    seed: int
    latent_dim: int = LATENT_DIM
    orientation: str = "benign"
    alpha: float = 0.9
    threshold: float | None = None


@dataclass(slots=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 50
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    alpha: float = 0.9
    threshold_percentile: float = 95.0
    seed: int = 0

    @classmethod
    def sgd_preset(cls, **overrides) -> "TrainConfig":
        """Plain-SGD profile (lr 0.1) kept alongside the adam default."""
        merged = {"optimizer": "sgd", "learning_rate": 0.1, **overrides}
        return cls(**merged)


@dataclass(slots=True)
class EpochStats:
    epoch: int
    ge_loss: float
    dx_loss: float
    dz_loss: float
    value_v: float


@dataclass(slots=True)
class DetectionResult:
    score: float
    recon_error: float
    disc_error: float
    threshold: float | None
    anomalous: bool


def sample_latent(rng: np.random.Generator, n: int, dim: int = LATENT_DIM) -> np.ndarray:
    """n standard-normal latent vectors."""
    return rng.standard_normal((n, dim))


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def _logit_cache(net: nn.DenseNet, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Forward a sigmoid-output net, returning its final pre-activations."""
    _, cache = nn.forward(net, x)
    return cache[-1][1][:, 0], cache


def disc_loss_and_grads(disc: nn.DenseNet, real: np.ndarray,
                        fake: np.ndarray) -> tuple[float, list]:
    """Discriminator log-loss (real -> 1, fake -> 0) and its gradients."""
    n_r, n_f = len(real), len(fake)
    logit_r, cache_r = _logit_cache(disc, real)
    logit_f, cache_f = _logit_cache(disc, fake)
    loss = _softplus(-logit_r).mean() + _softplus(logit_f).mean()
    d_r = ((nn._sigmoid(logit_r) - 1.0) / n_r)[:, None]
    d_f = (nn._sigmoid(logit_f) / n_f)[:, None]
    grads_r, _ = nn.backward(disc, cache_r, d_r, at_logits=True)
    grads_f, _ = nn.backward(disc, cache_f, d_f, at_logits=True)
    return float(loss), nn.add_grads(grads_r, grads_f)


def generator_loss_and_grads(gen: nn.DenseNet, disc_x: nn.DenseNet,
                             z: np.ndarray) -> tuple[float, list]:
    """Non-saturating generator loss -mean log D_x(G(z)) and grads w.r.t. G."""
    gz, cache_g = nn.forward(gen, z)
    logit, cache_d = _logit_cache(disc_x, gz)
    loss = _softplus(-logit).mean()
    d_logit = ((nn._sigmoid(logit) - 1.0) / len(z))[:, None]
    _, d_gz = nn.backward(disc_x, cache_d, d_logit, at_logits=True)
    grads_g, _ = nn.backward(gen, cache_g, d_gz)
    return float(loss), grads_g


def encoder_loss_and_grads(enc: nn.DenseNet, disc_z: nn.DenseNet,
                           x: np.ndarray) -> tuple[float, list]:
    """Encoder loss -mean log(1 - D_z(E(x))) and grads w.r.t. E.

    D_z scores encodings as "real", so the encoder fools it by driving
    D_z(E(x)) toward the prior side (0).
    """
    ex, cache_e = nn.forward(enc, x)
    logit, cache_d = _logit_cache(disc_z, ex)
    loss = _softplus(logit).mean()
    d_logit = (nn._sigmoid(logit) / len(x))[:, None]
    _, d_ex = nn.backward(disc_z, cache_d, d_logit, at_logits=True)
    grads_e, _ = nn.backward(enc, cache_e, d_ex)
    return float(loss), grads_e


def train_gan(matrix: np.ndarray, cfg: TrainConfig,
              orientation: str = "benign") -> tuple[GanModel, list[EpochStats]]:
    """Train on raw (unnormalized) [n, 52] vectors; returns (model, trace).

    Normalization stats are fitted here and stored on the model, so scoring
    accepts raw vectors too. The detection threshold is calibrated on the
    training scores at cfg.threshold_percentile.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or len(matrix) == 0:
        raise EmptyDatasetError("training requires a non-empty [n, dim] matrix")
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}")

    x_all, stats = normalize(matrix)
    rng = np.random.default_rng(cfg.seed)

    gen = nn.init_net(GENERATOR_DIMS, GENERATOR_ACTS, rng)
    enc = nn.init_net(ENCODER_DIMS, ENCODER_ACTS, rng)
    disc_x = nn.init_net(DISC_X_DIMS, DISC_ACTS, rng)
    disc_z = nn.init_net(DISC_Z_DIMS, DISC_ACTS, rng)

    states = {
        "g": nn.opt_state(cfg.optimizer, cfg.learning_rate),
        "e": nn.opt_state(cfg.optimizer, cfg.learning_rate),
        "dx": nn.opt_state(cfg.optimizer, cfg.learning_rate),
        "dz": nn.opt_state(cfg.optimizer, cfg.learning_rate),
    }

    trace: list[EpochStats] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(x_all))
        sums = np.zeros(4)
        n_batches = 0
        for start in range(0, len(x_all), cfg.batch_size):
            batch = x_all[order[start:start + cfg.batch_size]]
            b = len(batch)

            z = sample_latent(rng, b)
            gz, _ = nn.forward(gen, z)
            dx_loss, dx_grads = disc_loss_and_grads(disc_x, batch, gz)
            ex, _ = nn.forward(enc, batch)
            dz_loss, dz_grads = disc_loss_and_grads(disc_z, ex, sample_latent(rng, b))
            nn.opt_step(disc_x, dx_grads, states["dx"])
            nn.opt_step(disc_z, dz_grads, states["dz"])

            g_loss, g_grads = generator_loss_and_grads(gen, disc_x, sample_latent(rng, b))
            e_loss, e_grads = encoder_loss_and_grads(enc, disc_z, batch)
            nn.opt_step(gen, g_grads, states["g"])
            nn.opt_step(enc, e_grads, states["e"])

            for term, value in (("disc_x", dx_loss), ("disc_z", dz_loss),
                                ("generator", g_loss), ("encoder", e_loss)):
                if not np.isfinite(value):
                    raise NonFiniteLossError(epoch, n_batches, term)
            # Two-discriminator value estimate: each disc loss is the negated
            # sum of its two expectation terms.
            sums += (g_loss + e_loss, dx_loss, dz_loss, -(dx_loss + dz_loss))
            n_batches += 1

        means = sums / n_batches
        trace.append(EpochStats(epoch, means[0], means[1], means[2], means[3]))

    model = GanModel(
        generator=gen, encoder=enc, disc_x=disc_x, disc_z=disc_z,
        norm_stats=stats, seed=cfg.seed, orientation=orientation, alpha=cfg.alpha,
    )
    train_scores = score_batch(model, matrix)
    model.threshold = choose_threshold(train_scores, cfg.threshold_percentile)
    return model, trace


def _hidden_activation(disc: nn.DenseNet, x: np.ndarray) -> np.ndarray:
    return nn.predict(disc, x, depth=len(disc.layers) - 1)


def anomaly_score(model: GanModel, x: np.ndarray,
                  alpha: float | None = None) -> DetectionResult:
    """Score one raw 52-dim vector against the trained model.

    Pure function of (model, x): safe to call concurrently. The verdict
    follows the model's orientation: benign-trained models flag scores
    above threshold, darknet-trained models flag scores at or below it.
    This is the latency-critical path, so it runs cache-free 1-D forward
    passes instead of the training-time forward.
    """
    if alpha is None:
        alpha = model.alpha
    stats = model.norm_stats
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != stats.mean.shape[0]:
        raise LengthMismatchError(
            f"vector has {x.shape[-1]} dims, stats have {stats.mean.shape[0]}")
    # Dead training dimensions divide by inf and so map to 0, matching
    # normalize().
    denom = np.where(stats.std >= 1e-9, stats.std, np.inf)
    xn = (x - stats.mean) / denom

    z = nn.predict(model.encoder, xn)
    recon = nn.predict(model.generator, z)
    recon_error = float(np.abs(xn - recon).mean())

    f_real = _hidden_activation(model.disc_x, xn)
    f_recon = _hidden_activation(model.disc_x, recon)
    disc_error = float(np.abs(f_real - f_recon).mean())

    score = alpha * recon_error + (1.0 - alpha) * disc_error
    anomalous = False
    if model.threshold is not None:
        flagged_high = score > model.threshold
        anomalous = flagged_high if model.orientation == "benign" else not flagged_high
    return DetectionResult(
        score=score, recon_error=recon_error, disc_error=disc_error,
        threshold=model.threshold, anomalous=anomalous,
    )


def score_batch(model: GanModel, matrix: np.ndarray,
                alpha: float | None = None) -> np.ndarray:
    """anomaly_score over matrix rows (one shared code path with scoring)."""
    return np.array([anomaly_score(model, row, alpha).score for row in matrix])


def reconstruction_errors(model: GanModel, matrix: np.ndarray) -> np.ndarray:
    return np.array([anomaly_score(model, row).recon_error for row in matrix])


def choose_threshold(scores: np.ndarray, percentile: float = 95.0) -> float:
    """Linear-interpolation percentile of the training score distribution."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise EmptyScoresError("cannot pick a threshold from zero scores")
    if not 0.0 < percentile <= 100.0:
        raise ValueError(f"percentile must be in (0, 100], got {percentile}")
    return float(np.percentile(scores, percentile))
