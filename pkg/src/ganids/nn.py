"""Minimal dense neural network engine: forward, backprop, SGD/Adam.

Everything is explicit numpy; no autograd. Layers hold [out, in] weight
matrices. Inputs may be a single vector or a [batch, dim] matrix; gradients
returned by backward() are for the SUM of the per-row output gradients, so
mean losses should pre-scale the output gradient by 1/batch.

relu uses the subgradient 0 at exactly 0. Sigmoid layers cache their
pre-activation so losses can be evaluated in logit space (see backward's
at_logits flag), which is what keeps the adversarial log-losses finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import LengthMismatchError

ACTIVATIONS = ("relu", "sigmoid", "linear")


@dataclass(slots=True)
class Layer:
    weights: np.ndarray  # [out, in]
    bias: np.ndarray     # [out]
    activation: str


@dataclass(slots=True)
class DenseNet:
    layers: list[Layer]

    def dims(self) -> list[int]:
        return [self.layers[0].weights.shape[1]] + [l.weights.shape[0] for l in self.layers]

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.bias)
        return out


def init_net(dims: Sequence[int], activations: Sequence[str],
             rng: np.random.Generator) -> DenseNet:
    """Glorot-uniform initialized net: weights ~ U(+-sqrt(6/(fan_in+fan_out)))."""
    if len(activations) != len(dims) - 1:
        raise ValueError(f"{len(dims)} dims need {len(dims) - 1} activations")
    layers = []
    for fan_in, fan_out, act in zip(dims, dims[1:], activations):
        if act not in ACTIVATIONS:
            raise ValueError(f"unknown activation {act!r}")
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append(Layer(
            weights=rng.uniform(-limit, limit, size=(fan_out, fan_in)),
            bias=np.zeros(fan_out),
            activation=act,
        ))
    return DenseNet(layers)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return _sigmoid(z)
    return z


def _activation_grad(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(z.dtype)
    if kind == "sigmoid":
        s = _sigmoid(z)
        return s * (1.0 - s)
    return np.ones_like(z)


def forward(net: DenseNet, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Run the net; returns (output, cache) with cache = [(input, preact), ...].

    A 1-D input yields a 1-D output; the cache always holds 2-D arrays.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.layers[0].weights.shape[1]:
        raise LengthMismatchError(
            f"input has {x.shape[-1]} dims, net expects {net.layers[0].weights.shape[1]}")
    single = x.ndim == 1
    a = x[None, :] if single else x
    cache = []
    for layer in net.layers:
        z = a @ layer.weights.T + layer.bias
        cache.append((a, z))
        a = _activate(z, layer.activation)
    return (a[0] if single else a), cache


def predict(net: DenseNet, x: np.ndarray, depth: int | None = None) -> np.ndarray:
    """Forward pass without the backprop cache, for scoring hot paths.

    depth, if given, stops after that many layers (partial nets expose a
    discriminator's feature layer this way).
    """
    a = np.asarray(x, dtype=np.float64)
    for layer in net.layers[:depth]:
        a = _activate(a @ layer.weights.T + layer.bias, layer.activation)
    return a


def backward(net: DenseNet, cache: list, dy: np.ndarray,
             at_logits: bool = False) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Backprop an output gradient; returns ([(dW, db) per layer], dx).

    With at_logits=True, dy is taken as the gradient at the final layer's
    pre-activation and the final activation derivative is skipped (stable
    path for sigmoid + log-loss).
    """
    dy = np.asarray(dy, dtype=np.float64)
    if dy.ndim == 1:
        dy = dy[None, :]
    grads: list = [None] * len(net.layers)
    dz = dy
    for i in range(len(net.layers) - 1, -1, -1):
        a_in, z = cache[i]
        if not (i == len(net.layers) - 1 and at_logits):
            dz = dz * _activation_grad(z, net.layers[i].activation)
        grads[i] = (dz.T @ a_in, dz.sum(axis=0))
        dz = dz @ net.layers[i].weights
    return grads, dz


def zero_grads_like(net: DenseNet) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in net.layers]


def add_grads(a: list, b: list) -> list:
    return [(ga[0] + gb[0], ga[1] + gb[1]) for ga, gb in zip(a, b)]


# ------------------------------------------------------------- optimizers

@dataclass(slots=True)
class OptState:
    kind: str
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def opt_state(kind: str, lr: float) -> OptState:
    if kind not in ("sgd", "adam"):
        raise ValueError(f"unknown optimizer {kind!r}")
    return OptState(kind=kind, lr=lr)


def opt_step(net: DenseNet, grads: list, state: OptState) -> None:
    """Apply one in-place parameter update from per-layer (dW, db) grads."""
    flat_params = net.params()
    flat_grads = []
    for dw, db in grads:
        flat_grads.append(dw)
        flat_grads.append(db)

    if state.kind == "sgd":
        for p, g in zip(flat_params, flat_grads):
            p -= state.lr * g
        return

    if not state.m:
        state.m = [np.zeros_like(p) for p in flat_params]
        state.v = [np.zeros_like(p) for p in flat_params]
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(flat_params, flat_grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


# ------------------------------------------------------------- grad check

def grad_check(net: DenseNet, x: np.ndarray,
               loss_fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
               h: float = 1e-5) -> float:
    """Max relative error between backprop and central differences.

    loss_fn maps the net output to (scalar loss, dloss/doutput). Every
    parameter is perturbed by +-h; relative error uses the
    |a - n| / max(|a|, |n|, 1e-8) convention.
    """
    y, cache = forward(net, x)
    _, dy = loss_fn(y)
    grads, _ = backward(net, cache, dy)

    worst = 0.0
    for layer, (dw, db) in zip(net.layers, grads):
        for param, grad in ((layer.weights, dw), (layer.bias, db)):
            it = np.nditer(param, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                keep = param[idx]
                param[idx] = keep + h
                up, _ = loss_fn(forward(net, x)[0])
                param[idx] = keep - h
                down, _ = loss_fn(forward(net, x)[0])
                param[idx] = keep
                numeric = (up - down) / (2.0 * h)
                analytic = grad[idx]
                err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
                worst = max(worst, err)
    return worst


# ---------------------------------------------------------- serialization

def net_to_dict(net: DenseNet) -> dict:
    return {
        "dims": net.dims(),
        "activations": [l.activation for l in net.layers],
        "weights": [l.weights.tolist() for l in net.layers],
        "biases": [l.bias.tolist() for l in net.layers],
    }


def net_from_dict(doc: dict) -> DenseNet:
    layers = []
    for w, b, act in zip(doc["weights"], doc["biases"], doc["activations"]):
        layers.append(Layer(
            weights=np.array(w, dtype=np.float64),
            bias=np.array(b, dtype=np.float64),
            activation=act,
        ))
    net = DenseNet(layers)
    if net.dims() != list(doc["dims"]):
        raise ValueError(f"checkpoint dims {doc['dims']} disagree with weight shapes")
    return net
