"""Minimal feed-forward machinery: parameters, forward, backward, plain SGD.

Everything is 64-bit numpy; no framework.  Weights are stored out x in, so a
batch forward is ``x @ W.T + b``.  Supported activations: ``selu``,
``sigmoid``, ``linear``.  Initialization is LeCun normal (std 1/sqrt(fan_in))
from the portable init stream with zero biases, the standard pairing for
SELU self-normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import INIT_STREAM, RngStream

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

ACTIVATIONS = ("selu", "sigmoid", "linear")


class TrainingError(RuntimeError):
    """A training run hit a non-finite quantity and aborted."""


def _selu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, SELU_LAMBDA * z, SELU_LAMBDA * SELU_ALPHA * np.expm1(z))


def _selu_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, SELU_LAMBDA, SELU_LAMBDA * SELU_ALPHA * np.exp(z))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def activate(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "selu":
        return _selu(z)
    if tag == "sigmoid":
        return _sigmoid(z)
    if tag == "linear":
        return z
    raise ValueError(f"unknown activation {tag!r}")


def activation_grad(tag: str, z: np.ndarray, out: np.ndarray) -> np.ndarray:
    if tag == "selu":
        return _selu_grad(z)
    if tag == "sigmoid":
        return out * (1.0 - out)
    if tag == "linear":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {tag!r}")


@dataclass
class Layer:
    weight: np.ndarray  # out x in
    bias: np.ndarray  # out
    act: str

    def __post_init__(self) -> None:
        if self.act not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.act!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError(
                f"bias shape {self.bias.shape} does not match weight {self.weight.shape}"
            )


@dataclass
class MlpParams:
    layers: list[Layer]

    def __post_init__(self) -> None:
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.weight.shape[1] != prev.weight.shape[0]:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.weight.shape} -> {cur.weight.shape}"
                )

    @property
    def d_in(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def d_out(self) -> int:
        return self.layers[-1].weight.shape[0]

    def copy(self) -> "MlpParams":
        return MlpParams(
            [Layer(l.weight.copy(), l.bias.copy(), l.act) for l in self.layers]
        )

    def to_dict(self) -> dict:
        return {
            "layers": [
                {"w": l.weight.tolist(), "b": l.bias.tolist(), "act": l.act}
                for l in self.layers
            ]
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "MlpParams":
        raw = json.loads(Path(path).read_text())
        return cls(
            [
                Layer(
                    np.array(l["w"], dtype=np.float64),
                    np.array(l["b"], dtype=np.float64),
                    l["act"],
                )
                for l in raw["layers"]
            ]
        )


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float
    epochs: int = 1
    batch_size: int = 1
    shuffle: bool = False

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def init_mlp(sizes: list[int], acts: list[str], rng: RngStream, block: int = 0) -> MlpParams:
    """LeCun-normal weights, zero biases, drawn from one block of ``rng``."""
    if len(acts) != len(sizes) - 1:
        raise ValueError(f"{len(sizes)} sizes need {len(sizes) - 1} activations")
    total = sum(fan_out * fan_in for fan_in, fan_out in zip(sizes, sizes[1:]))
    draws = rng.normal(total, block=block)
    layers = []
    offset = 0
    for fan_in, fan_out, act in zip(sizes, sizes[1:], acts):
        count = fan_out * fan_in
        w = draws[offset : offset + count].reshape(fan_out, fan_in) / np.sqrt(fan_in)
        offset += count
        layers.append(Layer(w, np.zeros(fan_out), act))
    return MlpParams(layers)


def toy_generator(d: int, hidden: tuple[int, ...] = (256, 256), rng: RngStream | None = None,
                  block: int = 0) -> MlpParams:
    """d -> hidden -> d net, SELU on hidden layers, linear output."""
    rng = rng if rng is not None else RngStream(0, stream_id=INIT_STREAM)
    sizes = [d, *hidden, d]
    acts = ["selu"] * len(hidden) + ["linear"]
    return init_mlp(sizes, acts, rng, block=block)


def toy_discriminator(d: int, hidden: tuple[int, ...] = (256, 128), rng: RngStream | None = None,
                      block: int = 1) -> MlpParams:
    """d -> hidden -> 1 net, SELU on hidden layers, sigmoid output."""
    rng = rng if rng is not None else RngStream(0, stream_id=INIT_STREAM)
    sizes = [d, *hidden, 1]
    acts = ["selu"] * len(hidden) + ["sigmoid"]
    return init_mlp(sizes, acts, rng, block=block)


@dataclass
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)  # layer inputs
    pre_acts: list[np.ndarray] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)  # post-activation


def forward(params: MlpParams, batch: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Batch forward pass; the cache feeds ``backward``."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != params.d_in:
        raise ValueError(f"batch shape {batch.shape} does not match input dim {params.d_in}")
    cache = ForwardCache()
    a = batch
    for layer in params.layers:
        z = a @ layer.weight.T + layer.bias
        out = activate(layer.act, z)
        cache.inputs.append(a)
        cache.pre_acts.append(z)
        cache.outputs.append(out)
        a = out
    return a, cache


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    inputs: np.ndarray  # gradient w.r.t. the batch


def backward(params: MlpParams, cache: ForwardCache, upstream: np.ndarray) -> Gradients:
    """Exact reverse accumulation of ``forward``; shapes mirror the parameters."""
    if len(cache.inputs) != len(params.layers):
        raise ValueError(
            f"cache has {len(cache.inputs)} layers, params have {len(params.layers)}"
        )
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != cache.outputs[-1].shape:
        raise ValueError(
            f"upstream gradient shape {upstream.shape} does not match "
            f"output shape {cache.outputs[-1].shape}"
        )
    d_weights: list[np.ndarray] = [None] * len(params.layers)  # type: ignore[list-item]
    d_biases: list[np.ndarray] = [None] * len(params.layers)  # type: ignore[list-item]
    delta = upstream
    for i in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[i]
        if cache.inputs[i].shape[1] != layer.weight.shape[1]:
            raise ValueError("cache does not match parameters (stale cache?)")
        dz = delta * activation_grad(layer.act, cache.pre_acts[i], cache.outputs[i])
        d_weights[i] = dz.T @ cache.inputs[i]
        d_biases[i] = dz.sum(axis=0)
        delta = dz @ layer.weight
    return Gradients(weights=d_weights, biases=d_biases, inputs=delta)


def sgd_step(params: MlpParams, grads: Gradients, cfg: SgdConfig) -> MlpParams:
    """Plain SGD, ``p <- p - lr * g``; no momentum, no weight decay."""
    for g in [*grads.weights, *grads.biases]:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient in sgd_step")
    layers = []
    for layer, dw, db in zip(params.layers, grads.weights, grads.biases):
        layers.append(
            Layer(
                layer.weight - cfg.learning_rate * dw,
                layer.bias - cfg.learning_rate * db,
                layer.act,
            )
        )
    return MlpParams(layers)
