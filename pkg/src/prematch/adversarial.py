"""Toy GAN training with optional per-sample importance weights.

The discriminator descends the negated two-term log loss; the fake term is
weighted by the importance of the source sample behind each generated row,
so with unit weights everything reduces exactly to the unweighted loss.
Weighted expectations are weighted means with raw weights (no per-batch
renormalization): the global weight mean is already 1 by the ratio-model
constraint, so minibatch losses stay unbiased.

Weights are computed once before training and carried as fixed loss
multipliers (density prematching); they travel with their samples through
batching and shuffling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SampleSet
from .neural import (
    Gradients,
    MlpParams,
    SgdConfig,
    TrainingError,
    backward,
    forward,
    init_mlp,
    sgd_step,
)
from .rng import INIT_STREAM, SHUFFLE_STREAM, RngStream

PROB_FLOOR = 1e-12

GEN_LR = 8e-3
DISC_LR = 4e-3
EPOCHS = 40
BATCH_SIZE = 200


def _clip_probs(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Floor/ceil to [PROB_FLOOR, 1 - PROB_FLOOR]; mask is 1 where not clipped."""
    d = np.asarray(d, dtype=np.float64).ravel()
    lo, hi = PROB_FLOOR, 1.0 - PROB_FLOOR
    mask = ((d > lo) & (d < hi)).astype(np.float64)
    return np.clip(d, lo, hi), mask


def disc_loss(
    d_real: np.ndarray,
    d_fake: np.ndarray,
    w_fake: np.ndarray | None = None,
    w_real: np.ndarray | None = None,
) -> float:
    """Negated discriminator objective (lower is better for the discriminator).

    ``-[mean w_real log d_real + mean w_fake log(1 - d_fake)]``; omitted
    weight vectors mean all-ones.
    """
    p_real, _ = _clip_probs(d_real)
    p_fake, _ = _clip_probs(d_fake)
    w_fake = np.ones_like(p_fake) if w_fake is None else np.asarray(w_fake, dtype=np.float64)
    w_real = np.ones_like(p_real) if w_real is None else np.asarray(w_real, dtype=np.float64)
    if w_fake.shape != p_fake.shape:
        raise ValueError(f"w_fake length {w_fake.shape} != d_fake length {p_fake.shape}")
    if w_real.shape != p_real.shape:
        raise ValueError(f"w_real length {w_real.shape} != d_real length {p_real.shape}")
    real_term = float(np.mean(w_real * np.log(p_real)))
    fake_term = float(np.mean(w_fake * np.log(1.0 - p_fake)))
    return -(real_term + fake_term)


def gen_loss(
    d_fake: np.ndarray, w_fake: np.ndarray | None = None, saturating: bool = False
) -> float:
    """Generator objective on its fake batch.

    Non-saturating (default): ``-mean w log d_fake``.  Saturating (the
    literal minimax form): ``mean w log(1 - d_fake)``.
    """
    p_fake, _ = _clip_probs(d_fake)
    w = np.ones_like(p_fake) if w_fake is None else np.asarray(w_fake, dtype=np.float64)
    if w.shape != p_fake.shape:
        raise ValueError(f"w_fake length {w.shape} != d_fake length {p_fake.shape}")
    if saturating:
        return float(np.mean(w * np.log(1.0 - p_fake)))
    return -float(np.mean(w * np.log(p_fake)))


def disc_loss_grads(
    d_real: np.ndarray,
    d_fake: np.ndarray,
    w_fake: np.ndarray | None = None,
    w_real: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``disc_loss`` w.r.t. the raw discriminator outputs."""
    p_real, m_real = _clip_probs(d_real)
    p_fake, m_fake = _clip_probs(d_fake)
    w_fake = np.ones_like(p_fake) if w_fake is None else np.asarray(w_fake, dtype=np.float64)
    w_real = np.ones_like(p_real) if w_real is None else np.asarray(w_real, dtype=np.float64)
    g_real = -(w_real / p_real) / p_real.size * m_real
    g_fake = (w_fake / (1.0 - p_fake)) / p_fake.size * m_fake
    return g_real, g_fake


def gen_loss_grad(
    d_fake: np.ndarray, w_fake: np.ndarray | None = None, saturating: bool = False
) -> np.ndarray:
    """Gradient of ``gen_loss`` w.r.t. the raw discriminator outputs."""
    p_fake, mask = _clip_probs(d_fake)
    w = np.ones_like(p_fake) if w_fake is None else np.asarray(w_fake, dtype=np.float64)
    if saturating:
        return -(w / (1.0 - p_fake)) / p_fake.size * mask
    return -(w / p_fake) / p_fake.size * mask


def add_grads(a: Gradients, b: Gradients) -> Gradients:
    """Sum parameter gradients of one net accumulated over different batches.

    The input-gradient fields belong to distinct batches, so the sum carries
    none.
    """
    return Gradients(
        weights=[x + y for x, y in zip(a.weights, b.weights)],
        biases=[x + y for x, y in zip(a.biases, b.biases)],
        inputs=np.empty((0, 0)),
    )


def discriminator_step(
    disc: MlpParams,
    gen: MlpParams,
    x_src: np.ndarray,
    x_tgt: np.ndarray,
    w_fake: np.ndarray,
    cfg: SgdConfig,
    w_real: np.ndarray | None = None,
) -> tuple[MlpParams, float, float, float]:
    """One discriminator update; returns (params, loss, mean d_real, mean d_fake)."""
    fake, _ = forward(gen, x_src)
    d_real, cache_r = forward(disc, x_tgt)
    d_fake, cache_f = forward(disc, fake)
    loss = disc_loss(d_real, d_fake, w_fake, w_real)
    g_real, g_fake = disc_loss_grads(d_real, d_fake, w_fake, w_real)
    grads = add_grads(
        backward(disc, cache_r, g_real.reshape(-1, 1)),
        backward(disc, cache_f, g_fake.reshape(-1, 1)),
    )
    return sgd_step(disc, grads, cfg), loss, float(d_real.mean()), float(d_fake.mean())


def generator_step(
    gen: MlpParams,
    disc: MlpParams,
    x_src: np.ndarray,
    w_fake: np.ndarray,
    cfg: SgdConfig,
    saturating: bool = False,
) -> tuple[MlpParams, float]:
    """One generator update through the (frozen) discriminator."""
    fake, cache_g = forward(gen, x_src)
    d_fake, cache_d = forward(disc, fake)
    loss = gen_loss(d_fake, w_fake, saturating)
    g_fake = gen_loss_grad(d_fake, w_fake, saturating)
    grads_d = backward(disc, cache_d, g_fake.reshape(-1, 1))
    grads_g = backward(gen, cache_g, grads_d.inputs)
    return sgd_step(gen, grads_g, cfg), loss


@dataclass
class EpochStats:
    disc_loss: float
    gen_loss: float
    mean_d_real: float
    mean_d_fake: float

    def to_dict(self) -> dict:
        return {
            "disc_loss": self.disc_loss,
            "gen_loss": self.gen_loss,
            "mean_d_real": self.mean_d_real,
            "mean_d_fake": self.mean_d_fake,
        }


@dataclass
class GanRun:
    mode: str
    generator: MlpParams
    discriminator: MlpParams
    gen_cfg: SgdConfig
    disc_cfg: SgdConfig
    importance: np.ndarray | None
    history: list[EpochStats] = field(default_factory=list)
    seed: int = 0

    def config_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "epochs": self.gen_cfg.epochs,
            "batch_size": self.gen_cfg.batch_size,
            "gen_lr": self.gen_cfg.learning_rate,
            "disc_lr": self.disc_cfg.learning_rate,
            "shuffle": self.gen_cfg.shuffle,
        }


def _check_importance(importance: np.ndarray, n: int) -> np.ndarray:
    w = np.asarray(importance, dtype=np.float64).ravel()
    if w.size != n:
        raise ValueError(f"importance length {w.size} != source count {n}")
    if np.any(w < 0):
        raise ValueError("importance weights must be nonnegative")
    if abs(float(w.mean()) - 1.0) > 1e-9:
        raise ValueError(f"importance weights must have mean 1, got {w.mean()!r}")
    return w


def train(
    source: SampleSet,
    target: SampleSet,
    mode: str = "vanilla",
    importance: np.ndarray | None = None,
    seed: int = 0,
    epochs: int = EPOCHS,
    batch_size: int = BATCH_SIZE,
    gen_lr: float = GEN_LR,
    disc_lr: float = DISC_LR,
    shuffle: bool = False,
    gen_hidden: tuple[int, ...] = (256, 256),
    disc_hidden: tuple[int, ...] = (256, 128),
    saturating: bool = False,
) -> GanRun:
    """Alternating one-discriminator-step / one-generator-step training.

    Batches are consecutive, index-aligned slices unless ``shuffle`` is set;
    partial trailing batches are dropped.  ``mode='kliep'`` requires an
    importance vector over the source samples; ``mode='vanilla'`` forbids one
    and trains with unit weights.
    """
    if source.d != target.d:
        raise ValueError(f"dimension mismatch: source d={source.d}, target d={target.d}")
    if mode not in ("vanilla", "kliep"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "kliep":
        if importance is None:
            raise ValueError("mode='kliep' requires importance weights")
        w_all = _check_importance(importance, source.n)
    else:
        if importance is not None:
            raise ValueError("mode='vanilla' does not take importance weights")
        w_all = np.ones(source.n)

    steps = min(source.n, target.n) // batch_size
    if steps < 1:
        raise ValueError(
            f"batch_size {batch_size} exceeds sample count {min(source.n, target.n)}"
        )

    d = source.d
    init_rng = RngStream(seed, stream_id=INIT_STREAM)
    gen = init_mlp([d, *gen_hidden, d], ["selu"] * len(gen_hidden) + ["linear"], init_rng, block=0)
    disc = init_mlp(
        [d, *disc_hidden, 1], ["selu"] * len(disc_hidden) + ["sigmoid"], init_rng, block=1
    )
    gen_cfg = SgdConfig(gen_lr, epochs=epochs, batch_size=batch_size, shuffle=shuffle)
    disc_cfg = SgdConfig(disc_lr, epochs=epochs, batch_size=batch_size, shuffle=shuffle)
    shuffle_rng = RngStream(seed, stream_id=SHUFFLE_STREAM)

    xs_all, xt_all = source.data, target.data
    history: list[EpochStats] = []
    for epoch in range(epochs):
        if shuffle:
            ps = shuffle_rng.permutation(source.n, block=2 * epoch)
            pt = shuffle_rng.permutation(target.n, block=2 * epoch + 1)
            xs, ws, xt = xs_all[ps], w_all[ps], xt_all[pt]
        else:
            xs, ws, xt = xs_all, w_all, xt_all
        dl_sum = gl_sum = dr_sum = df_sum = 0.0
        for step in range(steps):
            sl = slice(step * batch_size, (step + 1) * batch_size)
            x_src, w_b, x_tgt = xs[sl], ws[sl], xt[sl]
            disc, dl, dr, df = discriminator_step(disc, gen, x_src, x_tgt, w_b, disc_cfg)
            gen, gl = generator_step(gen, disc, x_src, w_b, gen_cfg, saturating)
            if not (np.isfinite(dl) and np.isfinite(gl)):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {step}: disc={dl}, gen={gl}"
                )
            dl_sum += dl
            gl_sum += gl
            dr_sum += dr
            df_sum += df
        history.append(
            EpochStats(dl_sum / steps, gl_sum / steps, dr_sum / steps, df_sum / steps)
        )
    return GanRun(
        mode=mode,
        generator=gen,
        discriminator=disc,
        gen_cfg=gen_cfg,
        disc_cfg=disc_cfg,
        importance=w_all if mode == "kliep" else None,
        history=history,
        seed=seed,
    )


def generate(gen: MlpParams, xs: SampleSet) -> SampleSet:
    """Deploy a trained generator on a sample set."""
    out, _ = forward(gen, xs.data)
    return SampleSet(out, tag=f"generated from {xs.tag or 'samples'}")
