"""Importance-weighted bidirectional adversarial training with cycle consistency.

Two generators translate in opposite directions between a source and a
target domain; each direction has its own discriminator.  Real and fake
terms carry the importance weights of the samples they are evaluated on
(ratio weights estimated on inputs), and both generators additionally pay a
weighted L1 reconstruction penalty for the round trips
``g_s(g_r(x_s)) ~ x_s`` and ``g_r(g_s(x_r)) ~ x_r``.

With unit weights and ``lambda_cyc = 0`` the system decays exactly to two
independent GANs; the trainer takes that code path literally, so the
reduction is bit-exact under matched seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adversarial import (
    add_grads,
    discriminator_step,
    gen_loss,
    gen_loss_grad,
    generator_step,
)
from .data import SampleSet
from .kliep import ImportanceModel
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


@dataclass(frozen=True)
class CycleConfig:
    epochs: int = 60
    batch_size: int = 100
    gen_lr: float = 8e-3
    disc_lr: float = 4e-3
    lambda_cyc: float = 10.0
    gen_hidden: tuple[int, ...] = (64, 64)
    disc_hidden: tuple[int, ...] = (64, 64)
    shuffle: bool = False
    saturating: bool = False

    def __post_init__(self) -> None:
        if self.lambda_cyc < 0:
            raise ValueError("lambda_cyc must be >= 0")


@dataclass
class CycleSystem:
    """Both translators, both discriminators, and the fixed sample weights."""

    g_r: MlpParams  # source -> target
    g_s: MlpParams  # target -> source
    d_r: MlpParams
    d_s: MlpParams
    w_source: np.ndarray
    w_target: np.ndarray
    lambda_cyc: float

    def __post_init__(self) -> None:
        d = self.g_r.d_in
        if (self.g_r.d_out, self.g_s.d_in, self.g_s.d_out) != (d, d, d):
            raise ValueError("generators are not dimension-compatible")
        if self.d_r.d_in != d or self.d_s.d_in != d:
            raise ValueError("discriminators are not dimension-compatible")
        for name, w in (("w_source", self.w_source), ("w_target", self.w_target)):
            w = np.asarray(w, dtype=np.float64).ravel()
            if np.any(w < 0):
                raise ValueError(f"{name} has negative entries")
            if abs(float(w.mean()) - 1.0) > 1e-9:
                raise ValueError(f"{name} must have mean 1, got {w.mean()!r}")


def _weighted_l1(recon: np.ndarray, original: np.ndarray, w: np.ndarray) -> float:
    norms = np.abs(recon - original).sum(axis=1)
    return float(np.mean(w * norms))


def cycle_loss(
    sys: CycleSystem,
    x_s: np.ndarray,
    w_s: np.ndarray,
    x_r: np.ndarray,
    w_r: np.ndarray,
) -> float:
    """Weighted mean L1 reconstruction error of both round trips."""
    if x_s.shape[0] != np.asarray(w_s).size or x_r.shape[0] != np.asarray(w_r).size:
        raise ValueError("weights must pair with their batches")
    back_s, _ = forward(sys.g_s, forward(sys.g_r, x_s)[0])
    back_r, _ = forward(sys.g_r, forward(sys.g_s, x_r)[0])
    return _weighted_l1(back_s, x_s, w_s) + _weighted_l1(back_r, x_r, w_r)


def full_loss(
    sys: CycleSystem,
    x_s: np.ndarray,
    w_s: np.ndarray,
    x_r: np.ndarray,
    w_r: np.ndarray,
    saturating: bool = False,
) -> tuple[dict, dict]:
    """All loss components for one batch pair: (discriminator, generator)."""
    from .adversarial import disc_loss

    fake_r, _ = forward(sys.g_r, x_s)
    fake_s, _ = forward(sys.g_s, x_r)
    d_real_r, _ = forward(sys.d_r, x_r)
    d_fake_r, _ = forward(sys.d_r, fake_r)
    d_real_s, _ = forward(sys.d_s, x_s)
    d_fake_s, _ = forward(sys.d_s, fake_s)

    disc = {
        "d_r": disc_loss(d_real_r, d_fake_r, w_fake=w_s, w_real=w_r),
        "d_s": disc_loss(d_real_s, d_fake_s, w_fake=w_r, w_real=w_s),
    }
    cyc = cycle_loss(sys, x_s, w_s, x_r, w_r)
    adv_r = gen_loss(d_fake_r, w_s, saturating)
    adv_s = gen_loss(d_fake_s, w_r, saturating)
    gen = {
        "g_r_adv": adv_r,
        "g_s_adv": adv_s,
        "cycle": cyc,
        "total": adv_r + adv_s + sys.lambda_cyc * cyc,
    }
    return disc, gen


def generator_loss_and_grads(
    sys: CycleSystem,
    x_s: np.ndarray,
    w_s: np.ndarray,
    x_r: np.ndarray,
    w_r: np.ndarray,
    saturating: bool = False,
) -> tuple[dict, Gradients, Gradients]:
    """Generator loss components and exact gradients for both generators.

    Returns ``(losses, grads_g_r, grads_g_s)`` with losses keyed
    ``g_r_adv / g_s_adv / cycle / total``.
    """
    n_s, n_r = x_s.shape[0], x_r.shape[0]
    lam = sys.lambda_cyc
    w_s = np.asarray(w_s, dtype=np.float64).ravel()
    w_r = np.asarray(w_r, dtype=np.float64).ravel()

    fake_r, cache_gr = forward(sys.g_r, x_s)
    d_fake_r, cache_dr = forward(sys.d_r, fake_r)
    back_s, cache_s_outer = forward(sys.g_s, fake_r)  # g_s(g_r(x_s))

    fake_s, cache_gs = forward(sys.g_s, x_r)
    d_fake_s, cache_ds = forward(sys.d_s, fake_s)
    back_r, cache_r_outer = forward(sys.g_r, fake_s)  # g_r(g_s(x_r))

    adv_r = gen_loss(d_fake_r, w_s, saturating)
    adv_s = gen_loss(d_fake_s, w_r, saturating)
    cyc_s = _weighted_l1(back_s, x_s, w_s)
    cyc_r = _weighted_l1(back_r, x_r, w_r)
    losses = {
        "g_r_adv": adv_r,
        "g_s_adv": adv_s,
        "cycle": cyc_s + cyc_r,
        "total": adv_r + adv_s + lam * (cyc_s + cyc_r),
    }

    # upstream gradients of the cycle terms at the reconstructions
    up_back_s = lam * np.sign(back_s - x_s) * (w_s[:, None] / n_s)
    up_back_r = lam * np.sign(back_r - x_r) * (w_r[:, None] / n_r)

    # outer legs: parameter grads of the outer net plus the gradient entering
    # the inner net's output
    bw_s_outer = backward(sys.g_s, cache_s_outer, up_back_s)
    bw_r_outer = backward(sys.g_r, cache_r_outer, up_back_r)

    up_fake_r = (
        backward(sys.d_r, cache_dr, gen_loss_grad(d_fake_r, w_s, saturating).reshape(-1, 1)).inputs
        + bw_s_outer.inputs
    )
    grads_g_r = add_grads(backward(sys.g_r, cache_gr, up_fake_r), bw_r_outer)

    up_fake_s = (
        backward(sys.d_s, cache_ds, gen_loss_grad(d_fake_s, w_r, saturating).reshape(-1, 1)).inputs
        + bw_r_outer.inputs
    )
    grads_g_s = add_grads(backward(sys.g_s, cache_gs, up_fake_s), bw_s_outer)

    return losses, grads_g_r, grads_g_s


def _resolve_weights(
    source: SampleSet,
    target: SampleSet,
    models: tuple[ImportanceModel, ImportanceModel] | None,
) -> tuple[np.ndarray, np.ndarray]:
    if models is None:
        return np.ones(source.n), np.ones(target.n)
    w_model, psi_model = models
    return w_model.weights(source), psi_model.weights(target)


def train_cycle(
    source: SampleSet,
    target: SampleSet,
    models: tuple[ImportanceModel, ImportanceModel] | None = None,
    cfg: CycleConfig = CycleConfig(),
    seed: int = 0,
) -> tuple[CycleSystem, list[dict]]:
    """Alternating d_r, d_s, then g_r, g_s updates per batch.

    ``models`` are the two fitted ratio directions from ``fit_bidirectional``
    (target/source weights applied to source samples, source/target weights
    to target samples); ``None`` trains with unit weights.
    """
    if source.d != target.d:
        raise ValueError(f"dimension mismatch: source d={source.d}, target d={target.d}")
    w_source, w_target = _resolve_weights(source, target, models)

    d = source.d
    init_rng = RngStream(seed, stream_id=INIT_STREAM)
    gen_sizes = [d, *cfg.gen_hidden, d]
    gen_acts = ["selu"] * len(cfg.gen_hidden) + ["linear"]
    disc_sizes = [d, *cfg.disc_hidden, 1]
    disc_acts = ["selu"] * len(cfg.disc_hidden) + ["sigmoid"]
    # both generators (and both discriminators) share initial draws, which
    # makes swapping the two domains an exact relabeling of the four nets
    g_r = init_mlp(gen_sizes, gen_acts, init_rng, block=0)
    g_s = init_mlp(gen_sizes, gen_acts, init_rng, block=0)
    d_r = init_mlp(disc_sizes, disc_acts, init_rng, block=1)
    d_s = init_mlp(disc_sizes, disc_acts, init_rng, block=1)

    sys = CycleSystem(g_r, g_s, d_r, d_s, w_source, w_target, cfg.lambda_cyc)

    steps = min(source.n, target.n) // cfg.batch_size
    if steps < 1:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds the smaller sample count")
    gen_cfg = SgdConfig(cfg.gen_lr, epochs=cfg.epochs, batch_size=cfg.batch_size,
                        shuffle=cfg.shuffle)
    disc_cfg = SgdConfig(cfg.disc_lr, epochs=cfg.epochs, batch_size=cfg.batch_size,
                         shuffle=cfg.shuffle)
    shuffle_rng = RngStream(seed, stream_id=SHUFFLE_STREAM)

    history: list[dict] = []
    for epoch in range(cfg.epochs):
        if cfg.shuffle:
            ps = shuffle_rng.permutation(source.n, block=2 * epoch)
            pt = shuffle_rng.permutation(target.n, block=2 * epoch + 1)
            xs, ws = source.data[ps], w_source[ps]
            xr, wr = target.data[pt], w_target[pt]
        else:
            xs, ws, xr, wr = source.data, w_source, target.data, w_target
        sums = {"d_r": 0.0, "d_s": 0.0, "gen_total": 0.0, "cycle": 0.0}
        for step in range(steps):
            sl = slice(step * cfg.batch_size, (step + 1) * cfg.batch_size)
            x_s_b, w_s_b, x_r_b, w_r_b = xs[sl], ws[sl], xr[sl], wr[sl]

            new_d_r, dl_r, _, _ = discriminator_step(
                sys.d_r, sys.g_r, x_s_b, x_r_b, w_s_b, disc_cfg, w_real=w_r_b
            )
            sys.d_r = new_d_r
            new_d_s, dl_s, _, _ = discriminator_step(
                sys.d_s, sys.g_s, x_r_b, x_s_b, w_r_b, disc_cfg, w_real=w_s_b
            )
            sys.d_s = new_d_s

            if cfg.lambda_cyc == 0.0:
                sys.g_r, gl_r = generator_step(
                    sys.g_r, sys.d_r, x_s_b, w_s_b, gen_cfg, cfg.saturating
                )
                sys.g_s, gl_s = generator_step(
                    sys.g_s, sys.d_s, x_r_b, w_r_b, gen_cfg, cfg.saturating
                )
                gl_total, cyc = gl_r + gl_s, 0.0
            else:
                losses, grads_g_r, grads_g_s = generator_loss_and_grads(
                    sys, x_s_b, w_s_b, x_r_b, w_r_b, cfg.saturating
                )
                gl_total, cyc = losses["total"], losses["cycle"]
                sys.g_r = sgd_step(sys.g_r, grads_g_r, gen_cfg)
                sys.g_s = sgd_step(sys.g_s, grads_g_s, gen_cfg)

            if not (np.isfinite(dl_r) and np.isfinite(dl_s) and np.isfinite(gl_total)):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {step}: "
                    f"d_r={dl_r}, d_s={dl_s}, gen={gl_total}"
                )
            sums["d_r"] += dl_r
            sums["d_s"] += dl_s
            sums["gen_total"] += gl_total
            sums["cycle"] += cyc
        history.append({k: v / steps for k, v in sums.items()})
    return sys, history
