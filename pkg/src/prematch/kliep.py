"""Kullback-Leibler importance estimation.

Fits a nonnegative mixture of RBF kernels ``w(x) = sum_l alpha_l phi_l(x)``
that maximizes the numerator-sample mean log-model subject to the
denominator-sample mean of ``w`` equaling 1, which minimizes
``KL(p_num || w * p_den)``.  Kernel centers sit in numerator samples; the
width is chosen by k-fold likelihood cross-validation over a geometric grid
scaled by the median pairwise distance.

The optimizer is projected gradient ascent: an additive step along
``A^T (1 / (A alpha))``, an exact projection onto the equality constraint,
clipping to the nonnegative cone, and a rescale back onto the constraint.
Step sizes are tried in descending order, keeping the first that does not
decrease the objective; the run stops when no step size helps, the
improvement falls below ``tol``, or ``max_iters`` is reached.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import SampleSet
from .kernels import KernelBasis, kernel_matrix, median_pairwise_distance, squared_distances
from .rng import RngStream

_LOG_FLOOR = 1e-12
_CENTERS_BLOCK = 0
_FOLDS_BLOCK = 1


@dataclass(frozen=True)
class KliepConfig:
    """Fit hyperparameters.

    ``sigma_grid`` holds multipliers applied to the median pairwise distance
    of the pooled samples; the products are the candidate kernel widths.
    """

    num_centers: int = 100
    sigma_grid: tuple[float, ...] = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)
    cv_folds: int = 5
    step_sizes: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
    max_iters: int = 5000
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.num_centers < 1:
            raise ValueError("num_centers must be >= 1")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if not self.sigma_grid:
            raise ValueError("sigma_grid must be nonempty")


@dataclass
class FitLog:
    iters: int
    objective: float
    clamped: bool
    degenerate: bool = False
    trace: list[float] = field(default_factory=list, repr=False)


@dataclass
class ImportanceModel:
    """Fitted density-ratio model: basis, nonnegative coefficients, provenance."""

    basis: KernelBasis
    alpha: np.ndarray
    direction: str
    fit_log: FitLog

    def weights(self, xs: SampleSet) -> np.ndarray:
        """Per-row ratio estimates ``sum_l alpha_l rbf(x_i, c_l, sigma)``; all >= 0."""
        if xs.d != self.basis.d:
            raise ValueError(f"dimension mismatch: samples d={xs.d}, model d={self.basis.d}")
        return kernel_matrix(xs.data, self.basis.centers, self.basis.sigma) @ self.alpha

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "sigma": self.basis.sigma,
            "centers": self.basis.centers.tolist(),
            "alpha": self.alpha.tolist(),
            "fit_log": {
                "iters": self.fit_log.iters,
                "objective": self.fit_log.objective,
                "clamped": self.fit_log.clamped,
                "degenerate": self.fit_log.degenerate,
            },
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ImportanceModel":
        raw = json.loads(Path(path).read_text())
        log = raw["fit_log"]
        return cls(
            basis=KernelBasis(np.array(raw["centers"], dtype=np.float64), raw["sigma"]),
            alpha=np.array(raw["alpha"], dtype=np.float64),
            direction=raw["direction"],
            fit_log=FitLog(
                iters=log["iters"],
                objective=log["objective"],
                clamped=log["clamped"],
                degenerate=log.get("degenerate", False),
            ),
        )


def weights(model: ImportanceModel, xs: SampleSet) -> np.ndarray:
    return model.weights(xs)


def kliep_objective(alpha: np.ndarray, a_num: np.ndarray) -> float:
    """Mean log model value over numerator rows, ``(1/n) sum_j log (A alpha)_j``.

    Raises if any model value is nonpositive (alpha left the feasible cone).
    """
    values = np.asarray(a_num, dtype=np.float64) @ np.asarray(alpha, dtype=np.float64)
    if np.any(values <= 0):
        raise ValueError("nonpositive model value; alpha is outside the feasible cone")
    return float(np.mean(np.log(values)))


def _clamped_objective(alpha: np.ndarray, a_num: np.ndarray) -> tuple[float, bool]:
    values = a_num @ alpha
    clamped = bool(np.any(values < _LOG_FLOOR))
    return float(np.mean(np.log(np.maximum(values, _LOG_FLOOR)))), clamped


def _project(alpha: np.ndarray, b_vec: np.ndarray) -> np.ndarray | None:
    """Equality projection, clip to alpha >= 0, rescale so b.alpha == 1."""
    bb = float(b_vec @ b_vec)
    alpha = alpha + b_vec * (1.0 - float(b_vec @ alpha)) / bb
    alpha = np.maximum(alpha, 0.0)
    scale = float(b_vec @ alpha)
    if scale <= 0.0:
        return None
    return alpha / scale


def fit_coefficients(
    a_num: np.ndarray,
    b_vec: np.ndarray,
    cfg: KliepConfig = KliepConfig(),
) -> tuple[np.ndarray, FitLog]:
    """Run the projected ascent on a precomputed design matrix.

    ``a_num`` is the numerator design matrix (n x b); ``b_vec`` holds the
    per-basis means of the denominator design matrix, so the constraint
    ``mean denominator weight == 1`` reads ``b_vec . alpha == 1``.
    """
    b = a_num.shape[1]
    start = _project(np.full(b, 1.0 / b), b_vec)
    if start is None:
        raise ValueError("constraint vector admits no feasible nonnegative alpha")
    alpha = start

    degenerate = bool(np.all(a_num == a_num[0]))
    if degenerate:
        obj, _ = _clamped_objective(alpha, a_num)
        return alpha, FitLog(iters=0, objective=obj, clamped=False, degenerate=True, trace=[obj])

    obj, _ = _clamped_objective(alpha, a_num)
    trace = [obj]
    clamped_at_accept = False
    iters = 0
    for _ in range(cfg.max_iters):
        grad = a_num.T @ (1.0 / np.maximum(a_num @ alpha, _LOG_FLOOR))
        accepted = None
        for eps in cfg.step_sizes:
            cand = _project(alpha + eps * grad, b_vec)
            if cand is None:
                continue
            cand_obj, cand_clamped = _clamped_objective(cand, a_num)
            if cand_obj >= obj:
                accepted = (cand, cand_obj, cand_clamped)
                break
        if accepted is None:
            break
        iters += 1
        improvement = accepted[1] - obj
        alpha, obj = accepted[0], accepted[1]
        clamped_at_accept = clamped_at_accept or accepted[2]
        trace.append(obj)
        if improvement < cfg.tol:
            break
    return alpha, FitLog(
        iters=iters, objective=obj, clamped=clamped_at_accept, degenerate=False, trace=trace
    )


def _cv_sigma(
    sq_num: np.ndarray,
    sq_den: np.ndarray,
    sigmas: np.ndarray,
    folds: int,
    cfg: KliepConfig,
    rng: RngStream,
) -> float:
    """Pick the width maximizing the mean held-out log model value."""
    n = sq_num.shape[0]
    order = rng.permutation(n, block=_FOLDS_BLOCK)
    fold_of = np.floor(np.arange(n) * folds / n).astype(int)

    scores = np.full(len(sigmas), -np.inf)
    for si, sigma in enumerate(sigmas):
        a_num = np.exp(-sq_num / (2.0 * sigma * sigma))
        b_vec = np.exp(-sq_den / (2.0 * sigma * sigma)).mean(axis=0)
        fold_scores = []
        for k in range(folds):
            train = order[fold_of != k]
            held = order[fold_of == k]
            alpha, _ = fit_coefficients(a_num[train], b_vec, cfg)
            held_values = np.maximum(a_num[held] @ alpha, _LOG_FLOOR)
            fold_scores.append(float(np.mean(np.log(held_values))))
        scores[si] = float(np.mean(fold_scores))
    return float(sigmas[int(np.argmax(scores))])


def fit(
    numerator: SampleSet,
    denominator: SampleSet,
    cfg: KliepConfig = KliepConfig(),
    rng: RngStream = RngStream(0, stream_id=3),
    direction: str = "numerator_over_denominator",
) -> ImportanceModel:
    """Fit the ratio ``p_numerator / p_denominator``.

    Returns a model whose coefficients are nonnegative and whose mean weight
    over the denominator set equals 1 to within 1e-9.
    """
    if numerator.d != denominator.d:
        raise ValueError(f"dimension mismatch: {numerator.d} vs {denominator.d}")
    if numerator.n < cfg.cv_folds or denominator.n < cfg.cv_folds:
        raise ValueError(f"need at least cv_folds={cfg.cv_folds} samples in each set")

    b = min(cfg.num_centers, numerator.n)
    center_idx = rng.choice(numerator.n, b, block=_CENTERS_BLOCK)
    centers = numerator.data[center_idx]

    pooled = np.vstack([numerator.data, denominator.data])
    med = median_pairwise_distance(pooled)
    sigmas = np.asarray(cfg.sigma_grid, dtype=np.float64) * med

    sq_num = squared_distances(numerator.data, centers)
    sq_den = squared_distances(denominator.data, centers)

    if len(sigmas) == 1:
        sigma = float(sigmas[0])
    else:
        sigma = _cv_sigma(sq_num, sq_den, sigmas, cfg.cv_folds, cfg, rng)

    a_num = np.exp(-sq_num / (2.0 * sigma * sigma))
    b_vec = np.exp(-sq_den / (2.0 * sigma * sigma)).mean(axis=0)
    alpha, log = fit_coefficients(a_num, b_vec, cfg)
    return ImportanceModel(
        basis=KernelBasis(centers, sigma), alpha=alpha, direction=direction, fit_log=log
    )


def fit_bidirectional(
    source: SampleSet,
    target: SampleSet,
    cfg: KliepConfig = KliepConfig(),
    rng: RngStream = RngStream(0, stream_id=3),
) -> tuple[ImportanceModel, ImportanceModel]:
    """Fit both ratio directions from one sample pair.

    Returns ``(target/source model evaluated on source samples,
    source/target model evaluated on target samples)``.  The two fits share
    nothing beyond their immutable inputs and the stream value.
    """
    w_model = fit(target, source, cfg, rng, direction="target_over_source")
    psi_model = fit(source, target, cfg, rng, direction="source_over_target")
    return w_model, psi_model
