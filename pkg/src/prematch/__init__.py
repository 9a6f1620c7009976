"""Density-ratio prematching for adversarial distribution translation.

The package estimates the importance ratio between a source and a target
sample distribution with a constrained kernel-mixture fit, then carries the
per-sample weights into adversarial training (plain or bidirectional with
cycle consistency) so the distributions are pre-matched before the
discriminator ever sees them.  Distribution distances, cohort analysis, and
a CLI for reproducible experiments round out the toolkit.
"""

__version__ = "0.1.0"

from .adversarial import GanRun, disc_loss, gen_loss, generate, train
from .cohorts import CohortSplit, ablation, split
from .cycle import CycleConfig, CycleSystem, cycle_loss, full_loss, train_cycle
from .data import ParseError, SampleSet, gen_gaussian, gen_uniform, read_samples, write_samples
from .kernels import KernelBasis, design_matrix, median_pairwise_distance, rbf
from .kliep import (
    ImportanceModel,
    KliepConfig,
    fit,
    fit_bidirectional,
    kliep_objective,
    weights,
)
from .metrics import DistanceReport, energy_distance, histogram, pool, report, wasserstein1
from .neural import MlpParams, SgdConfig, TrainingError, backward, forward, init_mlp, sgd_step
from .rng import RngStream

__all__ = [
    "CohortSplit",
    "CycleConfig",
    "CycleSystem",
    "DistanceReport",
    "GanRun",
    "ImportanceModel",
    "KernelBasis",
    "KliepConfig",
    "MlpParams",
    "ParseError",
    "RngStream",
    "SampleSet",
    "SgdConfig",
    "TrainingError",
    "ablation",
    "backward",
    "cycle_loss",
    "design_matrix",
    "disc_loss",
    "energy_distance",
    "fit",
    "fit_bidirectional",
    "forward",
    "full_loss",
    "gen_gaussian",
    "gen_loss",
    "gen_uniform",
    "generate",
    "histogram",
    "init_mlp",
    "kliep_objective",
    "median_pairwise_distance",
    "pool",
    "rbf",
    "read_samples",
    "report",
    "sgd_step",
    "split",
    "train",
    "train_cycle",
    "wasserstein1",
    "weights",
    "write_samples",
]
