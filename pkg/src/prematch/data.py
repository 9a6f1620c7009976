"""Sample sets, deterministic synthetic samplers, and plain-text file I/O.

A sample set is an n x d matrix of 64-bit reals plus a free-text provenance
tag.  On disk it is one sample per line, entries as decimal floats separated
by commas, no header; metadata lives in a sibling ``<name>.meta.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import RngStream


class ParseError(ValueError):
    """Malformed sample file; ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class SampleSet:
    """n x d matrix of finite 64-bit reals from one domain."""

    data: np.ndarray
    tag: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"sample data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample data contains non-finite entries")
        self.data = arr

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def gen_uniform(n: int, d: int, low: float, high: float, rng: RngStream) -> SampleSet:
    """n x d i.i.d. uniform draws on [low, high)."""
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if not low < high:
        raise ValueError(f"need low < high, got [{low}, {high})")
    u = rng.uniform(n * d).reshape(n, d)
    data = low + (high - low) * u
    return SampleSet(data, tag=f"uniform[{low},{high}) n={n} d={d} seed={rng.seed}")


def gen_gaussian(n: int, d: int, mu: float, sigma: float, rng: RngStream) -> SampleSet:
    """n x d i.i.d. normal(mu, sigma^2) draws (Box-Muller on the portable stream)."""
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if not sigma > 0:
        raise ValueError(f"need sigma > 0, got {sigma}")
    z = rng.normal(n * d).reshape(n, d)
    data = mu + sigma * z
    return SampleSet(data, tag=f"gaussian({mu},{sigma}) n={n} d={d} seed={rng.seed}")


def meta_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".meta.json")


def write_samples(samples: SampleSet, path: str | Path, extra_meta: dict | None = None) -> None:
    """Write samples as CSV text plus the sibling metadata JSON.

    Floats are written with ``repr``, the shortest string that parses back
    to the identical 64-bit value, so write-then-read is bit-exact.
    """
    path = Path(path)
    lines = []
    for row in samples.data:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")

    meta = {
        "tag": samples.tag,
        "n": samples.n,
        "d": samples.d,
        "generator": None,
        "params": None,
        "seed": None,
    }
    if extra_meta:
        meta.update(extra_meta)
    meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_samples(path: str | Path) -> SampleSet:
    """Read a sample CSV; the sibling meta file supplies the tag if present."""
    path = Path(path)
    rows: list[np.ndarray] = []
    d = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            try:
                row = np.array([float(t) for t in tokens], dtype=np.float64)
            except ValueError:
                raise ParseError(f"non-numeric token in {path.name!r}", line=lineno) from None
            if d is None:
                d = row.size
            elif row.size != d:
                raise ParseError(
                    f"row has {row.size} entries, expected {d}", line=lineno
                )
            rows.append(row)
    if not rows:
        raise ParseError(f"no samples in {path.name!r}")

    tag = ""
    mp = meta_path(path)
    if mp.exists():
        tag = json.loads(mp.read_text()).get("tag", "")
    return SampleSet(np.vstack(rows), tag=tag)
