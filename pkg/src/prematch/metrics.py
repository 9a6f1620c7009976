"""Distribution comparison: pooled moments, Wasserstein-1, energy distance.

Sample sets are pooled (all n x d entries flattened row-major) before
comparison; this is the reduction that takes high-dimensional sample vectors
to the scalar histograms the distances are defined on.

Both distances run in O(n log n): Wasserstein-1 integrates the gap between
empirical quantile functions over merged quantile breakpoints, and the
energy-distance pair terms come from sorted prefix-sum algebra rather than
the O(n^2) double loop (identical value, different runtime).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SampleSet


def pool(samples: SampleSet) -> np.ndarray:
    """Flatten all entries into one scalar array, row-major."""
    return samples.data.reshape(-1)


def _as_nonempty_1d(x: np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError(f"{name} must be nonempty")
    return x


def wasserstein1(a: np.ndarray, b: np.ndarray) -> float:
    """Empirical 1-Wasserstein distance between two scalar samples.

    Equal lengths reduce to ``mean |sorted_a - sorted_b|``.  Otherwise the
    quantile-function gap is integrated piecewise over the merged breakpoints
    k/n and k/m, handled in integer units of 1/(n*m) so interval-to-quantile
    indexing is exact.
    """
    a = np.sort(_as_nonempty_1d(a, "a"))
    b = np.sort(_as_nonempty_1d(b, "b"))
    n, m = a.size, b.size
    if n == m:
        return float(np.mean(np.abs(a - b)))
    breaks = np.union1d(np.arange(1, n, dtype=np.int64) * m,
                        np.arange(1, m, dtype=np.int64) * n)
    edges = np.concatenate(([0], breaks, [np.int64(n) * m]))
    lo = edges[:-1]
    widths = np.diff(edges).astype(np.float64) / (float(n) * float(m))
    return float(np.sum(widths * np.abs(a[lo // m] - b[lo // n])))


def _mean_abs_within(x_sorted: np.ndarray) -> float:
    """Mean |x_i - x_j| over all ordered pairs, via the sorted-gap identity."""
    n = x_sorted.size
    idx = np.arange(n, dtype=np.float64)
    pair_sum = float(np.sum(x_sorted * (2.0 * idx - n + 1.0)))  # sum over i<j of gaps
    return 2.0 * pair_sum / (float(n) * float(n))


def _mean_abs_cross(a_sorted: np.ndarray, b_sorted: np.ndarray) -> float:
    n, m = a_sorted.size, b_sorted.size
    prefix = np.concatenate(([0.0], np.cumsum(a_sorted)))
    total = prefix[-1]
    k = np.searchsorted(a_sorted, b_sorted, side="left").astype(np.float64)
    pk = prefix[np.searchsorted(a_sorted, b_sorted, side="left")]
    sums = k * b_sorted - pk + (total - pk) - (n - k) * b_sorted
    return float(np.sum(sums)) / (float(n) * float(m))


def energy_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Rooted energy distance ``sqrt(2 E|X-Y| - E|X-X'| - E|Y-Y'|)``."""
    a = np.sort(_as_nonempty_1d(a, "a"))
    b = np.sort(_as_nonempty_1d(b, "b"))
    cross = _mean_abs_cross(a, b)
    within_a = _mean_abs_within(a)
    within_b = _mean_abs_within(b)
    value = 2.0 * cross - within_a - within_b
    return float(np.sqrt(max(value, 0.0)))


@dataclass
class DistanceReport:
    """Pooled moments of two sample sets plus both distances between them."""

    mu_a: float
    sigma_a: float
    mu_b: float
    sigma_b: float
    wasserstein: float
    energy: float
    n_pooled_a: int
    n_pooled_b: int

    def to_dict(self) -> dict:
        return {
            "mu_a": self.mu_a,
            "sigma_a": self.sigma_a,
            "mu_b": self.mu_b,
            "sigma_b": self.sigma_b,
            "wasserstein": self.wasserstein,
            "energy": self.energy,
            "n_pooled_a": self.n_pooled_a,
            "n_pooled_b": self.n_pooled_b,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")


def report(a: SampleSet, b: SampleSet) -> DistanceReport:
    pa, pb = pool(a), pool(b)
    return DistanceReport(
        mu_a=float(pa.mean()),
        sigma_a=float(pa.std()),
        mu_b=float(pb.mean()),
        sigma_b=float(pb.std()),
        wasserstein=wasserstein1(pa, pb),
        energy=energy_distance(pa, pb),
        n_pooled_a=pa.size,
        n_pooled_b=pb.size,
    )


def histogram(series: list[tuple[str, np.ndarray]], bins: int = 50) -> dict:
    """Fixed-width bin counts over the joint range of all series."""
    if not series:
        raise ValueError("need at least one series")
    lo = min(float(np.min(values)) for _, values in series)
    hi = max(float(np.max(values)) for _, values in series)
    if hi == lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    out = {"bin_edges": edges.tolist(), "series": {}}
    for label, values in series:
        counts, _ = np.histogram(np.asarray(values, dtype=np.float64).ravel(), bins=edges)
        out["series"][label] = counts.tolist()
    return out


_SVG_COLORS = ("#4878cf", "#d65f5f", "#ee854a", "#6acc65", "#956cb4", "#8c613c")


def histogram_svg(hist: dict, title: str = "") -> str:
    """Static SVG overlay plot of a ``histogram`` result.

    The output is a pure function of its inputs (no timestamps or random
    ids), so rerunning a report produces byte-identical files.
    """
    width, height = 720, 440
    ml, mr, mt, mb = 60, 20, 40, 50
    plot_w, plot_h = width - ml - mr, height - mt - mb

    edges = hist["bin_edges"]
    labels = list(hist["series"].keys())
    max_count = max(max(c) for c in hist["series"].values()) or 1
    lo, hi = edges[0], edges[-1]

    def x_px(v: float) -> float:
        return ml + (v - lo) / (hi - lo) * plot_w

    def y_px(c: float) -> float:
        return mt + plot_h - c / max_count * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>'
        )
    for si, label in enumerate(labels):
        color = _SVG_COLORS[si % len(_SVG_COLORS)]
        counts = hist["series"][label]
        for bi, count in enumerate(counts):
            if count <= 0:
                continue
            x0, x1 = x_px(edges[bi]), x_px(edges[bi + 1])
            y = y_px(count)
            parts.append(
                f'<rect x="{x0:.2f}" y="{y:.2f}" width="{x1 - x0:.2f}" '
                f'height="{mt + plot_h - y:.2f}" fill="{color}" fill-opacity="0.40"/>'
            )
        ly = mt + 16 + 18 * si
        parts.append(
            f'<rect x="{ml + plot_w - 150}" y="{ly - 10}" width="12" height="12" '
            f'fill="{color}" fill-opacity="0.60"/>'
        )
        parts.append(
            f'<text x="{ml + plot_w - 132}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{label}</text>'
        )
    axis_y = mt + plot_h
    parts.append(
        f'<line x1="{ml}" y1="{axis_y}" x2="{ml + plot_w}" y2="{axis_y}" '
        f'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{axis_y}" stroke="black" stroke-width="1"/>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        x = x_px(v)
        parts.append(
            f'<line x1="{x:.2f}" y1="{axis_y}" x2="{x:.2f}" y2="{axis_y + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{axis_y + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{v:.3g}</text>'
        )
    parts.append(
        f'<text x="{ml - 8}" y="{mt + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{max_count}</text>'
    )
    parts.append(
        f'<text x="{ml - 8}" y="{axis_y + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">0</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
