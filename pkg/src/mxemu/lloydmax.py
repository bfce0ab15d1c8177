"""Cluster-wise Lloyd-Max scalar quantizer used as a near-optimal baseline.

Groups are clustered by (min-max normalized) mean and kurtosis with a
seeded k-means; one codebook per cluster is then fitted to the cluster's
pooled raw values by Lloyd iterations (nearest-level assignment alternating
with conditional-mean updates, empty cells keeping their previous level).
Everything is deterministic under a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import formats, scaling
from .analysis import ErrorReport, GroupError, GroupStats, group_stats
from .errors import ConfigError, DataError
from .quantizer import QuantConfig, _grouped

__all__ = [
    "LloydConfig",
    "Codebook",
    "asym_grid_codebook",
    "cluster_groups",
    "lloyd_fit",
    "reference_quantize",
]


@dataclass(frozen=True)
class LloydConfig:
    n_clusters: int = 16
    n_iters: int = 100
    n_levels: int = 16  # 4-bit codebook
    seed: int = 0

    def __post_init__(self):
        if self.n_levels < 2:
            raise ConfigError("need at least 2 codebook levels")
        if self.n_clusters < 1:
            raise ConfigError("need at least 1 cluster")


@dataclass
class Codebook:
    """Sorted reconstruction levels; cell boundaries are midpoints."""

    levels: np.ndarray

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=float)
        if self.levels.ndim != 1 or self.levels.size < 1:
            raise ConfigError("codebook levels must be a nonempty 1-D array")
        if np.any(np.diff(self.levels) <= 0):
            raise ConfigError("codebook levels must be strictly increasing")

    @property
    def boundaries(self) -> np.ndarray:
        return (self.levels[1:] + self.levels[:-1]) / 2

    def assign(self, values) -> np.ndarray:
        return np.digitize(np.asarray(values, dtype=float), self.boundaries)

    def quantize_values(self, values) -> np.ndarray:
        return self.levels[self.assign(values)]


def asym_grid_codebook(values, fmt=None, scale_mode=None) -> Codebook:
    """Codebook spanned by a format grid under the values' asymmetric scales.

    Levels are the distinct dequantized values the asymmetric format could
    produce for this pool treated as a single group: negative magnitudes
    times the negative scale, zero, positive magnitudes times the positive
    scale.
    """
    fmt = fmt or formats.get_format("fp4_e2m1")
    scale_mode = scale_mode or scaling.get_scale_mode("fp8e5m2")
    pair = scaling.asym_scales(np.asarray(values, dtype=float).ravel(), scale_mode, fmt)
    mags = formats.grid(fmt)
    mags = mags[mags > 0]
    levels = np.unique(np.concatenate([-mags[::-1] * pair.neg_scale, [0.0], mags * pair.pos_scale]))
    return Codebook(levels)


def _kmeans_1d_features(feats: np.ndarray, k: int, seed: int,
                        iters: int = 50, tol: float = 1e-9) -> np.ndarray:
    """Seeded k-means on an (n, 2) feature matrix; returns labels."""
    n = feats.shape[0]
    k = min(k, n)
    rng = np.random.default_rng(seed)
    centroids = feats[rng.choice(n, size=k, replace=False)]
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(iters):
        d2 = ((feats[:, None, :] - centroids[None, :, :]) ** 2).sum(-1)
        labels = d2.argmin(axis=1)
        new = centroids.copy()
        for c in range(k):
            members = feats[labels == c]
            if len(members):
                new[c] = members.mean(axis=0)
        move = np.abs(new - centroids).max()
        centroids = new
        if move < tol:
            break
    d2 = ((feats[:, None, :] - centroids[None, :, :]) ** 2).sum(-1)
    return d2.argmin(axis=1)


def _minmax(v: np.ndarray) -> np.ndarray:
    lo, hi = v.min(), v.max()
    return np.zeros_like(v) if hi == lo else (v - lo) / (hi - lo)


def cluster_groups(stats: list[GroupStats], cfg: LloydConfig) -> np.ndarray:
    """Cluster groups on normalized (mean, kurtosis); returns a label per group.

    Groups with undefined kurtosis land in a dedicated extra cluster labeled
    cfg.n_clusters.
    """
    if not stats:
        raise DataError("cluster_groups: empty stats list")
    labels = np.full(len(stats), cfg.n_clusters, dtype=np.int64)
    defined = [i for i, s in enumerate(stats) if s.kurtosis is not None]
    if not defined:
        return labels
    means = np.array([stats[i].mean for i in defined])
    kurts = np.array([stats[i].kurtosis for i in defined])
    feats = np.stack([_minmax(means), _minmax(kurts)], axis=1)
    labels[defined] = _kmeans_1d_features(feats, cfg.n_clusters, cfg.seed)
    return labels


def lloyd_fit(values, cfg: LloydConfig, init: Codebook | None = None):
    """Lloyd iterations on a pool of values.

    Returns (codebook, mse_trace); the trace holds the pool MSE after each
    update step and is monotone non-increasing. Empty cells keep their
    previous level, so level count and ordering are stable.
    """
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size == 0:
        raise DataError("lloyd_fit: empty values")
    if init is None:
        uniq = np.unique(vals)
        if uniq.size <= cfg.n_levels:
            # few distinct values: start (and stay) at exact reconstruction
            levels = uniq
            if levels.size == 1:
                levels = np.array([levels[0], levels[0] + max(abs(levels[0]), 1.0)])
        else:
            probe = (np.arange(cfg.n_levels) + 0.5) / cfg.n_levels
            levels = np.unique(np.quantile(vals, probe))
        cb = Codebook(levels)
    else:
        cb = Codebook(init.levels.copy())
    trace = []
    levels = cb.levels.copy()
    for _ in range(cfg.n_iters):
        idx = Codebook(levels).assign(vals)
        for c in range(levels.size):
            members = vals[idx == c]
            if members.size:
                levels[c] = members.mean()
        cb = Codebook(levels)
        trace.append(float(np.mean((vals - cb.quantize_values(vals)) ** 2)))
    return cb, trace


def reference_quantize(
    x,
    group_size=None,
    cfg: LloydConfig = LloydConfig(),
    axis: int = -1,
    init: str = "quantile",
    init_format=None,
    init_scale_mode=None,
):
    """Cluster-wise Lloyd-Max quantization of a tensor.

    init="quantile" seeds each cluster codebook from value quantiles;
    init="format_grid" seeds it from an asymmetric format grid fitted to the
    cluster pool (see asym_grid_codebook), which guarantees the final MSE
    does not exceed that format's row-wise MSE on the pool.
    Returns (quantized tensor, ErrorReport).
    """
    if init not in ("quantile", "format_grid"):
        raise ConfigError(f"unknown init {init!r}")
    arr = np.asarray(x, dtype=float)
    stats = group_stats(arr, group_size, axis)
    labels = cluster_groups(stats, cfg)
    qcfg = QuantConfig(formats.get_format("fp4_e2m1"), group_size, axis=axis)
    moved, xg, gs = _grouped(arr, qcfg)
    flat_groups = xg.reshape(-1, gs)
    out_groups = np.empty_like(flat_groups)
    for label in np.unique(labels):
        sel = labels == label
        pool = flat_groups[sel].ravel()
        if init == "format_grid":
            start = asym_grid_codebook(pool, init_format, init_scale_mode)
        else:
            start = None
        cb, _ = lloyd_fit(pool, cfg, init=start)
        out_groups[sel] = cb.quantize_values(flat_groups[sel])
    sq = (flat_groups - out_groups) ** 2
    per_group_sq = np.cumsum(sq, axis=-1)[:, -1]
    total = float(np.cumsum(per_group_sq)[-1])
    report = ErrorReport(
        total / arr.size,
        0.0,
        total,
        [GroupError(i, 0.0, float(per_group_sq[i])) for i in range(per_group_sq.size)],
    )
    out = out_groups.reshape(xg.shape).reshape(moved.shape)
    return np.ascontiguousarray(np.moveaxis(out, -1, axis)), report
