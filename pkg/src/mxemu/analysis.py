"""Group statistics and quantization-error analysis.

Kurtosis here is the plain fourth standardized moment E[(v-u)^4]/sigma^4
with population variance and no excess correction, so any distribution is
bounded below by 1 and a Gaussian sits at 3. Quantization error decomposes
exhaustively into a clamping part (elements whose scaled magnitude exceeds
the format's max normal, or whose zero-point code saturates) and a rounding
part; the report's mse is defined as (clamp + round) / count so the
decomposition identity is exact in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import formats, scaling
from .errors import ConfigError, DataError
from .quantizer import QuantConfig, QuantizedTensor, dequantize, quantize

__all__ = [
    "GroupStats",
    "FiveNumber",
    "StatsSummary",
    "GroupError",
    "ErrorReport",
    "group_stats",
    "stats_summary",
    "mse",
    "error_decomposition",
]


@dataclass(frozen=True)
class GroupStats:
    group_index: int
    mean: float
    kurtosis: float | None  # None when the group is constant (zero variance)


def group_stats(x, group_size=None, axis=-1) -> list[GroupStats]:
    """Per-group mean and kurtosis along the grouping axis."""
    cfg = QuantConfig(formats.get_format("fp4_e2m1"), group_size, axis=axis)
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        raise DataError("empty tensor")
    from .quantizer import _grouped  # shares the divisibility contract

    _, xg, _ = _grouped(arr, cfg)
    flat = xg.reshape(-1, xg.shape[-1])
    mu = flat.mean(axis=1)
    centered = flat - mu[:, None]
    sigma = np.sqrt((centered**2).mean(axis=1))
    out = []
    for i in range(flat.shape[0]):
        if sigma[i] > 0:
            z = centered[i] / sigma[i]  # normalize first: scale-invariant
            kurt = float((z**4).mean())
        else:
            kurt = None
        out.append(GroupStats(i, float(mu[i]), kurt))
    return out


@dataclass(frozen=True)
class FiveNumber:
    min: float
    q1: float
    median: float
    q3: float
    max: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def as_dict(self):
        return {
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.max,
        }


@dataclass(frozen=True)
class StatsSummary:
    mean: FiveNumber
    kurtosis: FiveNumber
    n_groups: int
    undefined_kurtosis: int

    def as_dict(self):
        return {
            "mean": self.mean.as_dict(),
            "kurtosis": self.kurtosis.as_dict(),
            "n_groups": self.n_groups,
            "undefined_kurtosis": self.undefined_kurtosis,
        }


def _five(values: np.ndarray) -> FiveNumber:
    q = np.percentile(values, [0, 25, 50, 75, 100], method="linear")
    return FiveNumber(*map(float, q))


def stats_summary(stats: list[GroupStats]) -> StatsSummary:
    """Five-number summaries of group means and (defined) kurtoses."""
    if not stats:
        raise DataError("stats_summary: empty stats list")
    means = np.array([s.mean for s in stats])
    kurts = np.array([s.kurtosis for s in stats if s.kurtosis is not None])
    undefined = len(stats) - len(kurts)
    if kurts.size == 0:
        raise DataError("stats_summary: kurtosis undefined for every group")
    return StatsSummary(_five(means), _five(kurts), len(stats), undefined)


def mse(x, y) -> float:
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape:
        raise ConfigError(f"mse: shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


@dataclass(frozen=True)
class GroupError:
    group_index: int
    clamp_sq_error: float
    round_sq_error: float


@dataclass
class ErrorReport:
    mse: float
    clamp_sq_error: float
    round_sq_error: float
    per_group: list[GroupError] = field(default_factory=list)

    def as_dict(self):
        return {
            "mse": self.mse,
            "clamp_sq_error": self.clamp_sq_error,
            "round_sq_error": self.round_sq_error,
        }


def _seq_sum(a: np.ndarray) -> np.ndarray:
    """Left-to-right fold along the last axis (running-sum semantics)."""
    return np.cumsum(a, axis=-1)[..., -1]


def _clamp_mask(q: QuantizedTensor, xg: np.ndarray) -> np.ndarray:
    """Elements whose ideal code saturates the format under q's scales."""
    cfg = q.config
    if cfg.uses_zero_point:
        q_max = 2**cfg.fmt.total_bits - 1
        scale = q.scales[..., 0][..., None]
        zp = q.scales[..., 1][..., None]
        raw = np.round(xg / scale) + zp
        return (raw < 0) | (raw > q_max)
    sel = np.where(xg < 0, q.scales[..., 1][..., None], q.scales[..., 0][..., None])
    if q.tensor_scale is not None:
        sel = sel * q.tensor_scale
    return np.abs(xg / sel) > formats.max_normal(cfg.fmt)


def error_decomposition(x, cfg: QuantConfig) -> ErrorReport:
    """Quantize x under cfg and split squared error into clamp/round parts.

    Per-group sums fold left-to-right over elements; group subtotals combine
    in ascending group order; mse is (clamp + round) / element count, making
    clamp_sq_error + round_sq_error == mse * count an identity.
    """
    q = quantize(x, cfg)
    y = dequantize(q)
    arr = np.asarray(x, dtype=float)
    from .quantizer import _grouped

    _, xg, gs = _grouped(arr, cfg)
    _, yg, _ = _grouped(y, cfg)
    sq = (xg - yg) ** 2
    mask = _clamp_mask(q, xg)
    clamp_g = _seq_sum(np.where(mask, sq, 0.0)).ravel()
    round_g = _seq_sum(np.where(mask, 0.0, sq)).ravel()
    per_group = [
        GroupError(i, float(clamp_g[i]), float(round_g[i]))
        for i in range(clamp_g.size)
    ]
    clamp_total = float(_seq_sum(clamp_g))
    round_total = float(_seq_sum(round_g))
    total = clamp_total + round_total
    return ErrorReport(total / arr.size, clamp_total, round_total, per_group)
