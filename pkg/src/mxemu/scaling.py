"""Per-group shared-scale computation for the whole scale-mode design space.

Scalar routines accept either scalars or numpy arrays of group maxima and
are exact in float64: power-of-two scales are produced through frexp/ldexp
(never a rounded log2), float-encoded scales land exactly on their encoding
grid, and a zero group maximum yields a fixed degenerate scale so that
all-zero groups round-trip without special cases downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import formats
from .errors import ConfigError, DataError
from .formats import ElementFormat, get_format, max_normal, round_real_to_fp

__all__ = [
    "ScaleMode",
    "SCALE_MODES",
    "get_scale_mode",
    "AsymScalePair",
    "degenerate_scale",
    "pot_floor_scale",
    "pot_round_scale",
    "fp_scale",
    "fp32_scale",
    "group_scale",
    "asym_scales",
    "nvfp4_scales",
    "NVFP4_GROUP_SIZES",
]

NVFP4_GROUP_SIZES = (16, 32)


@dataclass(frozen=True)
class ScaleMode:
    """A shared-scale computation rule.

    kind: "pot_floor" | "pot_round" | "fp" | "fp32" | "double".
    scale_fmt is the encoding grid for "fp" modes and the inner (group-level)
    encoding for the "double" mode; the double mode's outer tensor-wise scale
    is kept exact in float64.
    """

    name: str
    kind: str
    scale_fmt: ElementFormat | None = None


SCALE_MODES: dict[str, ScaleMode] = {
    "pot_floor": ScaleMode("pot_floor", "pot_floor"),
    "pot_round": ScaleMode("pot_round", "pot_round"),
    "fp8e4m3": ScaleMode("fp8e4m3", "fp", get_format("fp8_e4m3")),
    "fp8e5m2": ScaleMode("fp8e5m2", "fp", get_format("fp8_e5m2")),
    "fp16": ScaleMode("fp16", "fp", get_format("fp16")),
    "fp32": ScaleMode("fp32", "fp32"),
    "nvfp4_double": ScaleMode("nvfp4_double", "double", get_format("fp8_e4m3")),
}


def get_scale_mode(name: str) -> ScaleMode:
    try:
        return SCALE_MODES[name]
    except KeyError:
        raise ConfigError(
            f"unknown scale mode {name!r}; valid modes: {', '.join(SCALE_MODES)}"
        ) from None


@dataclass(frozen=True)
class AsymScalePair:
    """Positive/negative shared scales of one group (equal when symmetric)."""

    pos_scale: float
    neg_scale: float


def degenerate_scale(mode: ScaleMode, fmt: ElementFormat) -> float:
    """Scale assigned to a group whose relevant amax is zero.

    All codes on that side are zero, so the value is observationally inert;
    it only has to be positive, tiny, and representable. PoT and exact modes
    use a fixed small power of two; float-encoded modes use the smallest
    positive value of their encoding grid.
    """
    if mode.kind == "fp":
        return formats.min_positive(mode.scale_fmt)
    if mode.kind == "double":
        return formats.min_positive(mode.scale_fmt)
    return 2.0 ** (-formats.emax_elem(fmt) - 126)


def _pot_exponents(amax: np.ndarray):
    # frexp: amax = m * 2**e with m in [0.5, 1); exact, unlike log2
    m, e = np.frexp(amax)
    return m, e - 1


def pot_floor_scale(amax, fmt: ElementFormat):
    """2**(floor(log2(amax)) - emax_elem); degenerate scale for amax == 0."""
    return _pot_scale(amax, fmt, round_up=False)


def pot_round_scale(amax, fmt: ElementFormat):
    """Power-of-two scale from the exponent of the *nearest* power of two.

    The exponent bumps up by one when the mantissa exceeds 1.5, i.e. when
    2**(e+1) is closer to amax than 2**e in value; a mantissa of exactly 1.5
    keeps the lower exponent. This value-nearest rule keeps requantization
    of already-quantized data scale-stable, which plain log2 rounding does
    not.
    """
    return _pot_scale(amax, fmt, round_up=True)


def _pot_scale(amax, fmt, round_up):
    arr = np.asarray(amax, dtype=float)
    _check_amax(arr)
    e = formats.emax_elem(fmt)
    m, e_floor = _pot_exponents(np.where(arr > 0, arr, 1.0))
    exp = e_floor - e
    if round_up:
        exp = exp + (m > 0.75)  # frexp mantissa 0.75 == value mantissa 1.5
    exp = np.maximum(exp, -1074)  # stay representable
    out = np.where(arr > 0, np.ldexp(1.0, exp.astype(np.int64)), _degen_pot(fmt))
    return float(out) if np.isscalar(amax) or arr.ndim == 0 else out


def _degen_pot(fmt):
    return 2.0 ** (-formats.emax_elem(fmt) - 126)


def _check_amax(arr):
    if np.isnan(arr).any() or np.isinf(arr).any():
        raise DataError("group amax must be finite")
    if (arr < 0).any():
        raise DataError("group amax must be >= 0")


def fp_scale(amax, fmt: ElementFormat, scale_fmt: ElementFormat):
    """Ideal max-to-max scale amax/max_normal(fmt), encoded on scale_fmt's grid."""
    arr = np.asarray(amax, dtype=float)
    _check_amax(arr)
    ideal = np.where(arr > 0, arr, 1.0) / max_normal(fmt)
    enc = round_real_to_fp(ideal, scale_fmt)
    out = np.where(arr > 0, enc, formats.min_positive(scale_fmt))
    return float(out) if np.isscalar(amax) or arr.ndim == 0 else out


def fp32_scale(amax, fmt: ElementFormat):
    """Exact (unencoded) max-to-max scale."""
    arr = np.asarray(amax, dtype=float)
    _check_amax(arr)
    out = np.where(arr > 0, arr / max_normal(fmt), _degen_pot(fmt))
    return float(out) if np.isscalar(amax) or arr.ndim == 0 else out


def group_scale(amax, mode: ScaleMode, fmt: ElementFormat):
    """Dispatch a group amax to the mode's scalar routine."""
    if mode.kind == "pot_floor":
        return pot_floor_scale(amax, fmt)
    if mode.kind == "pot_round":
        return pot_round_scale(amax, fmt)
    if mode.kind == "fp":
        return fp_scale(amax, fmt, mode.scale_fmt)
    if mode.kind == "fp32":
        return fp32_scale(amax, fmt)
    raise ConfigError(f"scale mode {mode.name} has no per-group scalar routine")


def asym_scales(group, mode: ScaleMode, fmt: ElementFormat) -> AsymScalePair:
    """Separate positive/negative scales for one group of values.

    pos_scale is computed from max(group + {0}) and neg_scale from
    |min(group + {0})|; a side with no mass gets the degenerate scale.
    """
    arr = np.asarray(group, dtype=float)
    if arr.size == 0:
        raise DataError("asym_scales: empty group")
    if np.isnan(arr).any():
        raise DataError("asym_scales: NaN in group")
    pos_amax = max(float(arr.max()), 0.0)
    neg_amax = max(float(-arr.min()), 0.0)
    pos = group_scale(pos_amax, mode, fmt) if pos_amax > 0 else degenerate_scale(mode, fmt)
    neg = group_scale(neg_amax, mode, fmt) if neg_amax > 0 else degenerate_scale(mode, fmt)
    return AsymScalePair(float(pos), float(neg))


def nvfp4_scales(tensor_amax: float, group_amaxes, fmt: ElementFormat | None = None):
    """Two-level scales: exact tensor-wise scale plus encoded group scales.

    tensor_scale = tensor_amax / (448 * max_normal(fmt)); each group scale
    encodes group_amax / (max_normal(fmt) * tensor_scale) on the FP8 E4M3
    grid. The effective scale of a group is group_scale * tensor_scale.
    """
    fmt = fmt or get_format("fp4_e2m1")
    inner = get_format("fp8_e4m3")
    ga = np.asarray(group_amaxes, dtype=float)
    _check_amax(ga)
    if not np.isfinite(tensor_amax) or tensor_amax < 0:
        raise DataError("tensor amax must be finite and >= 0")
    if ga.size and tensor_amax < ga.max():
        raise DataError("tensor amax must dominate every group amax")
    mn = max_normal(fmt)
    if tensor_amax == 0:
        return _degen_pot(fmt), np.full(ga.shape, formats.min_positive(inner))
    tensor_scale = tensor_amax / (448.0 * mn)
    ideal = np.where(ga > 0, ga, 1.0) / (mn * tensor_scale)
    enc = round_real_to_fp(ideal, inner)
    gscales = np.where(ga > 0, enc, formats.min_positive(inner))
    return tensor_scale, gscales
