"""Emulated reduced-precision dot product and matrix multiply.

Each product term is the product of the two operands' dequantized elements,
so the shared scale entering every term is selected by that element's sign,
matching the sign-dependent polarity of asymmetric scaling. Terms accumulate
left-to-right inside a group; group subtotals combine in ascending group
order. Under the float64 reference accumulator this is, by construction,
bit-identical to dequantize-then-multiply-then-sum in float64 with the same
summation order.

Zero-point integer operands have no sign-selected scale semantics and are
rejected; dequantize them and multiply in floating point instead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .quantizer import QuantConfig, QuantizedTensor, dequantize, quantize

__all__ = ["AccumSpec", "dot", "matmul", "reference_matmul"]


@dataclass(frozen=True)
class AccumSpec:
    """Accumulator width; element order inside a group is always sequential."""

    accum: str = "float64"  # "float64" (reference) or "float32"

    def __post_init__(self):
        if self.accum not in ("float64", "float32"):
            raise ConfigError(f"unknown accumulator width {self.accum!r}")


def _check_operand(q: QuantizedTensor, side: str):
    if q.config.uses_zero_point:
        raise ConfigError(
            f"{side}: zero-point integer operands are unsupported in the emulated "
            "dot; dequantize first and use a floating-point matmul"
        )


def _group_size(q: QuantizedTensor) -> int:
    n = q.codes.shape[-1]
    return n if q.config.group_size is None else q.config.group_size


def _fold(prod: np.ndarray, gs: int, spec: AccumSpec):
    """Sequential in-group sums, then sequential cross-group combination."""
    if spec.accum == "float32":
        prod = prod.astype(np.float32)
    grouped = prod.reshape(*prod.shape[:-1], prod.shape[-1] // gs, gs)
    partials = np.cumsum(grouped, axis=-1)[..., -1]
    return np.cumsum(partials, axis=-1)[..., -1]


def dot(a: QuantizedTensor, b: QuantizedTensor, spec: AccumSpec = AccumSpec()) -> float:
    """Emulated dot product of two 1-D quantized tensors."""
    if len(a.shape) != 1 or len(b.shape) != 1:
        raise ConfigError("dot expects 1-D quantized tensors")
    if a.shape != b.shape:
        raise ConfigError(f"dot: length mismatch {a.shape[0]} vs {b.shape[0]}")
    _check_operand(a, "lhs")
    _check_operand(b, "rhs")
    gs_a, gs_b = _group_size(a), _group_size(b)
    if gs_a != gs_b:
        raise ConfigError(f"dot: group size mismatch {gs_a} vs {gs_b}")
    prod = dequantize(a) * dequantize(b)
    return float(_fold(prod, gs_a, spec))


def matmul(
    a,
    b,
    cfg_a: QuantConfig,
    cfg_b: QuantConfig,
    spec: AccumSpec = AccumSpec(),
) -> np.ndarray:
    """Quantize a row-wise and b column-wise, then dot along the inner axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ConfigError("matmul expects 2-D matrices")
    if a.shape[1] != b.shape[0]:
        raise ConfigError(f"matmul: inner dimensions differ ({a.shape} x {b.shape})")
    k = a.shape[1]
    gs_a = k if cfg_a.group_size is None else cfg_a.group_size
    gs_b = k if cfg_b.group_size is None else cfg_b.group_size
    if gs_a != gs_b:
        raise ConfigError(f"matmul: group size mismatch {gs_a} vs {gs_b}")
    qa = quantize(a, replace(cfg_a, axis=-1))
    qb = quantize(b, replace(cfg_b, axis=0))
    _check_operand(qa, "lhs")
    _check_operand(qb, "rhs")
    da = dequantize(qa)
    db = dequantize(qb)
    prod = da[:, None, :] * db.T[None, :, :]  # (M, N, K)
    return _fold(prod, gs_a, spec)


def reference_matmul(a, b, cfg_a: QuantConfig, cfg_b: QuantConfig) -> np.ndarray:
    """Dequantize-then-float64 oracle with the same summation order."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k = a.shape[1]
    gs = k if cfg_a.group_size is None else cfg_a.group_size
    da = dequantize(quantize(a, replace(cfg_a, axis=-1)))
    db = dequantize(quantize(b, replace(cfg_b, axis=0)))
    out = np.empty((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            terms = da[i] * db[:, j]
            acc = 0.0
            for g in range(k // gs):
                part = 0.0
                for t in terms[g * gs : (g + 1) * gs]:
                    part += t
                acc += part
            out[i, j] = acc
    return out
