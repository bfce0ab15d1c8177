"""Element-level numeric formats as explicit, enumerable value grids.

Every supported low-precision code (FP4/FP6/FP8, INT4/INT8, plus FP16 used
for shared-scale encoding) is described by an ElementFormat and materialized
as a finite, sorted, sign-symmetric grid of float64 values. Rounding onto a
grid is round-to-nearest with ties broken toward the even mantissa code
(even integer value for INT grids), and magnitudes beyond the largest grid
value clamp to it.

Grids are built once per format and cached; all operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "ElementFormat",
    "FORMATS",
    "ELEMENT_FORMAT_NAMES",
    "get_format",
    "parse_format",
    "register_codebook_format",
    "grid",
    "max_normal",
    "min_positive",
    "emax_elem",
    "round_to_grid",
    "round_real_to_fp",
    "encode",
    "decode",
]

# Handling of the top of the code space for float formats:
#   "all"  - every code is a finite number (FP4/FP6 style)
#   "fn"   - the single all-ones code is NaN, rest finite (FP8 E4M3)
#   "ieee" - the top exponent is reserved for Inf/NaN (FP8 E5M2, FP16)
_RESERVED = ("all", "fn", "ieee")


@dataclass(frozen=True)
class ElementFormat:
    """Bit-level description of an element code.

    kind is "float" (sign/exponent/mantissa), "int" (sign-magnitude integer)
    or "codebook" (user-supplied magnitude table, see
    register_codebook_format).
    """

    name: str
    kind: str
    exponent_bits: int = 0
    mantissa_bits: int = 0
    total_bits: int = 0
    has_subnormals: bool = True
    reserved: str = "all"
    codebook: tuple = ()

    @property
    def bias(self) -> int:
        return 2 ** (self.exponent_bits - 1) - 1

    def __post_init__(self):
        if self.kind == "float":
            expected = 1 + self.exponent_bits + self.mantissa_bits
            if self.total_bits != expected:
                raise ConfigError(
                    f"{self.name}: total_bits {self.total_bits} != 1+E+M = {expected}"
                )
        if self.reserved not in _RESERVED:
            raise ConfigError(f"{self.name}: bad reserved policy {self.reserved!r}")


def _float_magnitudes(fmt: ElementFormat):
    """Magnitudes in code order: (mag values, magnitude code bits)."""
    E, M, bias = fmt.exponent_bits, fmt.mantissa_bits, fmt.bias
    mags, codes = [0.0], [0]
    for e in range(2**E):
        for m in range(2**M):
            if e == 0:
                if m == 0:
                    continue
                if not fmt.has_subnormals:
                    continue
                v = (m / 2**M) * 2.0 ** (1 - bias)
            else:
                if fmt.reserved == "ieee" and e == 2**E - 1:
                    continue
                if fmt.reserved == "fn" and e == 2**E - 1 and m == 2**M - 1:
                    continue
                v = (1 + m / 2**M) * 2.0 ** (e - bias)
            mags.append(v)
            codes.append((e << M) | m)
    return np.array(mags), np.array(codes, dtype=np.uint32)


@lru_cache(maxsize=None)
def _tables(fmt: ElementFormat):
    """Per-format lookup tables.

    Returns (signed grid, tie parity per grid entry, magnitudes in ascending
    order, magnitude code bits aligned with the magnitudes).
    """
    if fmt.kind == "float":
        mags, codes = _float_magnitudes(fmt)
        # code order is already magnitude order for FP layouts
        parity_mag = np.arange(len(mags)) % 2  # == mantissa-code parity for M >= 1
    elif fmt.kind == "int":
        top = 2 ** (fmt.total_bits - 1) - 1
        mags = np.arange(0, top + 1, dtype=float)
        codes = np.arange(0, top + 1, dtype=np.uint32)
        parity_mag = (np.arange(len(mags)) % 2).astype(np.int64)
    elif fmt.kind == "codebook":
        mags = np.array(fmt.codebook, dtype=float)
        codes = np.arange(len(mags), dtype=np.uint32)
        parity_mag = np.arange(len(mags)) % 2
    else:
        raise ConfigError(f"unknown format kind {fmt.kind!r}")

    signed = np.concatenate([-mags[1:][::-1], mags])
    parity = np.concatenate([parity_mag[1:][::-1], parity_mag])
    return signed, parity, mags, codes


_BASE_FORMATS = [
    ElementFormat("fp4_e2m1", "float", 2, 1, 4),
    ElementFormat("fp6_e3m2", "float", 3, 2, 6),
    ElementFormat("fp6_e2m3", "float", 2, 3, 6),
    ElementFormat("fp8_e4m3", "float", 4, 3, 8, reserved="fn"),
    ElementFormat("fp8_e5m2", "float", 5, 2, 8, reserved="ieee"),
    ElementFormat("fp16", "float", 5, 10, 16, reserved="ieee"),
    ElementFormat("int4", "int", total_bits=4),
    ElementFormat("int8", "int", total_bits=8),
]

FORMATS: dict[str, ElementFormat] = {f.name: f for f in _BASE_FORMATS}

# Names accepted as element formats in quantization configs ("fp16" is a
# shared-scale encoding only).
ELEMENT_FORMAT_NAMES = (
    "fp4_e2m1",
    "fp6_e3m2",
    "fp6_e2m3",
    "fp8_e4m3",
    "fp8_e5m2",
    "int4",
    "int8",
)


def get_format(name: str) -> ElementFormat:
    try:
        return FORMATS[name]
    except KeyError:
        raise ConfigError(
            f"unsupported format {name!r}; known formats: {', '.join(sorted(FORMATS))}"
        ) from None


def parse_format(name: str) -> tuple[ElementFormat, bool]:
    """Resolve an element-format name, honoring the '_asym' suffix.

    Returns (format, asymmetric flag). Only element formats are accepted.
    """
    asym = name.endswith("_asym")
    base = name[: -len("_asym")] if asym else name
    if base not in ELEMENT_FORMAT_NAMES and base not in FORMATS:
        valid = [n for n in ELEMENT_FORMAT_NAMES] + sorted(
            n for n in FORMATS if FORMATS[n].kind == "codebook"
        )
        raise ConfigError(
            f"unsupported format {name!r}; valid names: "
            + ", ".join(valid)
            + " (append '_asym' for asymmetric scaling)"
        )
    fmt = FORMATS[base]
    if fmt.name == "fp16":
        raise ConfigError("fp16 is a shared-scale encoding, not an element format")
    return fmt, asym


def register_codebook_format(name: str, magnitudes) -> ElementFormat:
    """Register a custom element format from a table of magnitudes.

    The grid becomes the sign-symmetric closure of the given magnitudes
    plus zero. Intended for externally supplied codebooks.
    """
    mags = np.unique(np.abs(np.asarray(magnitudes, dtype=float)))
    mags = mags[mags > 0]
    if mags.size == 0:
        raise ConfigError("codebook needs at least one nonzero magnitude")
    if not np.isfinite(mags).all():
        raise ConfigError("codebook magnitudes must be finite")
    bits = max(2, math.ceil(math.log2(2 * (mags.size + 1))))
    fmt = ElementFormat(name, "codebook", total_bits=bits, codebook=(0.0, *mags))
    FORMATS[name] = fmt
    return fmt


def grid(fmt: ElementFormat) -> np.ndarray:
    """Full signed value grid, ascending. Contains 0 and +/- max_normal."""
    return _tables(fmt)[0].copy()


def max_normal(fmt: ElementFormat) -> float:
    return float(_tables(fmt)[2][-1])


def min_positive(fmt: ElementFormat) -> float:
    """Smallest positive representable value (subnormal when available)."""
    return float(_tables(fmt)[2][1])


def emax_elem(fmt: ElementFormat) -> int:
    """Exponent of the largest grid magnitude: floor(log2(max_normal))."""
    return math.frexp(max_normal(fmt))[1] - 1


def round_to_grid(v, fmt: ElementFormat):
    """Round value(s) to the nearest grid point of fmt.

    Magnitudes beyond max_normal clamp to +/- max_normal. Exact midpoints
    resolve to the neighbor with the even mantissa code. NaN is rejected.
    """
    signed, parity, _, _ = _tables(fmt)
    arr = np.asarray(v, dtype=float)
    if np.isnan(arr).any():
        raise DataError("cannot round NaN to a value grid")
    out = _round_signed(arr, signed, parity)
    return float(out) if np.isscalar(v) or arr.ndim == 0 else out


def _round_signed(arr, signed, parity):
    shape = arr.shape
    flat = arr.ravel()
    hi = np.searchsorted(signed, flat)
    hi = np.clip(hi, 0, len(signed) - 1)
    lo = np.clip(hi - 1, 0, len(signed) - 1)
    d_lo = flat - signed[lo]
    d_hi = signed[hi] - flat
    take_hi = (d_hi < d_lo) | ((d_hi == d_lo) & (parity[hi] == 0))
    out = np.where(take_hi, signed[hi], signed[lo])
    np.clip(out, signed[0], signed[-1], out=out)
    return out.reshape(shape)


def round_real_to_fp(v, fmt: ElementFormat):
    """Encode positive real(s) on a float grid, nearest-even.

    Overflow clamps to max_normal; values that would round to zero flush to
    the smallest positive representable value, so the result is never zero.
    Used for shared-scale encoding; input must be strictly positive.
    """
    arr = np.asarray(v, dtype=float)
    if np.isnan(arr).any() or (arr <= 0).any():
        raise DataError("scale encoding requires positive finite input")
    out = _round_signed(arr, *_tables(fmt)[:2])
    out = np.where(out == 0.0, min_positive(fmt), out)
    return float(out) if np.isscalar(v) or arr.ndim == 0 else out


def encode(values, fmt: ElementFormat) -> np.ndarray:
    """Map on-grid values to packed element codes (sign bit | magnitude bits).

    Input must already lie on the grid (i.e. come out of round_to_grid).
    """
    _, _, mags, codes = _tables(fmt)
    arr = np.asarray(values, dtype=float)
    mag = np.abs(arr)
    idx = np.searchsorted(mags, mag)
    idx = np.clip(idx, 0, len(mags) - 1)
    if not np.array_equal(mags[idx], mag):
        raise DataError("encode() requires on-grid values")
    sign = (np.signbit(arr) & (mag > 0)).astype(np.uint32)
    nbits = fmt.total_bits - 1
    packed = (sign << nbits) | codes[idx]
    return packed.astype(np.uint8 if fmt.total_bits <= 8 else np.uint16)


def decode(codes, fmt: ElementFormat) -> np.ndarray:
    """Inverse of encode: packed element codes back to float64 grid values."""
    _, _, mags, mcodes = _tables(fmt)
    nbits = fmt.total_bits - 1
    arr = np.asarray(codes).astype(np.uint32)
    sign = arr >> nbits
    magbits = arr & ((1 << nbits) - 1)
    lut = np.full(1 << nbits, np.nan)
    lut[mcodes] = mags
    vals = lut[magbits]
    if np.isnan(vals).any():
        raise DataError(f"invalid {fmt.name} code in input")
    return np.where(sign == 1, -vals, vals)
