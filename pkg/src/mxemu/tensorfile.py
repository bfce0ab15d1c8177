"""Binary tensor containers and CSV import.

MXT1 holds a plain real tensor: magic "MXT1", a dtype byte (0 = 32-bit
little-endian float), a dimension-count byte, the dims as unsigned 64-bit
little-endian integers, then the row-major payload.

MXQ1 holds a QuantizedTensor: the quantization config by name, the original
shape, element codes one per byte (low bits used), and per-group scale
pairs as float64 values paired with their encoded representation bits so a
reader can audit that every scale sits on its declared encoding grid.
"""

from __future__ import annotations

import io
import math
import struct
from pathlib import Path

import numpy as np

from . import formats, scaling
from .errors import TensorFileError
from .quantizer import QuantConfig, QuantizedTensor, config
from .scaling import ScaleMode

__all__ = [
    "read_tensor",
    "write_tensor",
    "read_quantized",
    "write_quantized",
    "scale_bits",
]

_MAGIC = b"MXT1"
_QMAGIC = b"MXQ1"
_DTYPE_F32 = 0


def write_tensor(path, array) -> None:
    arr = np.asarray(array, dtype=np.float32)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<BB", _DTYPE_F32, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.astype("<f4").tobytes(order="C"))


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise TensorFileError(f"truncated tensor file while reading {what}")
    return buf


def read_tensor(path) -> np.ndarray:
    """Read an MXT1 file (or a 2-D comma-separated CSV) as float64."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return _read_csv(path)
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != _MAGIC:
            raise TensorFileError(f"{path}: bad magic, not an MXT1 tensor file")
        dtype, ndim = struct.unpack("<BB", _read_exact(fh, 2, "header"))
        if dtype != _DTYPE_F32:
            raise TensorFileError(f"{path}: unsupported dtype byte {dtype}")
        dims = struct.unpack(f"<{ndim}Q", _read_exact(fh, 8 * ndim, "dims"))
        if any(d < 1 for d in dims):
            raise TensorFileError(f"{path}: non-positive dimension in {dims}")
        count = int(np.prod(dims, dtype=np.int64))
        payload = _read_exact(fh, 4 * count, "payload")
        if fh.read(1):
            raise TensorFileError(f"{path}: trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float64)


def _read_csv(path) -> np.ndarray:
    rows = []
    for ln, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise TensorFileError(f"{path}:{ln}: {exc}") from None
    if not rows:
        raise TensorFileError(f"{path}: empty CSV")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise TensorFileError(f"{path}: ragged CSV rows")
    return np.asarray(rows, dtype=np.float64)


def scale_bits(value: float, mode: ScaleMode, fmt, payload_is_zero_point=False) -> int:
    """Encoded representation of a stored scale, for audit.

    PoT modes store the biased shared exponent; float-encoded modes store
    the element code on the scale grid; exact modes store the binary32 bit
    pattern; zero-point payloads store the integer zero point.
    """
    if payload_is_zero_point:
        return int(value)
    if mode.kind in ("pot_floor", "pot_round"):
        e = math.frexp(value)[1] - 1
        return int(min(max(e + 127, 0), 255))
    if mode.kind in ("fp", "double"):
        return int(formats.encode(value, mode.scale_fmt))
    return int(np.float32(value).view(np.uint32))


def write_quantized(path, q: QuantizedTensor) -> None:
    cfg = q.config
    buf = io.BytesIO()
    buf.write(_QMAGIC)
    for name in (cfg.fmt.name, cfg.scale_mode.name):
        raw = name.encode()
        buf.write(struct.pack("<B", len(raw)))
        buf.write(raw)
    gs = -1 if cfg.group_size is None else cfg.group_size
    buf.write(struct.pack("<qqB", gs, cfg.axis, int(cfg.asymmetric)))
    ts = q.tensor_scale
    buf.write(struct.pack("<Bd", int(ts is not None), 0.0 if ts is None else ts))
    buf.write(struct.pack("<B", len(q.shape)))
    buf.write(struct.pack(f"<{len(q.shape)}Q", *q.shape))
    buf.write(q.codes.astype(np.uint8).tobytes(order="C"))
    flat_scales = q.scales.reshape(-1, 2)
    buf.write(struct.pack("<Q", flat_scales.shape[0]))
    zp = cfg.uses_zero_point
    for pos, neg in flat_scales:
        buf.write(struct.pack("<ddII",
                              pos, neg,
                              scale_bits(pos, cfg.scale_mode, cfg.fmt),
                              scale_bits(neg, cfg.scale_mode, cfg.fmt, payload_is_zero_point=zp)))
    Path(path).write_bytes(buf.getvalue())


def read_quantized(path) -> QuantizedTensor:
    data = Path(path).read_bytes()
    fh = io.BytesIO(data)
    if _read_exact(fh, 4, "magic") != _QMAGIC:
        raise TensorFileError(f"{path}: bad magic, not an MXQ1 file")
    names = []
    for what in ("format name", "scale mode"):
        (ln,) = struct.unpack("<B", _read_exact(fh, 1, what))
        names.append(_read_exact(fh, ln, what).decode())
    gs, axis, asym = struct.unpack("<qqB", _read_exact(fh, 17, "config"))
    has_ts, ts = struct.unpack("<Bd", _read_exact(fh, 9, "tensor scale"))
    (ndim,) = struct.unpack("<B", _read_exact(fh, 1, "ndim"))
    shape = struct.unpack(f"<{ndim}Q", _read_exact(fh, 8 * ndim, "dims"))
    fmt_name = names[0] + ("_asym" if asym else "")
    cfg = config(fmt_name, names[1], None if gs == -1 else gs, axis)
    count = int(np.prod(shape, dtype=np.int64))
    codes = np.frombuffer(_read_exact(fh, count, "codes"), dtype=np.uint8)
    moved_shape = tuple(np.moveaxis(np.empty(shape, dtype=np.uint8), cfg.axis, -1).shape)
    codes = codes.reshape(moved_shape)
    (n_groups,) = struct.unpack("<Q", _read_exact(fh, 8, "group count"))
    scales = np.empty((n_groups, 2))
    for i in range(n_groups):
        pos, neg, _, _ = struct.unpack("<ddII", _read_exact(fh, 24, "scales"))
        scales[i] = (pos, neg)
    eff_gs = moved_shape[-1] if cfg.group_size is None else cfg.group_size
    scales = scales.reshape(*moved_shape[:-1], moved_shape[-1] // eff_gs, 2)
    return QuantizedTensor(tuple(shape), cfg, codes, scales, ts if has_ts else None)
