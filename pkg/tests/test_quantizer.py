import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mxemu
from mxemu import config, dequantize, quantize, quantize_dequantize
from mxemu.errors import ConfigError, DataError
from mxemu.formats import get_format, max_normal
from mxemu.quantizer import QuantizedTensor

from conftest import shifted_gaussian

FP4 = get_format("fp4_e2m1")

MXFP4 = config("fp4_e2m1", "pot_floor", "row")
AMXFP4_POT = config("fp4_e2m1_asym", "pot_floor", "row")
AMXFP4_FP8 = config("fp4_e2m1_asym", "fp8e5m2", "row")

GOLDEN_MXFP4 = [-4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0]
GOLDEN_AMXFP4_POT = [-4.0, -3.0, -2.0, -1.5, -1.0, -0.5, 0.0,
                     2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0]
GOLDEN_AMXFP4_FP8 = [-5.25, -3.5, -2.625, -1.75, -1.3125, -0.875, -0.4375,
                     0.0, 2.5, 5.0, 7.5, 10.0, 15.0, 20.0, 30.0]


# ---- golden ramp ----------------------------------------------------------

def test_golden_mxfp4(ramp_1024):
    y = quantize_dequantize(ramp_1024, MXFP4)
    assert sorted(set(y.tolist())) == GOLDEN_MXFP4


def test_golden_amxfp4_pot(ramp_1024):
    y = quantize_dequantize(ramp_1024, AMXFP4_POT)
    assert sorted(set(y.tolist())) == GOLDEN_AMXFP4_POT


def test_golden_amxfp4_fp8(ramp_1024):
    y = quantize_dequantize(ramp_1024, AMXFP4_FP8)
    assert sorted(set(y.tolist())) == GOLDEN_AMXFP4_FP8


# ---- dequantize contracts --------------------------------------------------

def test_all_zero_codes_dequantize_to_zero():
    q = quantize(np.zeros((4, 32)), config("fp4_e2m1", "fp8e5m2", 16))
    assert np.all(q.codes == 0)
    np.testing.assert_array_equal(dequantize(q), np.zeros((4, 32)))


def test_on_grid_row_reproduces_exactly():
    x = np.array([6.0, 3.0, 1.5, 0.0])
    np.testing.assert_array_equal(quantize_dequantize(x, MXFP4), x)


def test_neg_code_six_with_scale_0875(ramp_1024):
    y = quantize_dequantize(ramp_1024, AMXFP4_FP8)
    assert y.min() == -5.25  # (-1)^1 * 6 * 0.875


def test_scalar_group_pot_floor_clamps():
    assert quantize_dequantize(np.array([7.9]), MXFP4)[0] == 6.0


def test_scalar_group_pot_round_avoids_clamp():
    cfg = config("fp4_e2m1", "pot_round", "row")
    assert quantize_dequantize(np.array([7.9]), cfg)[0] == 8.0


# ---- config and error contracts --------------------------------------------

def test_divisibility_error_names_axis_and_extent():
    with pytest.raises(ConfigError, match=r"group size 32 does not divide extent 8 along axis -1"):
        quantize(np.zeros((4, 8)), config("fp4_e2m1", "pot_floor", 32))


def test_nan_error_reports_index():
    x = np.zeros(64)
    x[17] = np.nan
    with pytest.raises(DataError, match="index 17"):
        quantize(x, MXFP4)


def test_inf_rejected():
    with pytest.raises(DataError):
        quantize(np.array([1.0, np.inf]), MXFP4)


def test_double_scale_requires_nvfp4_group_size():
    with pytest.raises(ConfigError, match="16, 32"):
        quantize(np.zeros(64), config("fp4_e2m1", "nvfp4_double", "row"))


def test_group_size_row_string():
    cfg = config("fp4_e2m1", "pot_floor", "row")
    assert cfg.group_size is None
    cfg = config("fp4_e2m1", "pot_floor", "64")
    assert cfg.group_size == 64


def test_scale_pair_count():
    q = quantize(np.zeros((4, 64)), config("fp4_e2m1", "pot_floor", 16))
    assert q.scales.shape == (4, 4, 2)
    assert q.n_groups == 16


def test_negative_zero_lands_on_positive_side():
    q = quantize(np.array([-0.0, 1.0]), MXFP4)
    assert q.codes[0] == 0
    assert not np.signbit(dequantize(q)[0])


# ---- invariants ------------------------------------------------------------

SAFE_CONFIGS = [
    ("fp4_e2m1", "pot_floor"), ("fp4_e2m1", "pot_round"),
    ("fp4_e2m1", "fp8e5m2"), ("fp4_e2m1", "fp8e4m3"),
    ("fp4_e2m1", "fp16"), ("fp4_e2m1", "fp32"),
    ("fp6_e3m2", "pot_floor"), ("fp6_e2m3", "pot_round"),
    ("fp8_e4m3", "fp16"), ("fp8_e5m2", "fp32"),
    ("int4", "pot_floor"), ("int8", "fp16"),
]


@pytest.mark.parametrize("fmt,mode", SAFE_CONFIGS)
@pytest.mark.parametrize("asym", [False, True])
def test_idempotence(fmt, mode, asym, rng):
    name = fmt + ("_asym" if asym else "")
    scale_ref = max_normal(get_format(fmt))
    for gs in (16, None):
        cfg = config(name, mode, gs)
        for _ in range(20):
            x = rng.normal(rng.normal(), 1.0, (2, 64)) * scale_ref / 3.0
            y1 = quantize_dequantize(x, cfg)
            y2 = quantize_dequantize(y1, cfg)
            np.testing.assert_array_equal(y1, y2)


def test_idempotence_nvfp4(rng):
    for name in ("fp4_e2m1", "fp4_e2m1_asym"):
        cfg = config(name, "nvfp4_double", 16)
        for _ in range(40):
            x = rng.normal(rng.normal(), 1.0, (4, 32)) * np.exp2(rng.uniform(-4, 4))
            y1 = quantize_dequantize(x, cfg)
            y2 = quantize_dequantize(y1, cfg)
            np.testing.assert_array_equal(y1, y2)


def test_idempotence_zero_point(rng):
    cfg = config("int4_asym", "pot_floor", 16)
    for _ in range(60):
        x = rng.normal(rng.normal() * 2, 1.0, (4, 32)) * np.exp2(rng.uniform(-4, 4))
        y1 = quantize_dequantize(x, cfg)
        y2 = quantize_dequantize(y1, cfg)
        np.testing.assert_array_equal(y1, y2)


@given(data=st.lists(st.floats(min_value=-100, max_value=100, allow_nan=False),
                     min_size=4, max_size=4))
def test_sign_preservation(data):
    x = np.array(data)
    y = quantize_dequantize(x, AMXFP4_FP8)
    assert np.all((np.sign(y) == np.sign(x)) | (y == 0))


def test_group_locality(rng):
    cfg = config("fp4_e2m1_asym", "fp8e5m2", 16)
    x = rng.normal(0, 1, 128)
    q1 = quantize(x, cfg)
    x2 = x.copy()
    x2[32:48] *= 100.0  # perturb group 2 only
    q2 = quantize(x2, cfg)
    mask = np.ones(8, dtype=bool)
    mask[2] = False
    np.testing.assert_array_equal(
        q1.codes.reshape(8, 16)[mask], q2.codes.reshape(8, 16)[mask]
    )
    np.testing.assert_array_equal(q1.scales[mask], q2.scales[mask])


def test_symmetric_data_makes_asym_equal_mx(rng):
    half = rng.normal(0, 1, (4, 16))
    sym = np.concatenate([half, -half], axis=1)  # each group sign-symmetric
    for mode in ("pot_floor", "fp8e5m2", "fp32"):
        a = quantize_dequantize(sym, config("fp4_e2m1", mode, 32))
        b = quantize_dequantize(sym, config("fp4_e2m1_asym", mode, 32))
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("mode", ["pot_round", "fp8e5m2", "fp8e4m3", "fp16"])
def test_boundedness(mode, rng):
    cfg = config("fp4_e2m1", mode, 32)
    x = rng.normal(0, 2, (8, 32))
    q = quantize(x, cfg)
    y = dequantize(q).reshape(8, 1, 32)
    limit = q.scales[..., 0][..., None] * max_normal(FP4)
    assert np.all(np.abs(y) <= limit)


def test_determinism(rng):
    x = rng.normal(0, 1, (16, 64))
    cfg = config("fp4_e2m1_asym", "fp8e5m2", 16)
    qa, qb = quantize(x, cfg), quantize(x, cfg)
    np.testing.assert_array_equal(qa.codes, qb.codes)
    np.testing.assert_array_equal(qa.scales, qb.scales)


def test_axis_zero_matches_transposed(rng):
    x = rng.normal(0, 1, (64, 5))
    a = quantize_dequantize(x, config("fp4_e2m1", "fp8e5m2", 16, axis=0))
    b = quantize_dequantize(x.T, config("fp4_e2m1", "fp8e5m2", 16, axis=-1)).T
    np.testing.assert_array_equal(a, b)


# ---- zero-point integer path ----------------------------------------------

def test_zero_point_scale_and_zp():
    x = np.array([-1.0, 0.0, 2.0, 5.0])
    q = quantize(x, config("int4_asym", "pot_floor", "row"))
    scale = float(np.float32(6.0 / 15.0))
    assert q.scales[0, 0] == scale
    assert q.scales[0, 1] == np.round(1.0 / scale)
    y = dequantize(q)
    assert np.all(np.abs(y - x) <= scale / 2 + 1e-12)


def test_zero_point_beats_symmetric_on_shifted_data(rng):
    x = shifted_gaussian(rng, 64, 32).ravel()
    err_sym = np.mean((quantize_dequantize(x, config("int4", "fp8e5m2", 32)) - x) ** 2)
    err_zp = np.mean((quantize_dequantize(x, config("int4_asym", "fp8e5m2", 32)) - x) ** 2)
    assert err_zp < err_sym


def test_zero_point_constant_group():
    x = np.full(16, 3.25)
    y = quantize_dequantize(x, config("int4_asym", "pot_floor", "row"))
    assert np.allclose(y, x, rtol=1e-6)
    np.testing.assert_array_equal(
        quantize_dequantize(y, config("int4_asym", "pot_floor", "row")), y
    )


# ---- whole-tensor edge cases ------------------------------------------------

@pytest.mark.parametrize("mode", ["pot_floor", "pot_round", "fp8e5m2", "fp32"])
def test_zero_tensor(mode):
    x = np.zeros((2, 32))
    q = quantize(x, config("fp4_e2m1_asym", mode, 16))
    assert np.all(q.codes == 0)
    np.testing.assert_array_equal(dequantize(q), x)


def test_empty_tensor_rejected():
    with pytest.raises(DataError):
        quantize(np.empty((0, 4)), MXFP4)


def test_quantized_tensor_shape_roundtrip(rng):
    x = rng.normal(0, 1, (3, 4, 32))
    for axis in (-1, 0, 1):
        cfg = config("fp4_e2m1", "fp8e5m2",
                     16 if x.shape[axis] % 16 == 0 else "row", axis=axis)
        y = quantize_dequantize(x, cfg)
        assert y.shape == x.shape
