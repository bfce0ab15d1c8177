import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mxemu import config, quantize_dequantize
from mxemu.analysis import (
    error_decomposition,
    group_stats,
    mse,
    stats_summary,
)
from mxemu.errors import ConfigError, DataError

from conftest import shifted_gaussian


# ---- group_stats -----------------------------------------------------------

def test_alternating_signs():
    stats = group_stats(np.array([1.0, -1.0, 1.0, -1.0]))
    assert stats[0].mean == 0.0
    assert stats[0].kurtosis == 1.0


def test_constant_group_undefined_kurtosis():
    stats = group_stats(np.full(8, 2.5))
    assert stats[0].kurtosis is None


def test_gaussian_kurtosis_is_three():
    rng = np.random.default_rng(42)
    stats = group_stats(rng.normal(0, 1, 10**6))
    assert abs(stats[0].kurtosis - 3.0) < 0.05


def test_group_indices_and_count():
    stats = group_stats(np.arange(64.0), group_size=16)
    assert [s.group_index for s in stats] == [0, 1, 2, 3]


@given(vals=st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=2, max_size=32))
def test_kurtosis_at_least_one(vals):
    stats = group_stats(np.array(vals))
    if stats[0].kurtosis is not None:
        assert stats[0].kurtosis >= 1.0 - 1e-12


def test_sign_symmetric_mean_zero(rng):
    half = rng.normal(0, 1, 16)
    stats = group_stats(np.concatenate([half, -half]))
    assert abs(stats[0].mean) < 1e-12


@given(a=st.floats(min_value=0.1, max_value=10),
       b=st.floats(min_value=-5, max_value=5))
def test_kurtosis_shift_scale_invariance(a, b):
    rng = np.random.default_rng(3)
    x = rng.normal(0, 1, 256)
    k0 = group_stats(x)[0].kurtosis
    k1 = group_stats(a * x + b)[0].kurtosis
    assert abs(k1 - k0) <= 1e-9 * abs(k0)


@given(a=st.floats(min_value=-10, max_value=10),
       b=st.floats(min_value=-10, max_value=10))
def test_mean_equivariance(a, b):
    rng = np.random.default_rng(4)
    x = rng.normal(0, 1, 64)
    m0 = group_stats(x)[0].mean
    m1 = group_stats(a * x + b)[0].mean
    assert abs(m1 - (a * m0 + b)) < 1e-9


# ---- stats_summary ----------------------------------------------------------

def test_summary_of_known_means():
    stats = group_stats(
        np.array([[1, 1], [2, 2], [3, 3], [4, 4], [5, 5]], dtype=float)
        + np.array([[0.5, -0.5]]),  # keep variance nonzero
        group_size=2,
    )
    s = stats_summary(stats)
    assert (s.mean.min, s.mean.q1, s.mean.median, s.mean.q3, s.mean.max) == (1, 2, 3, 4, 5)


def test_summary_single_group():
    s = stats_summary(group_stats(np.array([0.0, 1.0, 2.0, 7.0])))
    assert s.mean.min == s.mean.max == 2.5
    assert s.kurtosis.min == s.kurtosis.max


def test_summary_counts_undefined():
    x = np.concatenate([np.full(8, 1.0), np.arange(8.0)])
    s = stats_summary(group_stats(x, group_size=8))
    assert s.undefined_kurtosis == 1
    assert s.n_groups == 2


def test_summary_all_undefined_errors():
    with pytest.raises(DataError, match="undefined"):
        stats_summary(group_stats(np.ones(32), group_size=8))


def test_outlier_kurtosis_shrinks_with_group_size(rng):
    # one hot channel on quiet background: finer grouping hides the outlier
    x = rng.normal(0, 0.01, (8, 1024))
    x[:, 100] = 8.0
    med_row = stats_summary(group_stats(x, None)).kurtosis.median
    med_32 = stats_summary(group_stats(x, 32)).kurtosis.median
    assert med_32 < med_row


# ---- mse ---------------------------------------------------------------------

def test_mse_trivial():
    assert mse(np.arange(4.0), np.arange(4.0)) == 0.0
    assert mse(np.array([0.0, 2.0]), np.array([0.0, 0.0])) == 2.0


def test_mse_shape_mismatch():
    with pytest.raises(ConfigError):
        mse(np.zeros(3), np.zeros(4))


def test_asym_fp_beats_sym_fp_on_shifted_groups(rng):
    x = shifted_gaussian(rng, 128, 32).ravel()
    e_sym = mse(x, quantize_dequantize(x, config("fp4_e2m1", "fp8e5m2", 32)))
    e_asym = mse(x, quantize_dequantize(x, config("fp4_e2m1_asym", "fp8e5m2", 32)))
    assert e_asym < e_sym


# ---- error decomposition -------------------------------------------------------

def test_decomposition_hand_case_clamp():
    rep = error_decomposition(np.array([0.0, 7.0]), config("fp4_e2m1", "pot_floor", "row"))
    assert rep.clamp_sq_error == 1.0  # 7 clamps to 6 at scale 1
    assert rep.round_sq_error == 0.0
    assert rep.mse == 0.5


def test_decomposition_on_grid_zero():
    x = np.array([6.0, 3.0, -1.5, 0.0])
    rep = error_decomposition(x, config("fp4_e2m1", "pot_floor", "row"))
    assert rep.clamp_sq_error == 0.0 and rep.round_sq_error == 0.0


def test_pot_round_clamps_less_hand_case():
    x = np.array([0.0, 7.9])
    floor_rep = error_decomposition(x, config("fp4_e2m1", "pot_floor", "row"))
    round_rep = error_decomposition(x, config("fp4_e2m1", "pot_round", "row"))
    assert floor_rep.clamp_sq_error == pytest.approx((7.9 - 6.0) ** 2)
    assert round_rep.clamp_sq_error == 0.0


def _independent_decomposition(x, cfg):
    """Recompute the split from public pieces with the same fold order."""
    from mxemu import quantize, dequantize
    from mxemu.analysis import _clamp_mask
    from mxemu.quantizer import _grouped

    q = quantize(x, cfg)
    y = dequantize(q)
    _, xg, _ = _grouped(np.asarray(x, float), cfg)
    _, yg, _ = _grouped(y, cfg)
    sq = (xg - yg) ** 2
    mask = _clamp_mask(q, xg)
    clamp = np.cumsum(np.cumsum(np.where(mask, sq, 0.0), -1)[..., -1].ravel())[-1]
    rnd = np.cumsum(np.cumsum(np.where(mask, 0.0, sq), -1)[..., -1].ravel())[-1]
    return float(clamp), float(rnd)


@pytest.mark.parametrize("fmt", ["fp4_e2m1", "fp4_e2m1_asym", "int4", "int4_asym"])
@pytest.mark.parametrize("mode", ["pot_floor", "pot_round", "fp8e5m2"])
def test_decomposition_exactness(fmt, mode, rng):
    x = rng.normal(0.5, 2.0, (32, 32))
    cfg = config(fmt, mode, 32)
    rep = error_decomposition(x, cfg)
    clamp, rnd = _independent_decomposition(x, cfg)
    assert rep.clamp_sq_error == clamp
    assert rep.round_sq_error == rnd
    assert rep.clamp_sq_error + rep.round_sq_error == rep.mse * x.size
    assert rep.clamp_sq_error >= 0 and rep.round_sq_error >= 0
    assert len(rep.per_group) == 32


def test_clamp_monotonicity_per_group(rng):
    x = rng.normal(0, 3.0, (64, 16))
    rep_f = error_decomposition(x, config("fp4_e2m1", "pot_floor", 16))
    rep_r = error_decomposition(x, config("fp4_e2m1", "pot_round", 16))
    for gf, gr in zip(rep_f.per_group, rep_r.per_group):
        assert gr.clamp_sq_error <= gf.clamp_sq_error
