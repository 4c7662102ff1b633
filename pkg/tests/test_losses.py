import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwsim.losses import (
    batch_mean_weight,
    depth_transform,
    l1_mean,
    pair_loss_fixed,
    pair_loss_weighted,
    residual_compose,
    softmax,
    ssim_loss,
    ssim_to_loss,
    total_technique1,
    total_technique2,
    total_technique3,
    total_variant2,
)
from uwsim.metrics import ssim


def test_l1_mean():
    a = np.full((4, 4), 0.2)
    assert l1_mean(a, a) == 0
    assert l1_mean(a, np.full((4, 4), 0.5)) == pytest.approx(0.3)
    assert l1_mean(np.array([0.0, 1.0]), np.array([1.0, 0.0])) == 1.0
    with pytest.raises(ValueError):
        l1_mean(np.zeros(2), np.zeros(3))


def test_ssim_loss(rng):
    a = rng.random((16, 16))
    assert ssim_loss(a, a) == 0
    assert ssim_to_loss(-1.0) == 1.0
    assert ssim_to_loss(0.8) == pytest.approx(0.1)
    b = rng.random((16, 16))
    assert 0 <= ssim_loss(a, b) <= 1


def test_pair_loss_fixed(rng):
    a, b = rng.random((16, 16)), rng.random((16, 16))
    assert pair_loss_fixed(a, a) == 0
    assert pair_loss_fixed(a, b, 1.0, 0.0) == l1_mean(a, b)
    expected = 0.1 * l1_mean(a, b) + 0.1 * (1 - ssim(a, b)) / 2
    assert pair_loss_fixed(a, b) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValueError):
        pair_loss_fixed(a, b, -0.1, 0.1)


def test_pair_loss_fixed_linear_combination():
    # l1 = 0.3 and ssim-loss = 0.1 combine to 0.04 at lambda = 0.1
    assert 0.1 * 0.3 + 0.1 * ssim_to_loss(0.8) == pytest.approx(0.04)


def test_pair_loss_weighted(rng):
    a, b = rng.random((16, 16)), rng.random((16, 16))
    l1, sl = l1_mean(a, b), ssim_loss(a, b)
    assert pair_loss_weighted(a, b, 1.0) == l1
    assert pair_loss_weighted(a, b, 0.0) == sl
    for w in np.linspace(0, 1, 11):
        v = pair_loss_weighted(a, b, w)
        assert min(l1, sl) - 1e-15 <= v <= max(l1, sl) + 1e-15
    with pytest.raises(ValueError):
        pair_loss_weighted(a, b, 1.2)


def test_pair_loss_weighted_monotonicity(rng):
    a, b = rng.random((16, 16)), rng.random((16, 16))
    vals = [pair_loss_weighted(a, b, w) for w in np.linspace(0, 1, 21)]
    diffs = np.diff(vals)
    if l1_mean(a, b) > ssim_loss(a, b):
        assert np.all(diffs >= -1e-15)
    else:
        assert np.all(diffs <= 1e-15)


def test_fixed_and_weighted_scaling(rng):
    a, b = rng.random((16, 16)), rng.random((16, 16))
    assert 5 * pair_loss_fixed(a, b, 0.1, 0.1) == pytest.approx(pair_loss_weighted(a, b, 0.5), rel=1e-14)


def test_depth_transform():
    assert np.all(depth_transform(np.full((2, 2), 10.0), 10.0) == 1.0)
    assert depth_transform(np.array([0.4]), 10.0)[0] == 25.0
    y = np.linspace(0.4, 10, 33)
    assert np.allclose(depth_transform(depth_transform(y, 10.0), 10.0), y, atol=1e-12, rtol=0)
    with pytest.raises(ValueError):
        depth_transform(np.array([0.0]), 10.0)
    with pytest.raises(ValueError):
        depth_transform(np.array([1.0]), 0.0)


def test_residual_compose(rng):
    init = rng.random((5, 5, 3))
    target = rng.random((5, 5, 3))
    assert np.array_equal(residual_compose(init, np.zeros_like(init)), init)
    assert np.allclose(residual_compose(init, target - init), target, atol=1e-15)
    assert residual_compose(np.array([0.9]), np.array([0.3]))[0] == pytest.approx(1.2)


def test_residual_round_trip_at_storage_precision(rng):
    init = rng.random((64, 64, 3)).astype(np.float32).astype(np.float64)
    residue = rng.uniform(-1, 1, (64, 64, 3)).astype(np.float32).astype(np.float64)
    assert np.array_equal(residual_compose(init, residue) - init, residue)


def test_totals():
    assert total_technique1(0, 0) == 0
    assert total_technique1(0.1, 0.2) == pytest.approx(0.3)
    assert total_technique2(0.1, 0.2, 0.3) == pytest.approx(0.6)
    assert total_technique3(0.1, 0.2, 0.3, 0.4) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        total_technique1(-0.1, 0.2)


def test_variant2():
    assert total_variant2([0.2, 0.6], [1.0]) == 0.2
    assert total_variant2([0.2, 0.6], [0.0]) == 0.6
    assert total_variant2([0.2, 0.6], [0.5]) == pytest.approx(0.4)
    w = softmax([0.3, -1.0, 2.0, 0.1])[:3]
    comps = [0.1, 0.2, 0.3, 0.4]
    expected = w[0] * 0.1 + w[1] * 0.2 + w[2] * 0.3 + (1 - w.sum()) * 0.4
    assert total_variant2(comps, w) == pytest.approx(expected)
    with pytest.raises(ValueError, match="sum"):
        total_variant2([0.1, 0.2, 0.3], [0.7, 0.6])
    with pytest.raises(ValueError, match="weights"):
        total_variant2([0.1, 0.2, 0.3], [0.5])


@settings(max_examples=200, deadline=None)
@given(
    comps=st.lists(st.floats(0, 10), min_size=2, max_size=4),
    raw=st.lists(st.floats(0, 1), min_size=4, max_size=4),
)
def test_variant2_is_convex(comps, raw):
    raw = np.array(raw[: len(comps)]) + 1e-9
    w = (raw / raw.sum())[:-1]
    v = total_variant2(comps, w)
    assert min(comps) - 1e-9 <= v <= max(comps) + 1e-9


@settings(max_examples=100, deadline=None)
@given(comps=st.lists(st.floats(0, 10), min_size=4, max_size=4))
def test_totals_zero_iff_components_zero(comps):
    for fn, n in ((total_technique1, 2), (total_technique2, 3), (total_technique3, 4)):
        v = fn(*comps[:n])
        assert v >= 0
        assert (v == 0) == all(c == 0 for c in comps[:n])


def test_batch_mean_weight():
    assert batch_mean_weight([0.3, 0.3, 0.3]) == pytest.approx(0.3)
    assert batch_mean_weight([0, 1]) == 0.5
    assert batch_mean_weight([0.2, 0.4, 0.6]) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        batch_mean_weight([])
    with pytest.raises(ValueError):
        batch_mean_weight([1.2])


def test_softmax_on_simplex():
    w = softmax([1.0, 2.0, 3.0])
    assert w.sum() == pytest.approx(1.0) and np.all(w > 0)
