import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capmix.augment import (
    AugmentConfig,
    NormalityStats,
    PatchPlan,
    RevisionConfig,
    apply_cutaddpaste,
    cutaddpaste_arrays,
    cutaddpaste_batch,
    normality_stats,
    paste_patch,
    plan_batch,
    plan_patch,
    replay_plans,
    revise_labels,
    revised_labels,
)
from capmix.dtw import dtw
from capmix.series import InvalidInputError, Window
from oracles import cutaddpaste_by_elements


def windows(data):
    return [Window(x, i, 0.0) for i, x in enumerate(data)]


def test_config_resolution_and_validation():
    assert AugmentConfig().resolve(32, 3) == (8, 2)
    assert AugmentConfig().resolve(30, 1) == (8, 1)
    with pytest.raises(InvalidInputError):
        AugmentConfig(min_patch=32).resolve(32, 1)
    with pytest.raises(InvalidInputError):
        AugmentConfig(trend_dims=3).resolve(32, 2)
    for bad in ({"trend_bound": 0.0}, {"anomaly_ratio": 0.0}, {"anomaly_ratio": 1.5}, {"min_patch": 0}):
        with pytest.raises(InvalidInputError):
            AugmentConfig(**bad)


def test_plan_bounds_monte_carlo():
    rng = np.random.default_rng(0)
    cfg = AugmentConfig(min_patch=8, trend_bound=0.5, trend_dims=2)
    plans = [plan_patch(rng, 16, 64, 3, cfg) for _ in range(10_000)]
    lengths = np.array([p.length for p in plans])
    assert lengths.min() >= 8 and lengths.max() <= 63
    assert max(p.cut + p.length for p in plans) <= 64
    assert max(p.paste + p.length for p in plans) <= 64
    assert {p.source for p in plans} == set(range(16))
    for p in plans[:500]:
        assert len(p.dims) == 2 and len(set(p.dims)) == 2
        assert all(abs(s) <= 0.5 for s in p.slopes)
    slopes = np.concatenate([p.slopes for p in plans])
    assert abs(np.mean(slopes > 0) - 0.5) < 0.02


def test_plan_boundary_forcing():
    rng = np.random.default_rng(1)
    cfg = AugmentConfig(min_patch=15)
    for _ in range(200):
        p = plan_patch(rng, 4, 16, 1, cfg)
        assert p.length == 15 and p.cut in (0, 1) and p.paste in (0, 1)
        assert p.dims == (0,)


def test_plan_replay_is_deterministic():
    cfg = AugmentConfig()
    a = plan_patch(np.random.default_rng(9), 8, 32, 2, cfg)
    b = plan_patch(np.random.default_rng(9), 8, 32, 2, cfg)
    assert a == b
    assert PatchPlan.from_dict(a.to_dict()) == a


def test_identity_plan():
    x = np.random.default_rng(2).normal(size=(10, 2))
    plan = PatchPlan(4, 3, 3, 0, (0, 1), (0.0, 0.0))
    np.testing.assert_array_equal(paste_patch(x, x, plan), x)


def test_hand_example():
    dest = np.zeros((6, 1))
    source = np.arange(6.0)[:, None]
    out = paste_patch(dest, source, PatchPlan(3, 2, 1, 1, (0,), (0.5,)))
    np.testing.assert_array_equal(out[:, 0], [0.0, 2.5, 4.0, 5.5, 0.0, 0.0])


def test_shape_mismatch_rejected():
    with pytest.raises(InvalidInputError):
        paste_patch(np.zeros((6, 1)), np.zeros((5, 1)), PatchPlan(2, 0, 0, 0, (0,), (0.1,)))
    with pytest.raises(InvalidInputError):
        paste_patch(np.zeros((6, 1)), np.zeros((6, 1)), PatchPlan(4, 3, 0, 0, (0,), (0.1,)))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 24), st.integers(1, 4))
def test_matches_element_oracle(seed, t, d):
    rng = np.random.default_rng(seed)
    plan = plan_patch(rng, 2, t, d, AugmentConfig())
    dest, source = rng.normal(size=(t, d)), rng.normal(size=(t, d))
    out = apply_cutaddpaste(Window(dest, 5, 0.0), Window(source, 0, 0.0), plan)
    assert out.label == 1.0 and out.start == 5
    np.testing.assert_array_equal(out.data, cutaddpaste_by_elements(dest, source, plan))


def test_trend_breaks_correlation():
    base = np.sin(np.linspace(0, 4 * np.pi, 40))
    x = np.stack([base, 0.5 * base + 1], axis=1)
    out = paste_patch(x, x, PatchPlan(20, 5, 10, 0, (1,), (0.3,)))
    assert np.linalg.norm(np.cov(out.T) - np.cov(x.T)) > 0


def test_seasonality_break_on_patch():
    i = np.arange(200)
    dest = np.sin(2 * np.pi * 4 * i / 200)[:, None]
    source = np.sin(2 * np.pi * 8 * i / 200)[:, None]
    out = paste_patch(dest, source, PatchPlan(100, 0, 50, 0, (0,), (0.0,)))
    patch = out[50:150, 0]
    assert np.argmax(np.abs(np.fft.rfft(patch))) == 4
    assert np.argmax(np.abs(np.fft.rfft(dest[50:150, 0]))) == 2


def test_patch_end_deviation_grows_with_length():
    zeros = np.zeros((64, 1))
    ends = []
    for r in (2, 4, 8, 16):
        out = paste_patch(zeros, zeros, PatchPlan(r, 0, 0, 0, (0,), (0.5,)))
        ends.append(out[r - 1, 0])
    assert ends == [1.0, 2.0, 4.0, 8.0]
    assert ends[-1] > 3


def test_batch_counts_and_errors():
    rng = np.random.default_rng(3)
    data = rng.normal(size=(8, 16, 2))
    assert len(cutaddpaste_batch(windows(data), AugmentConfig(anomaly_ratio=0.5), rng)) == 4
    assert len(cutaddpaste_batch(windows(data), AugmentConfig(anomaly_ratio=1.0), rng)) == 8
    with pytest.raises(InvalidInputError):
        cutaddpaste_batch(windows(data[:1]), AugmentConfig(), rng)


def test_batch_windows_differ_from_origin():
    rng = np.random.default_rng(4)
    data = rng.normal(size=(8, 16, 2))
    cfg = AugmentConfig()
    pseudo, plans, keep = cutaddpaste_arrays(data, cfg, np.random.default_rng(5))
    zeta, _ = cfg.resolve(16, 2)
    for x, i in zip(pseudo, keep):
        assert np.count_nonzero(x != data[i]) >= zeta
    np.testing.assert_array_equal(replay_plans(data, plans, keep), pseudo)
    replan, rekeep = plan_batch(np.random.default_rng(5), 8, 16, 2, cfg)
    assert replan == plans and np.array_equal(rekeep, keep)


def test_normality_stats_cases():
    w = np.random.default_rng(6).normal(size=(5, 2))
    same = normality_stats(np.stack([w, w, w]))
    np.testing.assert_allclose(same.center, w, rtol=1e-15, atol=1e-15)
    assert same.mean_distance == pytest.approx(0.0, abs=1e-12)
    assert same.std_distance == pytest.approx(0.0, abs=1e-12)
    sym = normality_stats(windows(np.stack([w, -w])))
    np.testing.assert_array_equal(sym.center, 0.0)
    with pytest.raises(InvalidInputError):
        normality_stats(np.stack([w]))


def test_normality_stats_recompute():
    data = np.random.default_rng(7).normal(size=(3, 6, 2))
    stats = normality_stats(data)
    center = (data[0] + data[1] + data[2]) / 3
    dist = [dtw(x, center) for x in data]
    np.testing.assert_allclose(stats.center, center, rtol=1e-15)
    assert stats.mean_distance == pytest.approx(np.mean(dist), rel=1e-12)
    assert stats.std_distance == pytest.approx(np.std(dist), rel=1e-12)


def test_revision_branches_by_hand():
    stats = NormalityStats(np.zeros((3, 1)), 3.0, 1.5)
    # constant windows at level c lie 3|c| from the zero center; bound = 3 + 2 * 1.5 = 6
    pseudo = np.stack([np.full((3, 1), c) for c in (0.0, 1.5, 2.0, 2.5, -3.0)])
    np.testing.assert_array_equal(revised_labels(pseudo, stats, RevisionConfig(2.0)), [0.5, 0.5, 0.5, 1.0, 1.0])
    np.testing.assert_array_equal(revised_labels(pseudo, stats, RevisionConfig(1.0)), 1.0)
    out = revise_labels(windows(pseudo), stats, RevisionConfig(2.0))
    assert [w.label for w in out] == [0.5, 0.5, 0.5, 1.0, 1.0]


def test_gamma_clamped(caplog):
    assert RevisionConfig(0.5).gamma == 1.0
    assert "clamped" in caplog.text


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 10.0), st.integers(0, 1000))
def test_revised_labels_are_hard_or_soft(gamma, seed):
    rng = np.random.default_rng(seed)
    stats = normality_stats(rng.normal(size=(6, 8, 2)))
    labels = revised_labels(rng.normal(size=(5, 8, 2)) * 2, stats, RevisionConfig(gamma))
    assert set(labels.tolist()) <= {1.0, 1.0 / gamma}
