import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capmix.evaluation import (
    EvalReport,
    RpaCounts,
    SubsetResult,
    ThresholdConfig,
    detect,
    expand_predictions,
    ras_baseline,
    rpa_counts,
    rpa_counts_batch,
    rpa_from_points,
    shift_diagnostic,
    threshold_search,
    ucr_top1,
    weighted_f1,
    zscore_scores,
)
from capmix.series import InvalidInputError, anomaly_segments
from oracles import rpa_by_enumeration, rpa_by_scan

bits = st.lists(st.integers(0, 1), min_size=1, max_size=40)


def test_zscore_examples():
    np.testing.assert_allclose(zscore_scores([1, 2, 3]), [-1.224744871, 0, 1.224744871], atol=1e-9)
    np.testing.assert_array_equal(zscore_scores([4.0, 4.0, 4.0]), 0.0)
    with pytest.raises(InvalidInputError):
        zscore_scores([])


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30), st.floats(0.1, 10), st.floats(-100, 100))
def test_zscore_affine_invariance(scores, scale, shift):
    s = np.array(scores)
    if s.std() < 1e-6:
        return
    np.testing.assert_allclose(zscore_scores(scale * s + shift), zscore_scores(s), atol=1e-6)


def test_detect_is_strict_and_monotone():
    np.testing.assert_array_equal(detect([-1, 0, 2], 0), [0, 0, 1])
    s = np.random.default_rng(0).normal(size=50)
    assert detect(s, s.max() + 1).sum() == 0
    counts = [detect(s, tau).sum() for tau in np.linspace(-3, 3, 61)]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_rpa_examples():
    pts = np.zeros(50, dtype=int)
    pts[15] = 1
    pts[40:42] = 1
    assert rpa_from_points(pts, [(10, 20)]) == RpaCounts(1, 1, 0)
    truth = np.zeros(30, dtype=int)
    truth[3:7] = truth[12:13] = truth[20:28] = 1
    segs = anomaly_segments(truth)
    assert rpa_from_points(truth, segs) == RpaCounts(3, 0, 0)
    assert rpa_from_points(np.zeros(30), segs) == RpaCounts(0, 0, 3)


def test_rpa_single_point_set_oracle_agrees_with_scan_oracle():
    # the two oracles use unrelated algorithms; all pairs up to length 7
    for n in range(1, 8):
        mat = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
        for truth in mat:
            tp, fp, fn = rpa_by_scan(mat, truth)
            for k, p in enumerate(mat):
                assert rpa_by_enumeration(p, truth) == (tp[k], fp[k], fn[k])


def test_rpa_exhaustive_up_to_length_nine():
    # the acceptance suite extends this to length 12
    for n in range(1, 10):
        mat = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
        for truth in mat:
            got = rpa_counts_batch(mat, np.arange(n), anomaly_segments(truth), 1, n)
            want = rpa_by_scan(mat, truth)
            for g, w in zip(got, want):
                np.testing.assert_array_equal(g, w)


@given(bits, st.integers(0, 2**32 - 1))
def test_rpa_matches_set_oracle(truth, seed):
    truth = np.array(truth)
    pred = np.random.default_rng(seed).integers(0, 2, truth.size)
    c = rpa_from_points(pred, anomaly_segments(truth))
    assert (c.tp, c.fp, c.fn) == rpa_by_enumeration(pred, truth)


@settings(max_examples=50)
@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_window_level_counts_match_point_expansion(window, stride, seed):
    rng = np.random.default_rng(seed)
    length = 40
    starts = np.arange(0, length - window + 1, stride)
    truth = (rng.random(length) < 0.15).astype(int)
    segs = anomaly_segments(truth)
    preds = rng.integers(0, 2, size=(5, len(starts)))
    tp, fp, fn = rpa_counts_batch(preds, starts, segs, window, length)
    for k, p in enumerate(preds):
        pts = np.zeros(length, dtype=int)
        for s, flag in zip(starts, p):
            if flag:
                pts[s : s + window] = 1
        np.testing.assert_array_equal(expand_predictions(p, starts, window, length), pts)
        c = rpa_counts(p, starts, segs, window, length)
        assert (c.tp, c.fp, c.fn) == (tp[k], fp[k], fn[k]) == rpa_by_enumeration(pts, truth)


@given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20))
def test_f1_bounds(tp, fp, fn):
    c = RpaCounts(tp, fp, fn)
    assert 0 <= c.f1 <= 1
    assert c.f1 <= 2 * min(c.precision, c.recall) + 1e-12
    if c.precision + c.recall:
        assert c.f1 == pytest.approx(2 * c.precision * c.recall / (c.precision + c.recall))


def test_threshold_search_separable():
    scores = np.array([-2.0, -1.5, -1.0, 1.0, 1.5])
    starts = np.arange(5) * 10
    tau, counts = threshold_search(scores, starts, [(30, 50)], 10)
    assert counts.f1 == 1.0 and -1.0 <= tau < 1.5
    tau, _ = threshold_search(scores, starts, [(30, 50)], 10, ThresholdConfig(0.25, 0.25, 0.05))
    assert tau == 0.25


def test_threshold_search_hand_case_is_grid_argmax():
    scores = np.array([0.1, 2.3, -0.4, 0.9, 1.7, -1.2, 0.6, 2.8, -0.1, 1.1])
    starts = np.arange(10) * 4
    segs = [(4, 8), (16, 20), (28, 32)]
    cfg = ThresholdConfig()
    tau, best = threshold_search(scores, starts, segs, 4, cfg, 40)
    f1s = {float(t): rpa_counts(detect(scores, t), starts, segs, 4, 40).f1 for t in cfg.grid()}
    top = max(f1s.values())
    assert best.f1 == top
    assert tau == max(t for t, f in f1s.items() if f == top)


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=15), st.integers(0, 2**32 - 1))
def test_threshold_search_no_grid_point_beats_it(scores, seed):
    scores = np.array(scores)
    truth = (np.random.default_rng(seed).random(len(scores) + 3) < 0.3).astype(int)
    segs = anomaly_segments(truth)
    starts = np.arange(len(scores))
    cfg = ThresholdConfig(-3, 3, 0.25)
    _, best = threshold_search(scores, starts, segs, 4, cfg, len(truth))
    for t in cfg.grid():
        assert rpa_counts(detect(scores, t), starts, segs, 4, len(truth)).f1 <= best.f1


def test_threshold_grid():
    g = ThresholdConfig().grid()
    assert len(g) == 121 and g[0] == -3.0 and g[-1] == 3.0 and 0.0 in g
    with pytest.raises(InvalidInputError):
        ThresholdConfig(1, 0)


def test_weighted_f1_examples():
    assert weighted_f1([1.0, 0.5], [2, 3]) == 0.7
    assert weighted_f1([0.42], [7]) == 0.42
    assert weighted_f1([0.3] * 4, [1, 5, 2, 9]) == pytest.approx(0.3)
    with pytest.raises(InvalidInputError):
        weighted_f1([1.0, 0.5], [0, 0])


@given(st.lists(st.tuples(st.floats(0, 1), st.integers(1, 50)), min_size=1, max_size=8))
def test_weighted_f1_within_range(pairs):
    f1s, e = zip(*pairs)
    w = weighted_f1(f1s, e)
    assert min(f1s) - 1e-12 <= w <= max(f1s) + 1e-12


def test_ucr_top1():
    starts = np.arange(10) * 5
    s = np.zeros(10)
    s[4] = 1
    assert ucr_top1(s, starts, [(20, 25)], 5)
    assert not ucr_top1(s, starts, [(40, 45)], 5)
    tie = np.zeros(10)
    tie[[2, 8]] = 1  # earliest tied window wins
    assert ucr_top1(tie, starts, [(10, 12)], 5)
    assert not ucr_top1(tie, starts, [(40, 45)], 5)
    for segs in ([], [(0, 2), (10, 12)]):
        with pytest.raises(InvalidInputError):
            ucr_top1(s, starts, segs, 5)


def test_ras_baseline():
    a = ras_baseline(10_000, seed=3)
    assert np.all((a >= 0) & (a <= 1))
    np.testing.assert_array_equal(a, ras_baseline(10_000, seed=3))
    assert abs(a.mean() - 0.5) < 0.02


def test_shift_diagnostic():
    rng = np.random.default_rng(0)
    real = rng.normal(size=(5, 12, 2))
    normal = rng.normal(size=(6, 12, 2))
    assert shift_diagnostic(real, real, normal).gap == 0.0
    far = shift_diagnostic(real + 50.0, real, normal)
    assert far.gap > far.normal_gap
    base = shift_diagnostic(real[:3] + 0.3, real, normal)
    moved = shift_diagnostic(real[:3] + 0.3 + 7.0, real + 7.0, normal)
    assert moved.gap == pytest.approx(base.gap, rel=1e-12)
    with pytest.raises(InvalidInputError):
        shift_diagnostic(real[:0], real, normal)


def test_eval_report_aggregate():
    a = SubsetResult.from_counts("a", RpaCounts(2, 0, 0), 0.5, 2)
    b = SubsetResult.from_counts("b", RpaCounts(1, 1, 1), 0.0, 3)
    rep = EvalReport.aggregate([a, b])
    assert (rep.tp, rep.fp, rep.fn) == (3, 1, 1)
    assert rep.weighted_f1 == pytest.approx(0.4 * 1.0 + 0.6 * 0.5)
    assert rep.to_dict()["subsets"][1]["name"] == "b"


def test_shift_diagnostic_weights():
    rng = np.random.default_rng(1)
    real = rng.normal(size=(4, 10, 1))
    normal = rng.normal(size=(4, 10, 1))
    pseudo = np.concatenate([real[:2], real[:2] + 40.0])
    assert shift_diagnostic(pseudo, real, normal, [1, 1, 0, 0]).gap == 0.0
    assert shift_diagnostic(pseudo, real, normal, [1, 1, 1, 1]).gap > 0.0
    for bad in ([1, 1], [1, -1, 1, 1], [0, 0, 0, 0]):
        with pytest.raises(InvalidInputError):
            shift_diagnostic(pseudo, real, normal, bad)
