"""End-to-end glue: standardize, window, train, score and evaluate one subset."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .augment import cutaddpaste_arrays, normality_stats, revised_labels
from .evaluation import (
    RpaCounts,
    ShiftReport,
    SubsetResult,
    ThresholdConfig,
    detect,
    ras_baseline,
    rpa_counts,
    shift_diagnostic,
    threshold_search,
    ucr_top1,
    zscore_scores,
)
from .model import CAPMixConfig, TrainState, mixup_pair, score, train
from .series import TimeSeries, WindowConfig, anomaly_segments, standardize, window_array


@dataclass
class Split:
    x: np.ndarray
    y: np.ndarray
    starts: np.ndarray
    segments: list
    length: int


@dataclass
class PreparedSubset:
    name: str
    window: WindowConfig
    train: Split
    val: Split
    test: Split


def _split(series: TimeSeries, window: WindowConfig) -> Split:
    x, starts, y = window_array(series, window)
    return Split(x, y, starts, anomaly_segments(series.point_labels()), series.length)


def prepare_subset(name: str, train_series: TimeSeries, val_series: TimeSeries, test_series: TimeSeries,
                   window: WindowConfig) -> PreparedSubset:
    """Standardize with training statistics, then window every split."""
    train_std, stats = standardize(train_series)
    val_std, _ = standardize(val_series, stats)
    test_std, _ = standardize(test_series, stats)
    return PreparedSubset(name, window, _split(train_std, window), _split(val_std, window), _split(test_std, window))


def fit(subset: PreparedSubset, cfg: CAPMixConfig, seed: int, state: TrainState | None = None) -> TrainState:
    return train(subset.train.x, subset.train.y, cfg, seed, val_x=subset.val.x, val_y=subset.val.y, state=state)


def evaluate_scores(subset: PreparedSubset, val_scores, test_scores, thresholds: ThresholdConfig = ThresholdConfig(),
                    protocol: str = "threshold") -> SubsetResult:
    """Pick the threshold on validation z-scores and report RPA counts on test.

    ``protocol="top1"`` instead flags only the highest-scoring test window,
    for series with a single anomaly segment.
    """
    t = subset.window.length
    test = subset.test
    if protocol == "top1":
        hit = ucr_top1(test_scores, test.starts, test.segments, t)
        counts = RpaCounts(int(hit), int(not hit), int(not hit))
        return SubsetResult.from_counts(subset.name, counts, None, len(test.segments))
    if protocol != "threshold":
        raise ValueError(f"unknown protocol {protocol!r}")
    val = subset.val
    tau, _ = threshold_search(zscore_scores(val_scores), val.starts, val.segments, t, thresholds, val.length)
    preds = detect(zscore_scores(test_scores), tau)
    counts = rpa_counts(preds, test.starts, test.segments, t, test.length)
    return SubsetResult.from_counts(subset.name, counts, tau, len(test.segments))


def evaluate_model(subset: PreparedSubset, state: TrainState, thresholds: ThresholdConfig = ThresholdConfig(),
                   protocol: str = "threshold") -> SubsetResult:
    return evaluate_scores(subset, score(state.model, subset.val.x), score(state.model, subset.test.x),
                           thresholds, protocol)


def evaluate_ras(subset: PreparedSubset, seed: int, thresholds: ThresholdConfig = ThresholdConfig(),
                 protocol: str = "threshold") -> SubsetResult:
    rng = np.random.default_rng([seed, 11])
    val_scores = ras_baseline(len(subset.val.x), int(rng.integers(2**31)))
    test_scores = ras_baseline(len(subset.test.x), int(rng.integers(2**31)))
    return evaluate_scores(subset, val_scores, test_scores, thresholds, protocol)


def pseudo_anomaly_set(train_x: np.ndarray, cfg: CAPMixConfig, rng: np.random.Generator,
                       batch: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Training-time anomaly samples in input space, with their anomaly labels as weights.

    Each batch gets CutAddPaste pseudo-anomalies. Labels are revised when
    ``gamma > 1``. When the variant mixes, originals (label 0) and
    pseudo-anomalies are mixed as at the input layer and every sample with a
    positive mixed label is kept.
    """
    stats = normality_stats(train_x) if cfg.revision.gamma > 1 else None
    windows, weights = [], []
    for s in range(0, len(train_x) - 1, batch):
        xb = train_x[s : s + batch]
        if len(xb) < 2:
            break
        pseudo, _, _ = cutaddpaste_arrays(xb, cfg.augment, rng)
        y = revised_labels(pseudo, stats, cfg.revision) if stats is not None else np.ones(len(pseudo))
        if cfg.mixup.layers:
            x_all = np.concatenate([xb, pseudo])
            y_all = np.concatenate([np.zeros(len(xb)), y])
            lam = float(rng.beta(cfg.mixup.alpha, cfg.mixup.alpha))
            pseudo, y = mixup_pair(x_all, y_all, lam, rng.permutation(len(y_all)))
        keep = y > 0
        windows.append(pseudo[keep])
        weights.append(y[keep])
    return np.concatenate(windows), np.concatenate(weights)


def shift_report(subset: PreparedSubset, cfg: CAPMixConfig, seed: int, max_windows: int = 256,
                 max_normal: int = 256) -> ShiftReport:
    """Gap between one variant's pseudo-anomalies and the real test anomalies."""
    rng = np.random.default_rng([seed, 21])
    real = subset.test.x[subset.test.y == 1]
    normal = subset.train.x[rng.choice(len(subset.train.x), min(max_normal, len(subset.train.x)), replace=False)]
    pseudo, weights = pseudo_anomaly_set(subset.train.x, cfg, rng)
    if len(pseudo) > max_windows:
        pick = rng.choice(len(pseudo), max_windows, replace=False)
        pseudo, weights = pseudo[pick], weights[pick]
    return shift_diagnostic(pseudo, real, normal, weights)
