"""Thresholding, segment-level RPA metrics, baselines and anomaly-shift diagnostics."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .dtw import dtw_matrix
from .series import InvalidInputError

logger = logging.getLogger(__name__)


def zscore_scores(raw) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise InvalidInputError("cannot z-score an empty score vector")
    if raw.size < 2:
        raise InvalidInputError("z-scoring needs at least two scores")
    sd = raw.std()
    if sd == 0:
        logger.warning("constant anomaly scores; z-scores set to 0")
        return np.zeros_like(raw)
    return (raw - raw.mean()) / sd


def detect(scores, threshold: float) -> np.ndarray:
    """1 where the score strictly exceeds the threshold."""
    return (np.asarray(scores) > threshold).astype(np.int64)


def expand_predictions(predictions, starts, window: int, length: int | None = None) -> np.ndarray:
    """Point-level predictions: a point is flagged if any covering window is.

    ``predictions`` may be one vector or a ``(N, W)`` matrix of them.
    """
    predictions = np.asarray(predictions).astype(bool)
    single = predictions.ndim == 1
    predictions = np.atleast_2d(predictions)
    starts = np.asarray(starts, dtype=np.int64)
    if length is None:
        length = int(starts.max()) + window if starts.size else 0
    diff = np.zeros((len(predictions), length + 1), dtype=np.int64)
    rows, cols = np.nonzero(predictions)
    np.add.at(diff, (rows, starts[cols]), 1)
    np.add.at(diff, (rows, np.minimum(starts[cols] + window, length)), -1)
    points = (np.cumsum(diff[:, :-1], axis=1) > 0).astype(np.int64)
    return points[0] if single else points


@dataclass(frozen=True)
class RpaCounts:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def rpa_point_matrix(point_matrix, true_segments) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise ``(tp, fp, fn)`` arrays for a ``(N, L)`` matrix of point predictions.

    A true segment is a TP when it overlaps a flagged point, else an FN; each
    maximal flagged run touching no true segment is one FP.
    """
    pts = np.asarray(point_matrix).astype(bool)
    n, length = pts.shape
    csum = np.zeros((n, length + 1), dtype=np.int64)
    np.cumsum(pts, axis=1, out=csum[:, 1:])
    truth = np.zeros(length, dtype=bool)
    tp = np.zeros(n, dtype=np.int64)
    for a, b in true_segments:
        b = min(b, length)
        tp += (csum[:, b] - csum[:, a]) > 0
        truth[a:b] = True
    fn = len(true_segments) - tp
    run_start = pts & ~np.pad(pts, ((0, 0), (1, 0)))[:, :-1]
    runs = run_start.sum(axis=1)
    # number every run, then count distinct runs containing a true point
    run_id = np.cumsum(run_start, axis=1) + (np.arange(n) * (length + 1))[:, None]
    touched_ids = np.unique(run_id[pts & truth[None, :]])
    touched = np.bincount(touched_ids // (length + 1), minlength=n)
    return tp, runs - touched, fn


def rpa_from_points(predicted_points, true_segments) -> RpaCounts:
    """Segment-level counts from one vector of point predictions."""
    tp, fp, fn = rpa_point_matrix(np.asarray(predicted_points)[None, :], true_segments)
    return RpaCounts(int(tp[0]), int(fp[0]), int(fn[0]))


def _length(starts, true_segments, window: int) -> int:
    ends = [b for _, b in true_segments]
    return max([int(np.max(starts)) + window if len(starts) else 0] + ends)


def rpa_counts(predictions, starts, true_segments, window: int, length: int | None = None) -> RpaCounts:
    """RPA counts for window-level predictions covering ``[start, start + window)``."""
    length = _length(starts, true_segments, window) if length is None else length
    return rpa_from_points(expand_predictions(predictions, starts, window, length), true_segments)


def rpa_counts_batch(predictions, starts, true_segments, window: int, length: int | None = None):
    """``rpa_counts`` for each row of a ``(N, W)`` prediction matrix, as three int arrays."""
    length = _length(starts, true_segments, window) if length is None else length
    return rpa_point_matrix(expand_predictions(np.atleast_2d(predictions), starts, window, length), true_segments)


def f1_from_counts(tp, fp, fn) -> np.ndarray:
    tp, fp, fn = (np.asarray(v, dtype=np.float64) for v in (tp, fp, fn))
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        r = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        return np.where(p + r > 0, 2 * p * r / (p + r), 0.0)


@dataclass(frozen=True)
class ThresholdConfig:
    tau_min: float = -3.0
    tau_max: float = 3.0
    step: float = 0.05

    def __post_init__(self):
        if self.tau_min > self.tau_max or self.step <= 0:
            raise InvalidInputError("need tau_min <= tau_max and step > 0")

    def grid(self) -> np.ndarray:
        n = int(round((self.tau_max - self.tau_min) / self.step)) + 1
        return np.round(self.tau_min + self.step * np.arange(n), 10)


def threshold_search(scores, starts, true_segments, window: int, cfg: ThresholdConfig = ThresholdConfig(),
                     length: int | None = None) -> tuple[float, RpaCounts]:
    """Grid threshold maximising RPA F1; ties go to the larger threshold."""
    grid = cfg.grid()
    preds = (np.asarray(scores, dtype=np.float64)[None, :] > grid[:, None]).astype(np.int64)
    tp, fp, fn = rpa_counts_batch(preds, starts, true_segments, window, length)
    f1 = f1_from_counts(tp, fp, fn)
    i = len(grid) - 1 - int(np.argmax(f1[::-1]))
    return float(grid[i]), RpaCounts(int(tp[i]), int(fp[i]), int(fn[i]))


def weighted_f1(f1s, anomaly_counts) -> float:
    f1s = np.asarray(f1s, dtype=np.float64)
    e = np.asarray(anomaly_counts, dtype=np.float64)
    if f1s.shape != e.shape:
        raise InvalidInputError("need one anomaly count per F1")
    if np.any(e < 0) or e.sum() <= 0:
        raise InvalidInputError("anomaly counts must be non-negative with a positive total")
    return float(np.sum(e / e.sum() * f1s))


def ucr_top1(scores, starts, true_segments, window: int) -> bool:
    """Hit when the highest-scoring window (earliest on ties) overlaps the single true segment."""
    if len(true_segments) != 1:
        raise InvalidInputError(f"top-1 evaluation needs exactly one true segment, got {len(true_segments)}")
    a, b = true_segments[0]
    s = int(np.asarray(starts)[int(np.argmax(scores))])
    return s < b and a < s + window


def ras_baseline(n: int, seed: int = 0) -> np.ndarray:
    """Randomized anomaly scores: i.i.d. U(0, 1)."""
    return np.random.default_rng(seed).random(n)


@dataclass(frozen=True)
class ShiftReport:
    """Mean nearest-neighbour DTW distance to the real anomalies from pseudo and normal windows."""

    gap: float
    normal_gap: float


def shift_diagnostic(pseudo, real, normal, weights=None) -> ShiftReport:
    """``weights`` (one per pseudo window, e.g. soft anomaly labels) turn the pseudo mean into a weighted one."""
    pseudo, real, normal = (np.asarray(a, dtype=np.float64) for a in (pseudo, real, normal))
    if min(len(pseudo), len(real), len(normal)) == 0:
        raise InvalidInputError("shift diagnostic needs non-empty pseudo, real and normal sets")
    w = np.ones(len(pseudo)) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (len(pseudo),) or np.any(w < 0) or w.sum() <= 0:
        raise InvalidInputError("weights must be non-negative, one per pseudo window, with a positive sum")
    gap = np.average(dtw_matrix(pseudo, real).min(axis=1), weights=w)
    normal_gap = dtw_matrix(normal, real).min(axis=1).mean()
    return ShiftReport(float(gap), float(normal_gap))


@dataclass
class SubsetResult:
    name: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    threshold: float | None
    anomalies: int

    @classmethod
    def from_counts(cls, name, counts: RpaCounts, threshold, anomalies) -> SubsetResult:
        return cls(name, counts.tp, counts.fp, counts.fn, counts.precision, counts.recall, counts.f1,
                   threshold, anomalies)


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    weighted_f1: float
    subsets: list = field(default_factory=list)

    @classmethod
    def aggregate(cls, subsets: list[SubsetResult]) -> EvalReport:
        tp = sum(s.tp for s in subsets)
        fp = sum(s.fp for s in subsets)
        fn = sum(s.fn for s in subsets)
        counts = RpaCounts(tp, fp, fn)
        weights = [s.anomalies for s in subsets]
        wf1 = weighted_f1([s.f1 for s in subsets], weights) if sum(weights) else 0.0
        return cls(tp, fp, fn, counts.precision, counts.recall, counts.f1, wf1, subsets)

    def to_dict(self) -> dict:
        return asdict(self)
