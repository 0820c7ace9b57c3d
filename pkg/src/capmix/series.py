"""Time-series containers, windowing, standardization and CSV I/O."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class InvalidInputError(ValueError):
    """Raised when inputs violate an operation's preconditions."""


@dataclass(frozen=True)
class TimeSeries:
    """An ordered multivariate series of shape ``(l, d)`` with optional point labels."""

    values: np.ndarray
    labels: np.ndarray | None = None
    name: str = "series"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidInputError(f"values must be a non-empty (l, d) matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("values contain non-finite entries")
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (values.shape[0],):
                raise InvalidInputError("labels must have length l")
            if not np.all((labels == 0) | (labels == 1)):
                raise InvalidInputError("labels must be binary")
            object.__setattr__(self, "labels", labels.astype(np.int64))

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]

    def point_labels(self) -> np.ndarray:
        if self.labels is None:
            return np.zeros(self.length, dtype=np.int64)
        return self.labels

    def slice(self, start: int, stop: int, name: str | None = None) -> TimeSeries:
        labels = None if self.labels is None else self.labels[start:stop]
        return TimeSeries(self.values[start:stop], labels, name or self.name)


@dataclass(frozen=True)
class WindowConfig:
    length: int
    stride: int

    def __post_init__(self):
        if self.length < 1 or self.stride < 1 or self.stride > self.length:
            raise InvalidInputError(f"need 1 <= stride <= length, got length={self.length} stride={self.stride}")


@dataclass(frozen=True)
class Window:
    """One ``(t, d)`` subsequence. ``label`` may be soft after label revision."""

    data: np.ndarray
    start: int = 0
    label: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.label <= 1.0:
            raise InvalidInputError(f"window label must lie in [0, 1], got {self.label}")


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        std = np.asarray(self.std, dtype=np.float64)
        if np.any(std <= 0):
            raise InvalidInputError("std entries must be positive")


def standardize(
    series: TimeSeries, stats: StandardizationStats | None = None
) -> tuple[TimeSeries, StandardizationStats]:
    """Z-score each dimension, fitting population statistics unless ``stats`` is given.

    Zero-variance dimensions get a std of 1 (and a warning) so they map to zeros.
    """
    if series.length == 0:
        raise InvalidInputError("cannot standardize an empty series")
    if stats is None:
        mean = series.values.mean(axis=0)
        std = series.values.std(axis=0)
        flat = std == 0
        if np.any(flat):
            logger.warning("zero-variance dimensions %s; using std=1", np.flatnonzero(flat).tolist())
            std = np.where(flat, 1.0, std)
        stats = StandardizationStats(mean, std)
    elif len(stats.mean) != series.dims:
        raise InvalidInputError("stats dimensionality does not match series")
    values = (series.values - stats.mean) / stats.std
    return TimeSeries(values, series.labels, series.name), stats


def inverse_standardize(series: TimeSeries, stats: StandardizationStats) -> TimeSeries:
    return TimeSeries(series.values * stats.std + stats.mean, series.labels, series.name)


def window_count(length: int, cfg: WindowConfig) -> int:
    return (length - cfg.length) // cfg.stride + 1


def window_starts(length: int, cfg: WindowConfig) -> np.ndarray:
    if cfg.length > length:
        raise InvalidInputError(f"window length {cfg.length} exceeds series length {length}")
    return np.arange(window_count(length, cfg)) * cfg.stride


def window_array(series: TimeSeries, cfg: WindowConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized windowing: returns ``(data[N, t, d], starts[N], labels[N])``.

    A window is anomalous if any point it covers is; the tail shorter than
    ``t`` is dropped.
    """
    starts = window_starts(series.length, cfg)
    idx = starts[:, None] + np.arange(cfg.length)[None, :]
    data = series.values[idx]
    labels = series.point_labels()[idx].max(axis=1).astype(np.float64)
    return data, starts, labels


def slide_windows(series: TimeSeries, cfg: WindowConfig) -> list[Window]:
    data, starts, labels = window_array(series, cfg)
    return [Window(d, int(s), float(y)) for d, s, y in zip(data, starts, labels)]


def stack_windows(windows: list[Window]) -> tuple[np.ndarray, np.ndarray]:
    """Stack windows into ``(N, t, d)`` data and an ``(N,)`` label vector."""
    return np.stack([w.data for w in windows]), np.array([w.label for w in windows], dtype=np.float64)


def anomaly_segments(labels) -> list[tuple[int, int]]:
    """Maximal runs of ones as ``(start, end_exclusive)`` pairs."""
    labels = np.asarray(labels).astype(np.int8)
    if labels.size == 0:
        return []
    padded = np.concatenate([[0], labels, [0]])
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def segments_to_labels(segments, length: int) -> np.ndarray:
    labels = np.zeros(length, dtype=np.int64)
    for a, b in segments:
        labels[a:b] = 1
    return labels


def read_csv(path, name: str | None = None) -> TimeSeries:
    """Read ``time,dim_0,...,dim_{d-1}[,label]``; rows are taken in file order."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty file") from None
        if not header or header[0] != "time":
            raise InvalidInputError(f"{path}: first column must be 'time'")
        has_label = header[-1] == "label"
        dim_cols = header[1:-1] if has_label else header[1:]
        if not dim_cols or any(c != f"dim_{i}" for i, c in enumerate(dim_cols)):
            raise InvalidInputError(f"{path}: expected columns dim_0..dim_{{d-1}}, got {dim_cols}")
        rows = [r for r in reader if r]
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    try:
        table = np.array([[float(x) for x in r] for r in rows])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None
    if table.shape[1] != len(header):
        raise InvalidInputError(f"{path}: ragged rows")
    values = table[:, 1 : 1 + len(dim_cols)]
    labels = table[:, -1] if has_label else None
    return TimeSeries(values, labels, name or path.stem)


def write_csv(series: TimeSeries, path) -> None:
    path = Path(path)
    header = ["time"] + [f"dim_{i}" for i in range(series.dims)]
    if series.labels is not None:
        header.append("label")
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(series.values):
            out = [str(i)] + [repr(float(v)) for v in row]
            if series.labels is not None:
                out.append(str(int(series.labels[i])))
            writer.writerow(out)
