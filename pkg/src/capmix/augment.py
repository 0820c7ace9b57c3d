"""CutAddPaste pseudo-anomaly injection and DTW-based label revision."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .dtw import dtw_to_reference
from .series import InvalidInputError, Window, stack_windows

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentConfig:
    """CutAddPaste knobs. ``None`` fields resolve against the window shape.

    min_patch: shortest patch length (defaults to ``ceil(t/4)``).
    trend_bound: upper bound on the per-step trend slope.
    trend_dims: how many dimensions receive a trend (defaults to ``ceil(d/2)``).
    anomaly_ratio: fraction of each batch kept as pseudo-anomalies.
    """

    min_patch: int | None = None
    trend_bound: float = 0.5
    trend_dims: int | None = None
    anomaly_ratio: float = 0.5

    def __post_init__(self):
        if self.trend_bound <= 0:
            raise InvalidInputError("trend_bound must be positive")
        if not 0 < self.anomaly_ratio <= 1:
            raise InvalidInputError("anomaly_ratio must lie in (0, 1]")
        if self.min_patch is not None and self.min_patch < 1:
            raise InvalidInputError("min_patch must be positive")
        if self.trend_dims is not None and self.trend_dims < 1:
            raise InvalidInputError("trend_dims must be >= 1")

    def resolve(self, t: int, d: int) -> tuple[int, int]:
        zeta = math.ceil(t / 4) if self.min_patch is None else self.min_patch
        e = math.ceil(d / 2) if self.trend_dims is None else self.trend_dims
        if not 0 < zeta < t:
            raise InvalidInputError(f"min_patch must lie in (0, {t}), got {zeta}")
        if e > d:
            raise InvalidInputError(f"trend_dims {e} exceeds d={d}")
        return zeta, e


@dataclass(frozen=True)
class PatchPlan:
    """Randomized decisions behind one CutAddPaste injection."""

    length: int
    cut: int
    paste: int
    source: int
    dims: tuple
    slopes: tuple

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "cut": self.cut,
            "paste": self.paste,
            "source": self.source,
            "dims": list(self.dims),
            "slopes": list(self.slopes),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> PatchPlan:
        return cls(int(raw["length"]), int(raw["cut"]), int(raw["paste"]), int(raw["source"]),
                   tuple(int(k) for k in raw["dims"]), tuple(float(m) for m in raw["slopes"]))


def plan_patch(rng: np.random.Generator, batch_size: int, t: int, d: int, cfg: AugmentConfig) -> PatchPlan:
    zeta, e = cfg.resolve(t, d)
    r = max(zeta, int(rng.random() * t))
    cut = int(rng.integers(0, t - r + 1))
    paste = int(rng.integers(0, t - r + 1))
    source = int(rng.integers(0, batch_size))
    dims = (0,) if d == 1 else tuple(int(k) for k in rng.choice(d, size=e, replace=False))
    slopes = []
    for _ in dims:
        factor = rng.random() * cfg.trend_bound
        sign = rng.choice([-1.0, 1.0])
        slopes.append(float(sign * factor))
    return PatchPlan(r, cut, paste, source, dims, tuple(slopes))


def paste_patch(dest: np.ndarray, source: np.ndarray, plan: PatchPlan) -> np.ndarray:
    """Array form of CutAddPaste: copy ``dest`` and overwrite the trended patch."""
    if dest.shape != source.shape or dest.ndim != 2:
        raise InvalidInputError(f"dest {dest.shape} and source {source.shape} must be equal (t, d) shapes")
    t, d = dest.shape
    r = plan.length
    if plan.cut + r > t or plan.paste + r > t or any(k >= d for k in plan.dims):
        raise InvalidInputError("patch plan does not fit the window shape")
    patch = source[plan.cut : plan.cut + r].copy()
    ramp = np.arange(1, r + 1, dtype=np.float64)
    for k, slope in zip(plan.dims, plan.slopes):
        patch[:, k] += slope * ramp
    out = dest.copy()
    out[plan.paste : plan.paste + r] = patch
    return out


def apply_cutaddpaste(dest: Window, source: Window, plan: PatchPlan) -> Window:
    return Window(paste_patch(dest.data, source.data, plan), dest.start, 1.0)


def plan_batch(
    rng: np.random.Generator, batch_size: int, t: int, d: int, cfg: AugmentConfig
) -> tuple[list[PatchPlan], np.ndarray]:
    """One plan per batch member, then the indices kept as pseudo-anomalies."""
    if batch_size < 2:
        raise InvalidInputError("CutAddPaste needs a batch of at least two windows")
    plans = [plan_patch(rng, batch_size, t, d, cfg) for _ in range(batch_size)]
    keep = rng.choice(batch_size, size=int(cfg.anomaly_ratio * batch_size), replace=False)
    return plans, keep


def cutaddpaste_arrays(
    data: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator
) -> tuple[np.ndarray, list[PatchPlan], np.ndarray]:
    """Batched CutAddPaste on ``(B, t, d)`` data; returns ``(pseudo, plans, kept_indices)``."""
    B, t, d = data.shape
    plans, keep = plan_batch(rng, B, t, d, cfg)
    return replay_plans(data, plans, keep), plans, keep


def replay_plans(data: np.ndarray, plans: list[PatchPlan], keep) -> np.ndarray:
    """Rebuild the kept pseudo-anomalies of one batch from its recorded plans."""
    data = np.asarray(data, dtype=np.float64)
    if len(plans) != len(data):
        raise InvalidInputError(f"{len(plans)} plans for a batch of {len(data)} windows")
    keep = np.asarray(keep, dtype=np.int64)
    if keep.size == 0:
        return np.empty((0,) + data.shape[1:])
    return np.stack([paste_patch(data[i], data[plans[i].source], plans[i]) for i in keep])


def cutaddpaste_batch(batch: list[Window], cfg: AugmentConfig, rng: np.random.Generator) -> list[Window]:
    """Pseudo-anomalies for a batch, each carrying the raw label 1."""
    if len(batch) < 2:
        raise InvalidInputError("CutAddPaste needs a batch of at least two windows")
    data, _ = stack_windows(batch)
    pseudo, _, keep = cutaddpaste_arrays(data, cfg, rng)
    return [Window(x, batch[i].start, 1.0) for x, i in zip(pseudo, keep)]


@dataclass(frozen=True)
class NormalityStats:
    center: np.ndarray
    mean_distance: float
    std_distance: float

    def __post_init__(self):
        if self.std_distance < 0:
            raise InvalidInputError("std_distance must be non-negative")


@dataclass(frozen=True)
class RevisionConfig:
    """Soft-label zone width; values below 1 are raised to 1."""

    gamma: float = 2.0

    def __post_init__(self):
        if self.gamma < 1:
            logger.warning("gamma=%s < 1 clamped to 1", self.gamma)
            object.__setattr__(self, "gamma", 1.0)

    @property
    def soft_label(self) -> float:
        return 1.0 / self.gamma


def _as_array(windows) -> np.ndarray:
    if isinstance(windows, np.ndarray):
        return windows
    return stack_windows(list(windows))[0]


def normality_stats(train_windows) -> NormalityStats:
    """Mean window plus the mean/std of training-window DTW distances to it."""
    data = _as_array(train_windows)
    if data.shape[0] < 2:
        raise InvalidInputError("need at least two training windows")
    center = data.mean(axis=0)
    dist = dtw_to_reference(data, center)
    return NormalityStats(center, float(dist.mean()), float(dist.std()))


def revised_labels(pseudo: np.ndarray, stats: NormalityStats, cfg: RevisionConfig) -> np.ndarray:
    """Hard label 1 beyond ``mu_d + gamma * sigma_d`` from the center, ``1/gamma`` otherwise."""
    if pseudo.shape[0] == 0:
        return np.zeros(0)
    dist = dtw_to_reference(pseudo, stats.center)
    bound = stats.mean_distance + cfg.gamma * stats.std_distance
    return np.where(dist > bound, 1.0, cfg.soft_label)


def revise_labels(pseudo: list[Window], stats: NormalityStats, cfg: RevisionConfig) -> list[Window]:
    if not pseudo:
        return []
    labels = revised_labels(_as_array(pseudo), stats, cfg)
    return [Window(w.data, w.start, float(y)) for w, y in zip(pseudo, labels)]
