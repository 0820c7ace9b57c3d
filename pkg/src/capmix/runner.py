"""File-level runs: load data per a RunConfig, train, evaluate, and write artefacts."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from pathlib import Path

import numpy as np

from .config import RunConfig
from .evaluation import EvalReport, detect, zscore_scores
from .model import ConfigError, TrainState, load_checkpoint, save_checkpoint, score
from .pipeline import PreparedSubset, evaluate_ras, evaluate_scores, fit, prepare_subset
from .series import (
    InvalidInputError,
    StandardizationStats,
    TimeSeries,
    WindowConfig,
    read_csv,
    standardize,
    window_array,
)
from .synth import make_benchmark

logger = logging.getLogger(__name__)

CHECKPOINT = "checkpoint.npz"
LOSS_HISTORY = "loss_history.csv"
RESOLVED_CONFIG = "resolved_config.json"
METRICS = "metrics.json"


def dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read(path: Path, name: str) -> TimeSeries:
    if not path.exists():
        raise ConfigError(f"data file not found: {path}")
    return read_csv(path, name)


def load_splits(cfg: RunConfig) -> list[tuple[str, TimeSeries, TimeSeries, TimeSeries]]:
    """Raw (unstandardized) train/val/test series for every configured subset."""
    if cfg.benchmark is not None:
        b = cfg.benchmark
        seed = cfg.seed if b.seed is None else b.seed
        bench = make_benchmark(seed, b.length, b.contamination)
        return [("synthetic", bench.split("train"), bench.split("val"), bench.split("test"))]
    out = []
    for sub in cfg.subsets:
        if sub.csv is not None:
            full = _read(cfg.resolve(sub.csv), sub.name)
            fr = np.asarray(sub.split, dtype=float) / np.sum(sub.split)
            a = int(full.length * fr[0])
            b = a + int(full.length * fr[1])
            out.append((sub.name, full.slice(0, a), full.slice(a, b), full.slice(b, full.length)))
        else:
            out.append((sub.name, *(_read(cfg.resolve(p), sub.name) for p in (sub.train, sub.val, sub.test))))
    return out


def prepare(cfg: RunConfig) -> list[tuple[PreparedSubset, StandardizationStats]]:
    prepared = []
    for name, tr, va, te in load_splits(cfg):
        _, stats = standardize(tr)
        prepared.append((prepare_subset(name, tr, va, te, cfg.window), stats))
    return prepared


def resolved_snapshot(cfg: RunConfig) -> dict:
    """Config dict with data paths made absolute, enough to rerun the run exactly."""
    raw = cfg.to_dict()
    raw.pop("out", None)
    for sub in raw["subsets"]:
        for key in ("csv", "train", "val", "test"):
            if sub[key] is not None:
                sub[key] = str(cfg.resolve(sub[key]).resolve())
    return raw


def _comparable(model_cfg) -> dict:
    raw = json.loads(json.dumps(model_cfg.to_dict()))
    raw.pop("train")
    return raw


def write_history(state: TrainState, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for rec in state.history:
            writer.writerow([rec["epoch"], repr(rec["train_loss"]), repr(rec.get("val_loss", float("nan")))])


def run_train(cfg: RunConfig, out: Path, resume: bool = False) -> dict[str, TrainState]:
    """Train one model per subset under ``out/<subset>/``."""
    out.mkdir(parents=True, exist_ok=True)
    dump_json(resolved_snapshot(cfg), out / RESOLVED_CONFIG)
    model_cfg = cfg.model_config()
    states = {}
    for subset, stats in prepare(cfg):
        sub_dir = out / subset.name
        sub_dir.mkdir(exist_ok=True)
        ckpt = sub_dir / CHECKPOINT
        state = None
        if resume and ckpt.exists():
            state, _ = _load(ckpt)
            if _comparable(state.config) != _comparable(model_cfg) or state.seed != cfg.seed:
                raise ConfigError(f"{ckpt}: checkpoint was trained with a different configuration or seed")
            state.config = dataclasses.replace(state.config, train=model_cfg.train)
            logger.info("resuming %s at epoch %d", subset.name, state.epoch)
        state = fit(subset, model_cfg, cfg.seed, state)
        extra = {
            "subset": subset.name,
            "window": {"length": cfg.window.length, "stride": cfg.window.stride},
            "mean": stats.mean.tolist(),
            "std": stats.std.tolist(),
        }
        save_checkpoint(ckpt, state, extra)
        write_history(state, sub_dir / LOSS_HISTORY)
        states[subset.name] = state
    return states


def _load(path: Path) -> tuple[TrainState, dict]:
    if not path.exists():
        raise ConfigError(f"checkpoint not found: {path}")
    try:
        return load_checkpoint(path)
    except (ValueError, KeyError, OSError) as exc:
        raise ConfigError(f"{path}: unreadable checkpoint ({exc})") from None


def write_scores(path: Path, starts, scores, predictions) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window_start", "score", "prediction"])
        for s, v, p in zip(starts, scores, predictions):
            writer.writerow([int(s), repr(float(v)), int(p)])


def run_eval(cfg: RunConfig, out: Path, checkpoint_dir: Path | None = None, ras: bool = False) -> EvalReport:
    """Score val/test per subset, pick thresholds on val, and write ``metrics.json``."""
    out.mkdir(parents=True, exist_ok=True)
    checkpoint_dir = checkpoint_dir or out
    thresholds = cfg.eval.thresholds()
    model_cfg = cfg.model_config()
    results = []
    for subset, _ in prepare(cfg):
        if ras:
            res = evaluate_ras(subset, cfg.seed, thresholds, cfg.eval.protocol)
        else:
            state, extra = _load(checkpoint_dir / subset.name / CHECKPOINT)
            d = subset.train.x.shape[2]
            if state.model.dims != d or state.model.window != cfg.window.length:
                raise ConfigError(
                    f"checkpoint for {subset.name!r} expects dims={state.model.dims}, "
                    f"window={state.model.window}; data has dims={d}, window={cfg.window.length}"
                )
            if _comparable(state.config) != _comparable(model_cfg):
                raise ConfigError(f"checkpoint for {subset.name!r} does not match the model configuration")
            val_scores = score(state.model, subset.val.x)
            test_scores = score(state.model, subset.test.x)
            res = evaluate_scores(subset, val_scores, test_scores, thresholds, cfg.eval.protocol)
            if res.threshold is None:
                preds = np.zeros(len(test_scores), dtype=np.int64)
                preds[int(np.argmax(test_scores))] = 1
            else:
                preds = detect(zscore_scores(test_scores), res.threshold)
            write_scores(out / f"scores_{subset.name}.csv", subset.test.starts, test_scores, preds)
        results.append(res)
    report = EvalReport.aggregate(results)
    doc = report.to_dict()
    doc.update({"method": "ras" if ras else (cfg.variant or "capmix"), "seed": cfg.seed})
    dump_json(doc, out / METRICS)
    return report


def run_score(checkpoint: Path, series_csv: Path, out: Path, threshold: float = 0.0) -> np.ndarray:
    """Score every window of a series CSV with a trained checkpoint."""
    state, extra = _load(checkpoint)
    if "window" not in extra:
        raise ConfigError(f"{checkpoint}: missing window/standardization metadata")
    window = WindowConfig(**extra["window"])
    series = _read(series_csv, series_csv.stem)
    if series.dims != state.model.dims:
        raise ConfigError(f"checkpoint expects {state.model.dims} dims, {series_csv} has {series.dims}")
    stats = StandardizationStats(np.asarray(extra["mean"]), np.asarray(extra["std"]))
    std, _ = standardize(series, stats)
    x, starts, _ = window_array(std, window)
    if len(x) == 0:
        raise InvalidInputError(f"{series_csv} is shorter than one window")
    scores = score(state.model, x)
    preds = detect(zscore_scores(scores), threshold) if len(scores) > 1 else np.zeros(len(scores), int)
    out.mkdir(parents=True, exist_ok=True)
    write_scores(out / "scores.csv", starts, scores, preds)
    return scores
