"""Variant x seed x contamination grids with per-cell output directories."""

from __future__ import annotations

import copy
import csv
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np

from .config import ExperimentManifest, parse_run_config
from .model import ConfigError
from .runner import run_eval, run_train

logger = logging.getLogger(__name__)

RESULT_FIELDS = ["variant", "seed", "contamination", "status", "f1", "precision", "recall", "tp", "fp", "fn",
                 "error"]
SUMMARY_FIELDS = ["variant", "contamination", "runs", "failed", "f1_mean", "f1_std", "precision_mean",
                  "precision_std", "recall_mean", "recall_std"]


def cell_name(variant: str, seed: int, contamination: float) -> str:
    return f"{variant}_seed{seed}_contam{contamination:g}"


def cell_config(manifest: ExperimentManifest, variant: str, seed: int, contamination: float, base_dir: str):
    raw = copy.deepcopy(manifest.base)
    for key in ("variant", "seed", "out"):
        raw.pop(key, None)
    if raw.get("subsets"):
        if contamination:
            raise ConfigError("contamination multipliers need the synthetic benchmark as data source")
    else:
        bench = dict(raw.get("benchmark") or {})
        bench["contamination"] = float(contamination)
        raw["benchmark"] = bench
    raw.update(variant=variant, seed=int(seed))
    return parse_run_config(raw, base_dir)


def run_cell(manifest: ExperimentManifest, variant: str, seed: int, contamination: float, out: str,
             base_dir: str) -> dict:
    """Train and evaluate one grid cell; failures become a row with status 'failed'."""
    row = {"variant": variant, "seed": seed, "contamination": contamination}
    try:
        cfg = cell_config(manifest, variant, seed, contamination, base_dir)
        cell_dir = Path(out) / "cells" / cell_name(variant, seed, contamination)
        run_train(cfg, cell_dir)
        rep = run_eval(cfg, cell_dir)
        row.update(status="ok", f1=rep.f1, precision=rep.precision, recall=rep.recall, tp=rep.tp, fp=rep.fp,
                   fn=rep.fn, error="")
    except Exception as exc:  # a failed cell must not stop the grid
        logger.error("cell %s failed: %s", cell_name(variant, seed, contamination), exc)
        logger.debug(traceback.format_exc())
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


def summarize(rows: list[dict]) -> list[dict]:
    """Mean and population std of F1/precision/recall per (variant, contamination)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["variant"], r["contamination"]), []).append(r)
    out = []
    for (variant, contam), rs in groups.items():
        ok = [r for r in rs if r["status"] == "ok"]
        rec = {"variant": variant, "contamination": contam, "runs": len(ok), "failed": len(rs) - len(ok)}
        for m in ("f1", "precision", "recall"):
            vals = np.array([r[m] for r in ok], dtype=float)
            rec[f"{m}_mean"] = float(vals.mean()) if vals.size else float("nan")
            rec[f"{m}_std"] = float(vals.std()) if vals.size else float("nan")
        out.append(rec)
    return out


def _write(path: Path, fields: list[str], rows: list[dict]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n", restval="")
        writer.writeheader()
        writer.writerows(rows)


def run_experiment(manifest: ExperimentManifest, out: Path, workers: int = 1, base_dir: str = ".") -> list[dict]:
    """Run every cell (in parallel up to ``workers``) and write results.csv and summary.csv."""
    out.mkdir(parents=True, exist_ok=True)
    cells = list(product(manifest.variants, manifest.seeds, manifest.contamination))
    args = [(manifest, v, s, c, str(out), base_dir) for v, s, c in cells]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, *zip(*args)))
    else:
        rows = [run_cell(*a) for a in args]
    _write(out / "results.csv", RESULT_FIELDS, rows)
    _write(out / "summary.csv", SUMMARY_FIELDS, summarize(rows))
    return rows
