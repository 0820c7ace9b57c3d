"""``capmix`` command-line entry point.

Exit codes: 0 success, 1 some experiment cells failed, 2 usage or config
error, 3 numerical failure during training.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .augment import cutaddpaste_arrays, normality_stats, revised_labels
from .config import load_run_config, parse_manifest
from .experiment import run_experiment
from .model import ConfigError, NumericalError
from .runner import dump_json, run_eval, run_score, run_train
from .series import InvalidInputError, read_csv, window_array, write_csv
from .synth import (
    GeneratorConfig,
    GtAnomalySpec,
    SeasonSpec,
    ShapeletSpec,
    TrendSpec,
    generate,
    inject_ground_truth,
    make_benchmark,
)

logger = logging.getLogger("capmix")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    kw = {} if defaults else {"default": argparse.SUPPRESS}
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON configuration file", **kw)
    p.add_argument("--seed", type=int, help="override the configured seed", **kw)
    p.add_argument("--out", type=Path, help="output directory", **kw)
    p.add_argument("--workers", type=int, help="parallel experiment cells", **({"default": 1} if defaults else kw))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capmix", description="CAPMix time-series anomaly detection",
                                     parents=[_global_flags(True)])
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_global_flags(False)]
    sub.add_parser("synth", parents=common, help="generate a synthetic series with injected anomalies")
    p = sub.add_parser("inject", parents=common, help="CutAddPaste pseudo-anomalies for a series CSV")
    p.add_argument("--input", type=Path, required=True)
    p = sub.add_parser("train", parents=common, help="train one model per configured subset")
    p.add_argument("--resume", action="store_true", help="continue from checkpoints in the output directory")
    p = sub.add_parser("score", parents=common, help="score the windows of a series CSV")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=0.0, help="z-score cutoff for the prediction column")
    p = sub.add_parser("eval", parents=common, help="threshold on validation, report RPA metrics on test")
    p.add_argument("--checkpoint", type=Path, help="training output directory (defaults to --out)")
    p.add_argument("--ras", action="store_true", help="evaluate the random-score baseline instead of a model")
    sub.add_parser("experiment", parents=common, help="run a variant x seed x contamination grid")
    return parser


def _need(args, name: str):
    value = getattr(args, name, None)
    if value is None:
        raise ConfigError(f"--{name} is required for '{args.command}'")
    return value


def _run_config(args):
    cfg = load_run_config(_need(args, "config"))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _out(args, cfg=None) -> Path:
    if args.out is not None:
        return args.out
    if cfg is not None and cfg.out is not None:
        return cfg.resolve(cfg.out)
    raise ConfigError("no output directory: pass --out or set 'out' in the config")


def _load_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


_SYNTH_KEYS = {"schema_version", "length", "dims", "noise_std", "seed", "shapelet", "season", "trend",
               "anomalies", "benchmark", "out"}


def _tuplify(v):
    return tuple(_tuplify(x) for x in v) if isinstance(v, list) else v


def cmd_synth(args) -> int:
    raw = _load_json(_need(args, "config"))
    unknown = sorted(set(raw) - _SYNTH_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}")
    out = args.out or (Path(args.config).parent / raw["out"] if raw.get("out") else None)
    if out is None:
        raise ConfigError("no output directory: pass --out or set 'out' in the config")
    seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
    if "benchmark" in raw:
        try:
            bench = make_benchmark(seed, **raw["benchmark"])
        except TypeError as exc:
            raise ConfigError(f"benchmark: {exc}") from None
        series, specs, gen = bench.series, list(bench.specs), bench.config
        sidecar = {"benchmark": raw["benchmark"], "bounds": list(bench.bounds)}
    else:
        try:
            gen = GeneratorConfig(
                int(raw.get("length", 1000)), int(raw.get("dims", 1)), float(raw.get("noise_std", 0.0)), seed,
                ShapeletSpec(**{k: _tuplify(v) for k, v in raw.get("shapelet", {}).items()}),
                SeasonSpec(**raw.get("season", {})),
                TrendSpec(_tuplify(raw.get("trend", {}).get("segments", []))),
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        specs = []
        for i, s in enumerate(raw.get("anomalies", [])):
            try:
                specs.append(GtAnomalySpec.from_dict(s))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"anomaly spec #{i}: {exc}") from None
        series = inject_ground_truth(generate(gen), specs, seed, cfg=gen)
        sidecar = {}
    out.mkdir(parents=True, exist_ok=True)
    write_csv(series, out / "series.csv")
    sidecar.update(seed=seed, generator=dataclasses.asdict(gen), anomalies=[s.to_dict() for s in specs])
    dump_json(sidecar, out / "series.json")
    return EXIT_OK


def cmd_inject(args) -> int:
    cfg = _run_config(args)
    out = _out(args, cfg)
    series = read_csv(args.input) if args.input.exists() else None
    if series is None:
        raise ConfigError(f"input not found: {args.input}")
    data, starts, _ = window_array(series, cfg.window)
    mcfg = cfg.model_config()
    if len(data) < 2:
        raise InvalidInputError("need at least two windows to inject")
    stats = normality_stats(data) if mcfg.revision.gamma > 1 else None
    rng = np.random.default_rng([cfg.seed, 0, 1])
    batch = min(cfg.batch_size, len(data))
    batches, rows = [], []
    for b, s in enumerate(range(0, len(data), batch)):
        idx = np.arange(s, min(s + batch, len(data)))
        if idx.size < 2:
            break
        pseudo, plans, keep = cutaddpaste_arrays(data[idx], mcfg.augment, rng)
        labels = revised_labels(pseudo, stats, mcfg.revision) if stats is not None else np.ones(len(pseudo))
        batches.append({
            "window_starts": [int(starts[i]) for i in idx],
            "plans": [p.to_dict() for p in plans],
            "keep": [int(k) for k in keep],
            "labels": [float(v) for v in labels],
        })
        for j, (x, y) in enumerate(zip(pseudo, labels)):
            rows.append((b, j, x, y))
    out.mkdir(parents=True, exist_ok=True)
    with (out / "pseudo_windows.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["batch", "item", "step"] + [f"dim_{k}" for k in range(series.dims)] + ["label"])
        for b, j, x, y in rows:
            for step, row in enumerate(x):
                writer.writerow([b, j, step] + [repr(float(v)) for v in row] + [repr(float(y))])
    dump_json({
        "seed": cfg.seed,
        "input": args.input.name,
        "window": {"length": cfg.window.length, "stride": cfg.window.stride},
        "augment": dataclasses.asdict(mcfg.augment),
        "revision": dataclasses.asdict(mcfg.revision),
        "batches": batches,
    }, out / "manifest.json")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _run_config(args)
    run_train(cfg, _out(args, cfg), resume=args.resume)
    return EXIT_OK


def cmd_score(args) -> int:
    run_score(args.checkpoint, args.input, _need(args, "out"), args.threshold)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    out = _out(args, cfg)
    run_eval(cfg, out, args.checkpoint, ras=args.ras)
    return EXIT_OK


def cmd_experiment(args) -> int:
    path = _need(args, "config")
    raw = _load_json(path)
    raw.pop("schema_version", None)
    out_hint = raw.pop("out", None)
    manifest = parse_manifest({k: _tuplify(v) if k != "base" else v for k, v in raw.items()})
    out = args.out or (Path(path).parent / out_hint if out_hint else None)
    if out is None:
        raise ConfigError("no output directory: pass --out or set 'out' in the manifest")
    if args.seed is not None:
        manifest = dataclasses.replace(manifest, seeds=(args.seed,))
    rows = run_experiment(manifest, out, max(1, args.workers), str(Path(path).parent))
    return EXIT_PARTIAL if any(r["status"] != "ok" for r in rows) else EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "inject": cmd_inject,
    "train": cmd_train,
    "score": cmd_score,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    level = os.environ.get("CAPMIX_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"capmix: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, OSError) as exc:
        print(f"capmix: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
