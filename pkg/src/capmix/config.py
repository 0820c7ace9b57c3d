"""JSON run configuration with strict key checking."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .augment import AugmentConfig, RevisionConfig
from .evaluation import ThresholdConfig
from .model import CAPMixConfig, ConfigError, EncoderConfig, MixupConfig, ProjectorConfig, TrainConfig
from .series import InvalidInputError, WindowConfig

SCHEMA_VERSION = 1
VARIANTS = ("cap", "cap-gamma", "cap-mix", "capmix")


def _strict(cls, raw, where: str):
    """Instantiate dataclass ``cls`` from ``raw``, rejecting unknown keys."""
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 3e-4
    betas: tuple = (0.9, 0.99)
    eps: float = 1e-8
    weight_decay: float = 5e-4


@dataclass(frozen=True)
class EvalConfig:
    protocol: str = "threshold"
    tau_min: float = -3.0
    tau_max: float = 3.0
    step: float = 0.05

    def __post_init__(self):
        if self.protocol not in ("threshold", "top1"):
            raise ConfigError("protocol must be 'threshold' or 'top1'")

    def thresholds(self) -> ThresholdConfig:
        return ThresholdConfig(self.tau_min, self.tau_max, self.step)


@dataclass(frozen=True)
class BenchmarkSource:
    length: int = 20000
    contamination: float = 0.0
    seed: int | None = None


@dataclass(frozen=True)
class SubsetSource:
    """Either one ``csv`` cut by ``split`` fractions, or explicit ``train``/``val``/``test`` files."""

    name: str
    csv: str | None = None
    split: tuple = (0.5, 0.25, 0.25)
    train: str | None = None
    val: str | None = None
    test: str | None = None

    def __post_init__(self):
        explicit = (self.train, self.val, self.test)
        if self.csv is None and None in explicit:
            raise ConfigError(f"subset {self.name!r}: give 'csv' or all of 'train', 'val', 'test'")
        if self.csv is not None and any(explicit):
            raise ConfigError(f"subset {self.name!r}: 'csv' and explicit split files are exclusive")
        if len(self.split) != 3 or min(self.split) <= 0:
            raise ConfigError(f"subset {self.name!r}: split needs three positive fractions")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out: str | None = None
    variant: str | None = None
    benchmark: BenchmarkSource | None = None
    subsets: tuple = ()
    window: WindowConfig = field(default_factory=lambda: WindowConfig(32, 8))
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    revision: RevisionConfig = field(default_factory=RevisionConfig)
    mixup: MixupConfig = field(default_factory=MixupConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    projector: ProjectorConfig = field(default_factory=ProjectorConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    epochs: int = 30
    batch_size: int = 64
    patience: int | None = None
    eval: EvalConfig = field(default_factory=EvalConfig)
    base_dir: str = "."

    def __post_init__(self):
        if self.variant is not None and self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.benchmark is None and not self.subsets:
            object.__setattr__(self, "benchmark", BenchmarkSource())
        if self.benchmark is not None and self.subsets:
            raise ConfigError("give either 'benchmark' or 'subsets', not both")

    def model_config(self) -> CAPMixConfig:
        """Model/training configuration with the ablation variant applied."""
        mixup, revision = self.mixup, self.revision
        if self.variant in ("cap", "cap-mix"):
            revision = RevisionConfig(1.0)
        if self.variant in ("cap", "cap-gamma"):
            mixup = MixupConfig(mixup.alpha, ())
        o = self.optimizer
        train = TrainConfig(self.epochs, self.batch_size, o.lr, o.betas, o.eps, o.weight_decay, self.patience)
        return CAPMixConfig(self.encoder, self.projector, mixup, self.augment, revision, train)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict:
        raw = dataclasses.asdict(self)
        raw.pop("base_dir")
        raw["window"] = {"length": self.window.length, "stride": self.window.stride}
        raw["schema_version"] = SCHEMA_VERSION
        return raw


_SECTIONS = {
    "window": WindowConfig,
    "augment": AugmentConfig,
    "revision": RevisionConfig,
    "mixup": MixupConfig,
    "encoder": EncoderConfig,
    "projector": ProjectorConfig,
    "optimizer": OptimizerConfig,
    "eval": EvalConfig,
    "benchmark": BenchmarkSource,
}


def parse_run_config(raw: dict, base_dir: str = ".") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    version = raw.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    names = {f.name for f in dataclasses.fields(RunConfig)} - {"base_dir"}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}")
    kwargs = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            if key == "benchmark" and value is None:
                kwargs[key] = None
                continue
            try:
                kwargs[key] = _strict(_SECTIONS[key], value, key)
            except InvalidInputError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        elif key == "subsets":
            kwargs[key] = tuple(_strict(SubsetSource, s, f"subsets[{i}]") for i, s in enumerate(value))
        else:
            kwargs[key] = value
    try:
        return RunConfig(base_dir=str(base_dir), **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_run_config(raw, path.parent)


@dataclass(frozen=True)
class ExperimentManifest:
    """Grid of ablation variants x seeds x training-contamination multipliers."""

    variants: tuple = ("capmix",)
    seeds: tuple = (0,)
    contamination: tuple = (0.0,)
    base: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.variants or not self.seeds or not self.contamination:
            raise ConfigError("variants, seeds and contamination must be non-empty")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad:
            raise ConfigError(f"unknown variants {bad}; expected {VARIANTS}")
        if any(c < 0 for c in self.contamination):
            raise ConfigError("contamination multipliers must be non-negative")


def parse_manifest(raw: dict) -> ExperimentManifest:
    return _strict(ExperimentManifest, raw, "manifest")
