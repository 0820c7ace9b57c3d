"""The CAPMix network, dual-space mixup, and the training loop."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .augment import AugmentConfig, NormalityStats, RevisionConfig, cutaddpaste_arrays, normality_stats, revised_labels
from .nn import functional as F
from .nn.checkpoint import load_arrays, save_arrays
from .nn.layers import BatchNorm1d, Conv1d, Linear, Module
from .nn.optim import Adam
from .nn.tensor import Tensor
from .series import InvalidInputError

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised for inconsistent model or training configuration."""


class NumericalError(RuntimeError):
    """Raised when training produces a non-finite loss."""


@dataclass(frozen=True)
class EncoderConfig:
    channels: tuple = (32, 64, 128)
    kernel: int = 4
    padding: int = 1
    pool: int = 2
    pool_stride: int = 2
    pool_padding: int = 1
    dropout: float = 0.45

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if len(self.channels) != 3 or min(self.channels) < 1:
            raise ConfigError("the encoder has exactly three blocks with positive widths")
        if self.kernel < 1:
            raise ConfigError("kernel must be positive")
        if not 0 <= self.dropout < 1:
            raise ConfigError("dropout must lie in [0, 1)")

    def block_lengths(self, window: int) -> list[int]:
        """Temporal length after each block, for an input of ``window`` samples."""
        lengths, n = [], window
        for _ in self.channels:
            n = n + 2 * self.padding - self.kernel + 1
            if n >= 1:
                n = (n + 2 * self.pool_padding - self.pool) // self.pool_stride + 1
            if n < 1:
                raise ConfigError(f"window length {window} is too short for three conv/pool blocks")
            lengths.append(n)
        return lengths

    def output_width(self, window: int) -> int:
        return self.channels[-1] * self.block_lengths(window)[-1]


@dataclass(frozen=True)
class MixupConfig:
    """``layers`` holds the mixup sites: 0 is the input, 1-3 follow each encoder block."""

    alpha: float = 1.0
    layers: tuple = (0, 1, 2, 3)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(sorted(set(int(k) for k in self.layers))))
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if any(k not in (0, 1, 2, 3) for k in self.layers):
            raise ConfigError("mixup layers must be a subset of {0, 1, 2, 3}")


@dataclass(frozen=True)
class ProjectorConfig:
    hidden: int | None = None


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    lr: float = 3e-4
    betas: tuple = (0.9, 0.99)
    eps: float = 1e-8
    weight_decay: float = 5e-4
    patience: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if self.epochs < 0 or self.batch_size < 2:
            raise ConfigError("epochs must be >= 0 and batch_size >= 2")
        if self.patience is not None and self.patience < 1:
            raise ConfigError("patience must be >= 1")


@dataclass(frozen=True)
class CAPMixConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    projector: ProjectorConfig = field(default_factory=ProjectorConfig)
    mixup: MixupConfig = field(default_factory=MixupConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    revision: RevisionConfig = field(default_factory=RevisionConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> CAPMixConfig:
        return cls(
            EncoderConfig(**raw.get("encoder", {})),
            ProjectorConfig(**raw.get("projector", {})),
            MixupConfig(**raw.get("mixup", {})),
            AugmentConfig(**raw.get("augment", {})),
            RevisionConfig(**raw.get("revision", {})),
            TrainConfig(**raw.get("train", {})),
        )


class _Block(Module):
    def __init__(self, c_in: int, c_out: int, cfg: EncoderConfig, rng, dropout: float):
        super().__init__()
        self.cfg, self.dropout = cfg, dropout
        self.conv = self.add_child("conv", Conv1d(c_in, c_out, cfg.kernel, rng, padding=cfg.padding))
        self.bn = self.add_child("bn", BatchNorm1d(c_out))

    def __call__(self, h: Tensor, training: bool, rng) -> Tensor:
        h = F.relu(self.bn(self.conv(h), training))
        h = F.maxpool1d(h, self.cfg.pool, self.cfg.pool_stride, self.cfg.pool_padding)
        return F.dropout(h, self.dropout, training, rng)


class CAPMixNet(Module):
    """Three conv blocks (conv, BN, ReLU, max-pool; dropout in block 1) and a 2-way projector."""

    def __init__(self, dims: int, window: int, encoder: EncoderConfig = EncoderConfig(),
                 projector: ProjectorConfig = ProjectorConfig(), seed: int = 0):
        super().__init__()
        self.dims, self.window = dims, window
        self.encoder_cfg, self.projector_cfg = encoder, projector
        self.out_width = encoder.output_width(window)
        rng = np.random.default_rng([seed, 1])
        self.blocks = []
        c_in = dims
        for i, c in enumerate(encoder.channels):
            rate = encoder.dropout if i == 0 else 0.0
            self.blocks.append(self.add_child(f"block{i + 1}", _Block(c_in, c, encoder, rng, rate)))
            c_in = c
        hidden = projector.hidden or self.out_width
        self.hidden = self.add_child("proj_hidden", Linear(self.out_width, hidden, rng))
        self.hidden_bn = self.add_child("proj_bn", BatchNorm1d(hidden))
        self.head = self.add_child("proj_out", Linear(hidden, 2, rng))

    def _input(self, x) -> Tensor:
        if isinstance(x, Tensor):
            h = x.transpose(0, 2, 1)
        else:
            x = np.asarray(x, dtype=np.float64)
            if x.ndim != 3 or x.shape[1:] != (self.window, self.dims):
                raise InvalidInputError(f"expected (B, {self.window}, {self.dims}) windows, got {x.shape}")
            h = Tensor(x.transpose(0, 2, 1))
        return h

    def encode(self, x, training: bool = False, rng=None, mix=None) -> Tensor:
        """Representation ``z`` of shape ``(B, F)``.

        ``mix`` is ``(layer, lam, perm)``: the activations at ``layer`` are
        replaced by ``lam * h + (1 - lam) * h[perm]``.
        """
        h = self._input(x)
        if mix is not None and mix[0] == 0:
            h = _mix(h, mix[1], mix[2])
        for i, block in enumerate(self.blocks, start=1):
            h = block(h, training, rng)
            if mix is not None and mix[0] == i:
                h = _mix(h, mix[1], mix[2])
        return F.flatten(h)

    def project(self, z: Tensor, training: bool = False) -> Tensor:
        return self.head(F.relu(self.hidden_bn(self.hidden(z), training)))

    def anomaly_probability(self, x, training: bool = False, rng=None, mix=None) -> Tensor:
        q = self.project(self.encode(x, training, rng, mix), training)
        return F.softmax2(q)[:, 1]


def _mix(h, lam: float, perm: np.ndarray):
    if isinstance(h, Tensor):
        return h * lam + h[perm] * (1.0 - lam)
    return lam * h + (1.0 - lam) * h[perm]


def mixup_pair(x, y, lam: float, perm: np.ndarray):
    """Convex combination of each sample with its partner ``perm[i]``, labels included."""
    if not 0 <= lam <= 1:
        raise InvalidInputError("lambda must lie in [0, 1]")
    y = np.asarray(y, dtype=np.float64)
    return _mix(x, lam, perm), lam * y + (1.0 - lam) * y[perm]


def forward_train(model: CAPMixNet, x, y, mixup: MixupConfig, rng: np.random.Generator, *,
                  lam: float | None = None, layer: int | None = None, dropout_rng=None):
    """Train-mode forward with one mixup site drawn from ``mixup.layers``.

    Returns ``(p, mixed_labels)``. With no enabled layers nothing is drawn from
    ``rng`` and labels pass through. Dropout draws from ``dropout_rng`` when
    given, so the dropout stream does not depend on the mixup draws.
    """
    y = np.asarray(y, dtype=np.float64)
    dropout_rng = rng if dropout_rng is None else dropout_rng
    if not mixup.layers:
        return model.anomaly_probability(x, True, dropout_rng), y
    if layer is None:
        layer = int(rng.choice(mixup.layers))
    if lam is None:
        lam = float(rng.beta(mixup.alpha, mixup.alpha))
    perm = rng.permutation(len(y))
    y_mix = lam * y + (1.0 - lam) * y[perm]
    return model.anomaly_probability(x, True, dropout_rng, (layer, lam, perm)), y_mix


def score(model: CAPMixNet, windows, batch: int = 512) -> np.ndarray:
    """Eval-mode anomaly probabilities, one per window, in input order."""
    windows = np.asarray(windows, dtype=np.float64)
    out = [model.anomaly_probability(windows[s : s + batch]).data for s in range(0, len(windows), batch)]
    return np.concatenate(out) if out else np.zeros(0)


@dataclass
class TrainState:
    model: CAPMixNet
    optimizer: Adam
    config: CAPMixConfig
    seed: int
    epoch: int = 0
    history: list = field(default_factory=list)
    best_val: float = float("inf")
    bad_epochs: int = 0
    stopped: bool = False


def new_state(cfg: CAPMixConfig, dims: int, window: int, seed: int) -> TrainState:
    model = CAPMixNet(dims, window, cfg.encoder, cfg.projector, seed)
    t = cfg.train
    opt = Adam(model.named_parameters(), t.lr, t.betas, t.eps, t.weight_decay)
    return TrainState(model, opt, cfg, seed)


def _bce(p: np.ndarray, y: np.ndarray) -> float:
    return float(F.bce_loss(Tensor(p), y).data)


def train(
    train_x: np.ndarray,
    train_y: np.ndarray | None,
    cfg: CAPMixConfig = CAPMixConfig(),
    seed: int = 0,
    *,
    val_x: np.ndarray | None = None,
    val_y: np.ndarray | None = None,
    state: TrainState | None = None,
    stats: NormalityStats | None = None,
) -> TrainState:
    """Run (or resume) CAPMix training up to ``cfg.train.epochs`` epochs.

    Each batch of training windows gets CutAddPaste pseudo-anomalies whose
    labels are revised against the normality center, is concatenated with the
    originals, mixed at one sampled site, and fitted with BCE under Adam.
    Per-epoch random streams are derived from ``(seed, epoch)``, so a resumed
    run reproduces an uninterrupted one.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    n, t, d = train_x.shape
    train_y = np.zeros(n) if train_y is None else np.asarray(train_y, dtype=np.float64)
    if n < 2:
        raise InvalidInputError("need at least two training windows")
    state = state or new_state(cfg, d, t, seed)
    cfg, seed = state.config, state.seed
    tc = cfg.train
    if stats is None and cfg.revision.gamma > 1:
        stats = normality_stats(train_x)
    batch = min(tc.batch_size, n)

    while state.epoch < tc.epochs and not state.stopped:
        epoch = state.epoch
        aug_rng = np.random.default_rng([seed, epoch, 1])
        mix_rng = np.random.default_rng([seed, epoch, 2])
        drop_rng = np.random.default_rng([seed, epoch, 3])
        order = aug_rng.permutation(n)
        losses = []
        for s in range(0, n, batch):
            idx = order[s : s + batch]
            if idx.size < 2:
                continue
            xb, yb = train_x[idx], train_y[idx]
            pseudo, _, _ = cutaddpaste_arrays(xb, cfg.augment, aug_rng)
            if cfg.revision.gamma > 1:
                y_pseudo = revised_labels(pseudo, stats, cfg.revision)
            else:
                y_pseudo = np.ones(len(pseudo))
            x_all = np.concatenate([xb, pseudo])
            y_all = np.concatenate([yb, y_pseudo])
            p, y_mix = forward_train(state.model, x_all, y_all, cfg.mixup, mix_rng, dropout_rng=drop_rng)
            loss = F.bce_loss(p, y_mix)
            if not np.isfinite(loss.data):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch starting {s}")
            state.optimizer.zero_grad()
            loss.backward()
            state.optimizer.step()
            losses.append(float(loss.data))
        record = {"epoch": epoch, "train_loss": float(np.mean(losses))}
        if val_x is not None and len(val_x):
            vy = np.zeros(len(val_x)) if val_y is None else np.asarray(val_y, dtype=np.float64)
            val_loss = _bce(score(state.model, val_x), vy)
            record["val_loss"] = val_loss
            if val_loss < state.best_val:
                state.best_val, state.bad_epochs = val_loss, 0
            else:
                state.bad_epochs += 1
            if tc.patience is not None and state.bad_epochs >= tc.patience:
                state.stopped = True
        state.history.append(record)
        state.epoch += 1
        logger.info("epoch %d: %s", epoch, record)
    return state


# -- checkpoints -----------------------------------------------------------------


def save_checkpoint(path, state: TrainState, extra: dict | None = None) -> None:
    arrays = {f"model.{k}": v for k, v in state.model.state_dict().items()}
    arrays.update({f"adam.{k}": v for k, v in state.optimizer.state_dict().items()})
    meta = {
        "dims": state.model.dims,
        "window": state.model.window,
        "config": state.config.to_dict(),
        "seed": state.seed,
        "epoch": state.epoch,
        "history": state.history,
        "best_val": None if not np.isfinite(state.best_val) else state.best_val,
        "bad_epochs": state.bad_epochs,
        "stopped": state.stopped,
        "extra": extra or {},
    }
    save_arrays(path, arrays, meta)


def load_checkpoint(path) -> tuple[TrainState, dict]:
    arrays, meta = load_arrays(path)
    cfg = CAPMixConfig.from_dict(meta["config"])
    state = new_state(cfg, meta["dims"], meta["window"], meta["seed"])
    state.model.load_state_dict({k[6:]: v for k, v in arrays.items() if k.startswith("model.")})
    state.optimizer.load_state_dict({k[5:]: v for k, v in arrays.items() if k.startswith("adam.")})
    state.epoch = meta["epoch"]
    state.history = meta["history"]
    state.best_val = float("inf") if meta["best_val"] is None else meta["best_val"]
    state.bad_epochs = meta["bad_epochs"]
    state.stopped = meta["stopped"]
    return state, meta.get("extra", {})
