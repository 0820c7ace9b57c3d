"""Structural-model synthetic series with labelled anomaly injection.

A clean series is ``mixing @ Gamma(2*pi*omega*i/w + phase) + offset + trend(i) + noise``.
Ground-truth anomalies are injected by re-evaluating the structural model on a
span with one component altered, so the original noise realisation is kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .series import InvalidInputError, TimeSeries

FAMILIES = ("sine", "square", "sawtooth")
KINDS = ("shape", "correlation", "seasonal", "trend", "global", "contextual")
POINT_KINDS = ("global", "contextual")

_SWAP = {"sine": "square", "square": "sawtooth", "sawtooth": "sine"}


def waveform(family: str, phase: np.ndarray) -> np.ndarray:
    if family == "sine":
        return np.sin(phase)
    if family == "square":
        return signal.square(phase)
    if family == "sawtooth":
        return signal.sawtooth(phase)
    raise InvalidInputError(f"unknown waveform family {family!r}")


@dataclass(frozen=True)
class ShapeletSpec:
    family: str = "sine"
    amplitude: tuple = (1.0,)
    phase: tuple = (0.0,)
    mixing: tuple = ((1.0,),)
    offset: tuple | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"family must be one of {FAMILIES}")
        amp = np.asarray(self.amplitude, dtype=float)
        mixing = np.asarray(self.mixing, dtype=float)
        d = amp.size
        if np.any(amp <= 0):
            raise InvalidInputError("amplitudes must be positive")
        if np.asarray(self.phase).size != d or mixing.shape != (d, d):
            raise InvalidInputError("amplitude, phase and mixing must agree on d")
        if np.any(np.all(mixing == 0, axis=1)):
            raise InvalidInputError("mixing rows must be non-zero")
        if self.offset is not None and np.asarray(self.offset).size != d:
            raise InvalidInputError("offset must have length d")

    @property
    def dims(self) -> int:
        return len(self.amplitude)

    def offset_vector(self) -> np.ndarray:
        return np.zeros(self.dims) if self.offset is None else np.asarray(self.offset, dtype=float)


@dataclass(frozen=True)
class SeasonSpec:
    """``omega`` cycles per ``window_length`` samples."""

    omega: float = 1.0
    window_length: int = 100

    def __post_init__(self):
        if self.omega <= 0 or self.window_length < 1:
            raise InvalidInputError("omega and window_length must be positive")


@dataclass(frozen=True)
class TrendSpec:
    """Piecewise-linear continuous trend; each segment is ``(start, slopes_per_dim)``."""

    segments: tuple = ()

    def __post_init__(self):
        starts = [s for s, _ in self.segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise InvalidInputError("trend segment starts must be strictly increasing")


@dataclass(frozen=True)
class GtAnomalySpec:
    kind: str
    start: int
    length: int
    magnitude: float
    dims: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.start < 0 or self.length < 1:
            raise InvalidInputError("start must be >= 0 and length >= 1")
        if self.magnitude <= 0:
            raise InvalidInputError("magnitude must be positive")
        if self.kind in POINT_KINDS and self.length != 1:
            raise InvalidInputError(f"{self.kind} anomalies are single points (length 1)")

    @property
    def end(self) -> int:
        return self.start + self.length

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "start": self.start,
            "length": self.length,
            "magnitude": self.magnitude,
            "dims": None if self.dims is None else list(self.dims),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> GtAnomalySpec:
        dims = raw.get("dims")
        return cls(raw["kind"], int(raw["start"]), int(raw["length"]), float(raw["magnitude"]),
                   None if dims is None else tuple(dims))


@dataclass(frozen=True)
class GeneratorConfig:
    length: int = 1000
    dims: int = 1
    noise_std: float = 0.0
    seed: int = 0
    shapelet: ShapeletSpec = field(default_factory=ShapeletSpec)
    season: SeasonSpec = field(default_factory=SeasonSpec)
    trend: TrendSpec = field(default_factory=TrendSpec)

    def __post_init__(self):
        if self.length < 1 or self.dims < 1:
            raise InvalidInputError("length and dims must be positive")
        if self.noise_std < 0:
            raise InvalidInputError("noise_std must be non-negative")
        if self.shapelet.dims != self.dims:
            raise InvalidInputError("shapelet dimensionality does not match dims")


def _phase(cfg: GeneratorConfig, idx: np.ndarray) -> np.ndarray:
    return 2 * np.pi * cfg.season.omega * idx / cfg.season.window_length


def _base(cfg: GeneratorConfig, phase: np.ndarray, family: str | None = None) -> np.ndarray:
    sh = cfg.shapelet
    amp = np.asarray(sh.amplitude, dtype=float)
    return amp * waveform(family or sh.family, phase[:, None] + np.asarray(sh.phase, dtype=float))


def trend_values(trend: TrendSpec, idx: np.ndarray, dims: int) -> np.ndarray:
    out = np.zeros((idx.size, dims))
    starts = [s for s, _ in trend.segments] + [np.inf]
    for k, (start, slopes) in enumerate(trend.segments):
        span = np.clip(idx - start, 0, starts[k + 1] - start)
        out += span[:, None] * np.asarray(slopes, dtype=float)
    return out


def clean_signal(cfg: GeneratorConfig, idx: np.ndarray | None = None) -> np.ndarray:
    """Noise-free structural model evaluated at integer timestamps ``idx``."""
    if idx is None:
        idx = np.arange(cfg.length)
    mixing = np.asarray(cfg.shapelet.mixing, dtype=float)
    base = _base(cfg, _phase(cfg, idx))
    return base @ mixing.T + cfg.shapelet.offset_vector() + trend_values(cfg.trend, idx, cfg.dims)


def generate(cfg: GeneratorConfig) -> TimeSeries:
    values = clean_signal(cfg)
    if cfg.noise_std > 0:
        rng = np.random.default_rng(cfg.seed)
        values = values + rng.normal(0.0, cfg.noise_std, size=values.shape)
    return TimeSeries(values, np.zeros(cfg.length, dtype=np.int64), f"synth-{cfg.seed}")


def check_specs(specs, length: int) -> None:
    ordered = sorted(enumerate(specs), key=lambda p: p[1].start)
    for i, spec in ordered:
        if spec.end > length:
            raise InvalidInputError(f"spec #{i} ({spec.kind} at {spec.start}) runs past the series end {length}")
    for (i, a), (j, b) in zip(ordered, ordered[1:]):
        if b.start < a.end:
            raise InvalidInputError(
                f"spec #{j} ({b.kind} at {b.start}) overlaps spec #{i} ({a.kind} at {a.start}..{a.end})"
            )


def _dims(spec: GtAnomalySpec, d: int, default) -> list[int]:
    dims = default if spec.dims is None else list(spec.dims)
    if any(k < 0 or k >= d for k in dims):
        raise InvalidInputError(f"spec dims {dims} out of range for d={d}")
    return dims


def inject_ground_truth(
    series: TimeSeries,
    specs,
    seed: int = 0,
    *,
    cfg: GeneratorConfig | None = None,
    context: int = 4,
) -> TimeSeries:
    """Apply each anomaly spec to its span and mark the span with label 1.

    Pattern kinds (shape, correlation, seasonal) re-evaluate the structural
    model and therefore need the ``cfg`` that generated ``series``.
    ``context`` is the half-width of the neighbourhood used for contextual
    anomalies.
    """
    specs = list(specs)
    if not specs:
        return series
    check_specs(specs, series.length)
    rng = np.random.default_rng(seed)
    values = series.values.copy()
    labels = series.point_labels().copy()
    d = series.dims
    mu = values.mean(axis=0)
    sigma = values.std(axis=0)
    sigma = np.where(sigma == 0, 1.0, sigma)

    for spec in specs:
        idx = np.arange(spec.start, spec.end)
        if spec.kind in ("shape", "correlation", "seasonal") and cfg is None:
            raise InvalidInputError(f"{spec.kind} injection needs the generator config")
        if spec.kind == "global":
            if spec.magnitude < 3:
                raise InvalidInputError("global anomalies need magnitude >= 3")
            for k in _dims(spec, d, range(d)):
                sign = rng.choice([-1.0, 1.0])
                values[spec.start, k] = mu[k] + sign * spec.magnitude * sigma[k]
        elif spec.kind == "contextual":
            if spec.magnitude <= 3:
                raise InvalidInputError("contextual anomalies need magnitude > 3")
            lo, hi = max(0, spec.start - context), min(series.length, spec.start + context + 1)
            neigh = np.r_[lo : spec.start, spec.start + 1 : hi]
            for k in _dims(spec, d, range(d)):
                loc_mu = values[neigh, k].mean()
                loc_sd = values[neigh, k].std()
                sign = 1.0 if mu[k] >= loc_mu else -1.0
                target = loc_mu + sign * spec.magnitude * loc_sd
                if abs(target - mu[k]) >= 3 * sigma[k] or loc_sd == 0:
                    raise InvalidInputError(
                        f"contextual spec at {spec.start} cannot stay within the global 3-sigma band"
                    )
                values[spec.start, k] = target
        elif spec.kind == "trend":
            ramp = np.arange(1, spec.length + 1) / spec.length
            for k in _dims(spec, d, range(d)):
                sign = rng.choice([-1.0, 1.0])
                values[idx, k] += sign * spec.magnitude * sigma[k] * ramp
        else:
            mixing = np.asarray(cfg.shapelet.mixing, dtype=float)
            phase = _phase(cfg, idx)
            old = _base(cfg, phase) @ mixing.T
            if spec.kind == "shape":
                new = _base(cfg, phase, _SWAP[cfg.shapelet.family]) @ mixing.T
            elif spec.kind == "seasonal":
                start_phase = _phase(cfg, np.array([spec.start]))[0]
                new = _base(cfg, start_phase + (phase - start_phase) * spec.magnitude) @ mixing.T
            else:
                if d < 2:
                    raise InvalidInputError("correlation anomalies need d >= 2")
                perturbed = mixing.copy()
                for k in _dims(spec, d, [d - 1]):
                    perturbed[k] *= 1.0 - spec.magnitude
                new = _base(cfg, phase) @ perturbed.T
            values[idx] += new - old
        labels[idx] = 1
    return TimeSeries(values, labels, series.name)


# -- default desk-scale benchmark -------------------------------------------------

BENCHMARK_KINDS = (
    ("shape", 40, 1.0),
    ("correlation", 40, 2.0),
    ("seasonal", 40, 2.0),
    ("trend", 30, 3.0),
    ("global", 1, 5.0),
    ("contextual", 1, 5.0),
)


def benchmark_config(seed: int = 0, length: int = 20000) -> GeneratorConfig:
    """Two correlated sine channels, ``Dim2 = 0.5 * Dim1 + 1``, plus noise."""
    shapelet = ShapeletSpec("sine", (1.0, 1.0), (0.0, 0.0), ((1.0, 0.0), (0.5, 0.0)), (0.0, 1.0))
    return GeneratorConfig(length, 2, 0.1, seed, shapelet, SeasonSpec(1.0, 50))


def _place(rng, lo: int, hi: int, count: int, margin: int, offset: int = 0) -> list[GtAnomalySpec]:
    """Place ``count`` specs cycling through the benchmark kinds, one per equal slot of ``[lo, hi)``."""
    slot = (hi - lo) // count
    kinds = [BENCHMARK_KINDS[(offset + i) % len(BENCHMARK_KINDS)] for i in range(count)]
    order = rng.permutation(count)
    specs = []
    for s, i in enumerate(order):
        kind, length, mag = kinds[i]
        a = lo + s * slot + margin
        b = lo + (s + 1) * slot - margin - length
        if b <= a:
            raise InvalidInputError("too many anomalies for the available span")
        specs.append(GtAnomalySpec(kind, int(rng.integers(a, b)), length, mag))
    return specs


@dataclass(frozen=True)
class Benchmark:
    """A generated benchmark series with its train/val/test boundaries."""

    series: TimeSeries
    specs: tuple
    config: GeneratorConfig
    bounds: tuple

    def split(self, name: str) -> TimeSeries:
        names = ("train", "val", "test")
        i = names.index(name)
        return self.series.slice(self.bounds[i], self.bounds[i + 1], f"{self.series.name}-{name}")


def make_benchmark(seed: int = 0, length: int = 20000, contamination: float = 0.0,
                   per_split: int = 6, margin: int = 40) -> Benchmark:
    """Default synthetic benchmark.

    Train/val/test take 50/25/25% of the series. Validation and test each get
    ``per_split`` anomalies cycling through all six kinds. ``contamination``
    multiplies ``per_split`` to inject extra anomalies into the training split,
    where they stay labelled 0.
    """
    cfg = benchmark_config(seed, length)
    clean = generate(cfg)
    bounds = (0, length // 2, 3 * length // 4, length)
    # separate streams keep val/test identical across contamination levels
    rng = np.random.default_rng([seed, 7])
    specs = _place(rng, bounds[1], bounds[2], per_split, margin)
    specs += _place(rng, bounds[2], bounds[3], per_split, margin)
    specs = _make_injectable(clean, specs, cfg, rng)
    n_contam = int(round(contamination * per_split))
    if n_contam:
        contam_rng = np.random.default_rng([seed, 8])
        extra = _place(contam_rng, bounds[0], bounds[1], n_contam, margin)
        specs += _make_injectable(clean, extra, cfg, contam_rng)
    check_specs(specs, length)
    series = inject_ground_truth(clean, specs, seed, cfg=cfg)
    labels = series.labels.copy()
    labels[: bounds[1]] = 0
    return Benchmark(TimeSeries(series.values, labels, f"bench-{seed}"), tuple(specs), cfg, bounds)


def _make_injectable(clean, specs, cfg, rng, reach: int = 20, tries: int = 50):
    """Move contextual specs (within ``reach``) until the local/global 3-sigma conditions hold."""
    out = []
    for spec in specs:
        candidate = spec
        for _ in range(tries):
            try:
                inject_ground_truth(clean, [candidate], 0, cfg=cfg)
                break
            except InvalidInputError:
                start = spec.start + int(rng.integers(-reach, reach + 1))
                candidate = GtAnomalySpec(spec.kind, start, spec.length, spec.magnitude, spec.dims)
        else:
            raise InvalidInputError(f"could not place {spec.kind} anomaly near {spec.start}")
        out.append(candidate)
    check_specs(out, clean.length)
    return out
