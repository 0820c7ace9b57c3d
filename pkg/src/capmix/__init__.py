"""CAPMix: CutAddPaste pseudo-anomalies, DTW label revision and dual-space mixup
for time-series anomaly detection, with segment-level (RPA) evaluation."""

from .augment import (
    AugmentConfig,
    NormalityStats,
    PatchPlan,
    RevisionConfig,
    apply_cutaddpaste,
    cutaddpaste_arrays,
    cutaddpaste_batch,
    normality_stats,
    paste_patch,
    plan_patch,
    replay_plans,
    revise_labels,
    revised_labels,
)
from .config import ExperimentManifest, RunConfig, load_run_config, parse_run_config
from .dtw import dtw, dtw_matrix, dtw_to_reference
from .evaluation import (
    EvalReport,
    RpaCounts,
    ThresholdConfig,
    detect,
    ras_baseline,
    rpa_counts,
    shift_diagnostic,
    threshold_search,
    ucr_top1,
    weighted_f1,
    zscore_scores,
)
from .model import (
    CAPMixConfig,
    CAPMixNet,
    ConfigError,
    EncoderConfig,
    MixupConfig,
    NumericalError,
    ProjectorConfig,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    score,
    train,
)
from .series import InvalidInputError, TimeSeries, Window, WindowConfig, read_csv, standardize, write_csv
from .synth import GeneratorConfig, GtAnomalySpec, generate, inject_ground_truth, make_benchmark

__version__ = "0.1.0"
