"""Walk through CutAddPaste, label revision and input-space mixup on one batch.

    python demos/augmentation.py
"""

import numpy as np

from capmix.augment import AugmentConfig, RevisionConfig, cutaddpaste_arrays, normality_stats, revised_labels
from capmix.config import RunConfig
from capmix.dtw import dtw_to_reference
from capmix.model import mixup_pair
from capmix.pipeline import shift_report
from capmix.runner import prepare


def main() -> None:
    cfg = RunConfig(seed=0)
    (subset, _), = prepare(cfg)
    windows = subset.train.x[:64]
    rng = np.random.default_rng(0)

    pseudo, plans, keep = cutaddpaste_arrays(windows, AugmentConfig(), rng)
    print(f"{len(pseudo)} pseudo-anomalies from a batch of {len(windows)}")
    for i in keep[:3]:
        p = plans[i]
        print(f"  window {i}: patch of {p.length} steps cut at {p.cut} from window {p.source}, "
              f"pasted at {p.paste}, slopes {np.round(p.slopes, 3).tolist()} on dims {list(p.dims)}")

    stats = normality_stats(subset.train.x)
    bound = stats.mean_distance + 2.0 * stats.std_distance
    dist = dtw_to_reference(pseudo, stats.center)
    labels = revised_labels(pseudo, stats, RevisionConfig(2.0))
    print(f"normal DTW distance to center: mean {stats.mean_distance:.2f}, std {stats.std_distance:.2f}, "
          f"bound {bound:.2f}")
    print(f"pseudo distances {np.round(np.sort(dist)[[0, len(dist) // 2, -1]], 2).tolist()} (min/median/max); "
          f"{int(np.sum(labels < 1))} of {len(labels)} get the soft label 0.5")

    lam = float(rng.beta(1.0, 1.0))
    x_all = np.concatenate([windows, pseudo])
    y_all = np.concatenate([np.zeros(len(windows)), labels])
    _, y_mix = mixup_pair(x_all, y_all, lam, rng.permutation(len(y_all)))
    print(f"input mixup with lambda {lam:.3f}: mean label stays {y_mix.mean():.3f} (was {y_all.mean():.3f})")

    for variant in ("cap", "capmix"):
        rep = shift_report(subset, RunConfig(variant=variant).model_config(), 0)
        print(f"{variant:>7}: gap to real anomalies {rep.gap:.2f} (normal windows: {rep.normal_gap:.2f})")


if __name__ == "__main__":
    main()
