"""Train CAPMix on the synthetic benchmark and compare it with random scores.

    python demos/quickstart.py [seed] [epochs]

A full 30-epoch run on the default 20000-step benchmark takes about half a
minute on one CPU core.
"""

import sys

from capmix.config import RunConfig
from capmix.pipeline import evaluate_model, evaluate_ras, fit
from capmix.runner import prepare


def main(seed: int = 0, epochs: int = 30) -> None:
    cfg = RunConfig(seed=seed, variant="capmix", epochs=epochs)
    (subset, _), = prepare(cfg)
    print(f"train/val/test windows: {len(subset.train.x)}/{len(subset.val.x)}/{len(subset.test.x)}")
    print(f"test anomaly segments: {subset.test.segments}")

    state = fit(subset, cfg.model_config(), seed)
    for rec in state.history[:: max(1, len(state.history) // 6)]:
        print(f"epoch {rec['epoch']:>2}  train {rec['train_loss']:.4f}  val {rec['val_loss']:.4f}")

    model = evaluate_model(subset, state, cfg.eval.thresholds())
    ras = evaluate_ras(subset, seed, cfg.eval.thresholds())
    for name, res in (("capmix", model), ("random", ras)):
        print(f"{name:>7}: F1 {res.f1:.3f}  P {res.precision:.3f}  R {res.recall:.3f}  "
              f"tp/fp/fn {res.tp}/{res.fp}/{res.fn}  tau {res.threshold}")


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:3]))
