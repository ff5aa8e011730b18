"""Test MSE of the forecaster with and without seasonal input features.

    python scripts/ablation.py synthetic2 [--max-epochs 200] [--seed 0]
"""

import argparse
import json

from ltidetect.pipeline import PRESETS, make_config, prepare, run_decompose, run_train


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("preset", nargs="?", default="synthetic2", choices=sorted(PRESETS))
    ap.add_argument("--max-epochs", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()
    cfg = make_config(PRESETS[args.preset], max_epochs=args.max_epochs, seed=args.seed)
    prep = prepare(cfg)
    profile = run_decompose(cfg, prep)
    rows = {}
    for seasonal in (True, False):
        _, m = run_train(cfg, prep, profile, seasonal=seasonal)
        rows["gru+st" if seasonal else "gru"] = m
        print(f"{'GRU+ST' if seasonal else 'GRU':7s} {m['topology']:16s} test MSE {m['test_mse']:.5f} "
              f"({m['epochs']} epochs, {m['wall_time_s']:.0f} s)")
    gain = 1 - rows["gru+st"]["test_mse"] / rows["gru"]["test_mse"]
    print(f"seasonal features lower test MSE by {gain:.1%}")
    print(json.dumps(rows, indent=1))


if __name__ == "__main__":
    main()
