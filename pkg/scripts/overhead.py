"""Per-frame detection overhead as the window length L grows.

Overhead does not depend on trained weights, so untrained forecasters are used.

    python scripts/overhead.py [--preset synthetic5] [--L 5,10,20,30] [--lanes 1] [--repeats 3]
"""

import argparse

from ltidetect.forecast import ForecastModel, NetworkTopology
from ltidetect.pipeline import PRESETS, make_config, prepare, run_bench, run_decompose
from ltidetect.score import ScoringParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--preset", default="synthetic5", choices=sorted(PRESETS))
    ap.add_argument("--L", default="5,10,20,30")
    ap.add_argument("--lanes", type=int, default=1)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    cfg = make_config(PRESETS[args.preset])
    prep = prepare(cfg)
    profile = run_decompose(cfg, prep)
    model = ForecastModel.init(NetworkTopology(prep.series.m, cfg.L, cfg.hidden, cfg.depth), cfg.seed, profile)
    Ls = tuple(int(v) for v in args.L.split(","))
    reports = run_bench(cfg, prep, model, ScoringParams(20.0, 0.01), L_values=Ls, lanes=args.lanes,
                        repeats=args.repeats)
    print(f"{'L':>3s} {'lanes':>5s} {'mean ms':>8s} {'p50 ms':>8s} {'p99 ms':>8s}")
    for r in reports:
        print(f"{r.L:3d} {r.lanes:5d} {r.mean_ms:8.3f} {r.p50_ms:8.3f} {r.p99_ms:8.3f}")


if __name__ == "__main__":
    main()
