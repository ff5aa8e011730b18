"""Sensitivity of detection AUC to the growth-rate constant c.

Trains one forecaster, then recalibrates and rescores the test split for each c.

    python scripts/c_sensitivity.py [--preset synthetic5] [--c 0.25,0.5,1,2,4]
"""

import argparse
import dataclasses

from ltidetect.pipeline import (PRESETS, make_config, prepare, run_calibrate, run_decompose, run_detect,
                                run_evaluate, run_train)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--preset", default="synthetic5", choices=sorted(PRESETS))
    ap.add_argument("--c", default="0.25,0.5,1,2,4")
    ap.add_argument("--max-epochs", type=int, default=None)
    args = ap.parse_args()
    cfg = make_config(PRESETS[args.preset], max_epochs=args.max_epochs)
    prep = prepare(cfg)
    model, _ = run_train(cfg, prep, run_decompose(cfg, prep))
    print(f"{'c':>6s} {'k':>10s} {'x0':>10s} {'AUC':>7s}")
    for c in (float(v) for v in args.c.split(",")):
        ccfg = dataclasses.replace(cfg, c=c)
        params, _ = run_calibrate(ccfg, prep, model.copy())
        roc = run_evaluate(run_detect(ccfg, prep, model.copy(), params), prep.labels)
        print(f"{c:6.3g} {params.k:10.4g} {params.x0:10.4g} {roc.auc:7.4f}")


if __name__ == "__main__":
    main()
