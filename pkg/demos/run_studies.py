"""Run every demo configuration and print the verdicts.

    python demos/run_studies.py [--out results/] [--workers 8]

The same runs are available one at a time from the command line, e.g.
``vklab bdg-check --config demos/configs/bdg_exponential.json --out out/``.
"""

import argparse
import os
import time
from pathlib import Path

from vklab.errors import ConfigError
from vklab.studies import StudyConfig, run_study

HERE = Path(__file__).resolve().parent


def describe(report):
    s = report.summary
    if report.study == "bdg-check":
        return f"E sup|I|^p = {s['estimate'].mean:.4g}, rhs {s['rhs']:.4g}, ratio {s['ratio']:.2e}"
    if report.study == "shift-study":
        return f"slope {s['slope']:.3f} (threshold {s['slope_threshold']:.2f}, kernel norm {s['norm_slope']:.3f})"
    if report.study == "multifactor-study":
        t, d = s["truncation"], s["discretization"]
        return f"N-slope {t['slope']:.3f} (<= {t['threshold']:.2f}), n-slope {d['slope']:.3f}"
    if report.study == "uniform-study":
        means = ", ".join(f"{e.mean:.4g}" for e in s["estimates"])
        return f"estimates {means}; rhs {s['rhs']:.4g}"
    return f"max rel diff {s['max_rel_diff']:.1e}"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=None)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()
    for path in sorted((HERE / "configs").glob("*.json")):
        t0 = time.perf_counter()
        try:
            cfg = StudyConfig.from_file(path, workers=args.workers)
            report = run_study(cfg)
        except ConfigError as exc:
            print(f"{path.stem:22s} CONFIG ERROR  {exc}")
            continue
        if args.out is not None:
            report.write(args.out / path.stem)
        dt = time.perf_counter() - t0
        print(f"{path.stem:22s} {report.verdict:8s} {describe(report)}  [{dt:.1f} s]")


if __name__ == "__main__":
    main()
