"""``vklab <study> --config cfg.json --out dir``.

Exit codes: 0 on PASS or a completed tabulation, 2 on a configuration
error, 3 on a FAIL verdict.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, VklabError
from .studies import STUDIES, StudyConfig, run_study

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 2, 3

log = logging.getLogger("vklab")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vklab", description="Volterra kernel BDG studies")
    ap.add_argument("study", choices=STUDIES)
    ap.add_argument("--config", required=True, help="JSON study configuration")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, help="master seed (overrides config)")
    ap.add_argument("--paths", type=int, help="Monte Carlo paths (overrides config)")
    ap.add_argument("--steps", type=int, help="time steps (overrides config)")
    ap.add_argument("--workers", type=int, help="worker threads (result does not depend on it)")
    ap.add_argument("-q", "--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = StudyConfig.from_file(
            args.config,
            study=args.study,
            seed=args.seed,
            paths=args.paths,
            steps=args.steps,
            workers=args.workers,
        )
        report = run_study(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VklabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report.write(args.out)
    log.info("%s: %s", report.study, report.verdict)
    log.info(json.dumps(report.to_json()["summary"], indent=2, sort_keys=True, default=str))
    return EXIT_FAIL if report.verdict == "FAIL" else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
