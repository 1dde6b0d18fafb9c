"""Command line: ``gridnovelty run | classify | metrics``.

Exit status is 0 on success, 2 for invalid configs or arguments, 3 for file
errors. Set ``GRIDNOVELTY_LOG_LEVEL`` (e.g. ``DEBUG``) for more logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .catalog import TransformError, UnknownNoveltyError
from .core import ConfigurationError
from .runner import (
    compute_metrics,
    classify,
    load_config,
    metrics_csv,
    read_log,
    run_experiment,
    validate_config,
)

log = logging.getLogger("gridnovelty")

EXIT_INVALID = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridnovelty", description="Novelty-injection grid-world experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train, inject, adapt and write run artifacts")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=int, action="append", dest="seeds",
                     help="seed to run; repeat for several (overrides the config)")
    run.add_argument("--out-dir", type=Path)
    run.add_argument("--novelty", help="novelty name (keeps the config's parameters only if the name matches)")
    run.add_argument("--injection-episode", type=int)

    cls = sub.add_parser("classify", help="check the novelty's declared solution effect with the oracle")
    cls.add_argument("--config", required=True, type=Path)

    met = sub.add_parser("metrics", help="recompute metrics from an episode log")
    met.add_argument("--log", required=True, type=Path)
    met.add_argument("--window", type=int)
    met.add_argument("--tolerance", type=float)
    met.add_argument("--min-tail", type=int)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seeds:
        config = replace(config, seeds=tuple(args.seeds))
    if args.out_dir is not None:
        config = replace(config, output_dir=str(args.out_dir))
    if args.novelty is not None and args.novelty != config.novelty:
        config = replace(config, novelty=args.novelty, novelty_params={})
    if args.injection_episode is not None:
        config = replace(config, injection_episode=args.injection_episode)
    result = run_experiment(config)
    sys.stdout.write(metrics_csv(result.metrics))
    log.info("artifacts written to %s", result.output_dir)
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    report = validate_config(config)
    if not report.ok:
        raise ConfigurationError("; ".join(report.violations))
    for record in classify(config):
        print(json.dumps(record))
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    records = read_log(args.log)
    settings = {"window": 100, "tolerance": 0.05, "min_tail": 50}
    identity = {"run_id": "", "novelty": ""}
    manifest = args.log.parent / "run.json"
    if manifest.exists():
        cfg = json.loads(manifest.read_text())["config"]
        settings.update(cfg.get("convergence", {}))
        identity = {"run_id": cfg["run_id"], "novelty": cfg["novelty"]["name"]}
    if args.window is not None:
        settings["window"] = args.window
        if args.min_tail is None:
            settings["min_tail"] = max(1, args.window // 2)
    if args.tolerance is not None:
        settings["tolerance"] = args.tolerance
    if args.min_tail is not None:
        settings["min_tail"] = args.min_tail
    row = compute_metrics(records, settings["window"], settings["tolerance"], settings["min_tail"])
    seeds = {r["seed"] for r in records}
    row.update(identity, seed=seeds.pop() if len(seeds) == 1 else "")
    sys.stdout.write(metrics_csv([row]))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    level = logging.getLevelName(os.environ.get("GRIDNOVELTY_LOG_LEVEL", "WARNING").upper())
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "classify": _cmd_classify, "metrics": _cmd_metrics}
    try:
        return handlers[args.command](args)
    except (ConfigurationError, TransformError, UnknownNoveltyError) as exc:
        # File-system failures surface as ConfigurationError with the cause attached.
        code = EXIT_IO if isinstance(exc.__cause__, OSError) else EXIT_INVALID
        print(f"error: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
