"""Batch experiment runner.

Exit status: 0 when every certification passed, 2 on configuration
errors, 3 on resource-budget errors (with partial reports flagged),
1 on failed certifications.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import CoarseDimError, ConfigError, ResourceBudgetError
from .experiments import (
    EXPERIMENT_KINDS,
    ExperimentConfig,
    ExperimentOutcome,
    parse_config_text,
    run_experiment,
)

_SUBCOMMAND_KINDS = {
    "norm": "norm-axioms",
    "ultrametric": "quasi-ultrametric",
    "components": "components",
    "cover": "cover-certify",
    "cube": "cube-search",
    "adversarial": "adversarial",
    "defect": "log-defect",
    "epsilon": "epsilon-check",
    "wreath": "wreath-kernel",
    "dimreport": "dimension-report",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coarsedim",
        description="Run certification experiments and emit CSV/JSON reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in _SUBCOMMAND_KINDS.items():
        p = sub.add_parser(name, help=f"run the {kind} experiment")
        p.add_argument("--config", type=Path, default=None, help="key-value config file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--budget", type=str, default=None, help="resource budget")
        p.add_argument(
            "--scales", type=str, default=None, help="comma-separated scale list"
        )
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a single config field",
        )
    return parser


def _load_config(args) -> ExperimentConfig:
    kind = _SUBCOMMAND_KINDS[args.command]
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        config = parse_config_text(text)
        if config.kind != kind:
            raise ConfigError(
                f"config kind {config.kind!r} does not match subcommand "
                f"{args.command!r}",
                field="kind",
            )
    else:
        config = ExperimentConfig(kind, {})
    if args.budget is not None:
        config.params["budget"] = args.budget
    if args.scales is not None:
        config.params["scales"] = args.scales
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("expected KEY=VALUE", field=key)
        config.params[key.strip()] = value.strip()
    return config


def _write_reports(outcome: ExperimentOutcome, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{outcome.kind}.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(outcome.fields), lineterminator="\n")
        writer.writeheader()
        for row in outcome.rows:
            writer.writerow({k: row.get(k, "") for k in outcome.fields})
    json_path = out_dir / f"{outcome.kind}.summary.json"
    with open(json_path, "w", encoding="utf-8") as handle:
        json.dump(outcome.summary, handle, indent=2, sort_keys=True)
        handle.write("\n")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        outcome = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceBudgetError as exc:
        print(f"budget error: {exc} (partial results discarded)", file=sys.stderr)
        return 3
    except CoarseDimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_reports(outcome, args.out)
    print(
        f"{outcome.kind}: {'pass' if outcome.all_pass else 'FAIL'} "
        f"({len(outcome.rows)} rows)"
    )
    return 0 if outcome.all_pass else 1


if __name__ == "__main__":
    raise SystemExit(main())
