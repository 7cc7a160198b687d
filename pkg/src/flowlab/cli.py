"""Command-line surface: flowlab {list, simulate, classify, wandering,
ham-check, tables, render}.

Every task except ``list`` takes a JSON config via -c/--config. Exit code 0
means the run completed (failing table cells are report content, not
errors); 2 is a configuration error with a key pointer; 1 is an execution
error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import catalog
from .errors import ConfigError, FlowlabError
from .report import load_config, run


def _add_config_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", required=True, help="path to a JSON run config")
    p.add_argument("-o", "--output-dir", default=None,
                   help="output directory (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flowlab",
                                 description="numerical laboratory for flows on "
                                             "compact surfaces")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="enumerate catalog flows and parameter schemas")
    for name, text in [
        ("simulate", "integrate trajectories and export them as delimited text"),
        ("classify", "estimate and classify limit sets for a set of starts"),
        ("wandering", "search a region for a wandering domain"),
        ("ham-check", "run the Hamiltonian-structure verdict pipeline"),
        ("tables", "reproduce the realizable limit-set pair table"),
        ("render", "draw a phase portrait to a deterministic SVG"),
    ]:
        _add_config_arg(sub.add_parser(name, help=text))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for entry in catalog.list_catalog():
            params = ", ".join(f"{k}: {v}" for k, v in entry["params"].items()) or "-"
            print(f"{entry['name']:32s} {entry['summary']}")
            print(f"{'':32s}   params: {params}")
        return 0
    try:
        cfg = load_config(args.config)
        if cfg.get("task") not in (None, args.command):
            raise ConfigError(f"task: config says {cfg.get('task')!r} but the "
                              f"subcommand is {args.command!r}")
        cfg["task"] = args.command
        report = run(cfg, output_dir=args.output_dir)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FlowlabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    if args.command == "tables":
        for row in report["tables"]["rows"]:
            status = "pass" if row["pass"] else "FAIL"
            print(f"case {row['case']:3s} [{status}] expected={row['expected']} "
                  f"observed={row['observed']}")
        print("all cases pass" if report["tables"]["all_pass"] else "some cases FAILED")
    else:
        print(f"{args.command}: report written")
    return 0


if __name__ == "__main__":
    sys.exit(main())
