"""Command line front end: ``mq-cont run <config>`` and ``mq-cont repro``."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .config import ConfigError

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _tables_for(cfg):
    from .tables import TABLES

    if cfg.table is not None:
        return [TABLES[cfg.table]]
    return [t for t in TABLES.values() if t.problem == cfg.problem]


def cmd_run(args) -> int:
    from . import config, pipeline, report, tables

    try:
        cfg = config.load(args.config)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out_dir:
        cfg = replace(cfg, output_dir=args.out_dir)
    if args.verify_jacobians:
        cfg = replace(cfg, verify_jacobians=True)

    if cfg.mode == "table":
        os.makedirs(cfg.output_dir, exist_ok=True)
        status = EXIT_OK
        for t in _tables_for(cfg):
            res = tables.run_table(t, cfg.output_dir)
            text = tables.format_table(res)
            with open(os.path.join(cfg.output_dir, f"{cfg.name}_{t.name}.txt"), "w", encoding="utf-8") as fh:
                fh.write(text)
            for r in res.runs:
                report.write_outputs(r, cfg.output_dir)
                if r.error:
                    status = EXIT_NUMERIC
            print(text)
        return status

    try:
        result = pipeline.run(cfg)
    except Exception as exc:  # noqa: BLE001 - numerical failure before any output exists
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    paths = report.write_outputs(result)
    print(report.text_report(result), end="")
    for kind, p in paths.items():
        print(f"wrote {kind}: {p}")
    if result.error:
        print(f"numerical failure: {result.error}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_repro(args) -> int:
    from . import acceptance

    try:
        selected = acceptance.select(args.only)
    except KeyError as exc:
        print(f"config error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    outcomes, runs = [], []
    for c in selected:
        o = acceptance.evaluate(c, runs)
        runs += o.runs
        outcomes.append(o)
        print(o.line(), flush=True)
    if args.out_dir:
        from . import report

        for r in runs:
            report.write_outputs(replace(r, config=replace(r.config, plot=True)), args.out_dir)
    failed = [o for o in outcomes if not o.passed]
    print(f"{len(outcomes) - len(failed)}/{len(outcomes)} criteria passed")
    for o in failed:
        print(f"failed: criterion {o.number} [{o.name}]")
    return EXIT_FAILED if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mq-cont", description="MQ collocation with numerical continuation")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one configuration file")
    run.add_argument("config")
    run.add_argument("--out-dir", default=None)
    run.add_argument("--verify-jacobians", action="store_true", help="check analytic Jacobians against FD each step")
    run.set_defaults(fn=cmd_run)
    rep = sub.add_parser("repro", help="run the acceptance criteria")
    rep.add_argument("--only", default=None, help="criterion number, name or table name")
    rep.add_argument("--out-dir", default=None, help="also write outputs of every run here")
    rep.set_defaults(fn=cmd_repro)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
