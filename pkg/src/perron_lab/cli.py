"""``perron-lab`` command line: ``run <config>`` and ``list``."""
from __future__ import annotations

import argparse
import os
import sys

from .scenarios import ConfigError, catalogue_entries, load_config, run_scenario


def _threads(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("PERRON_LAB_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"PERRON_LAB_THREADS: expected an integer, got {env!r}") from None
    return None


def _format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.out)
    if args.deterministic:
        cfg.deterministic = True
    n = _threads(args.threads)
    if cfg.deterministic and n is None:
        n = 1
    if n is not None:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=n):
            result = run_scenario(cfg)
    else:
        result = run_scenario(cfg)
    width = max(len(r.name) for r in result.rows) if result.rows else 0
    for r in result.rows:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name:<{width}}  {_format_value(r.value)}  (expected {_format_value(r.expected)})")
    print(f"{cfg.scenario}: {sum(r.passed for r in result.rows)}/{len(result.rows)} checks passed, "
          f"outputs in {result.output_dir}")
    return 0 if result.passed else 1


def cmd_list(args) -> int:
    for entry in catalogue_entries():
        if args.machine:
            print(f"name={entry['name']}")
            print(f"description={entry['description']}")
            print(f"exercises={entry['exercises']}")
            print(f"required={','.join(entry['required'])}")
            for k, v in entry["defaults"].items():
                print(f"default.{k}={v}")
            print()
        else:
            print(f"{entry['name']}\n  {entry['description']}\n  exercises: {entry['exercises']}")
            print(f"  required: {', '.join(entry['required'])}")
            if entry["defaults"]:
                print("  defaults: " + "; ".join(f"{k}={v}" for k, v in entry["defaults"].items()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perron-lab", description="Dirichlet problem experiments on P1 meshes.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one scenario config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--deterministic", action="store_true", help="single-threaded BLAS for reproducible CSVs")
    r.add_argument("--threads", type=int, help="BLAS thread limit (falls back to PERRON_LAB_THREADS)")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list", help="print the scenario catalogue")
    ls.add_argument("--machine", action="store_true", help="key=value records, blank-line separated")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
