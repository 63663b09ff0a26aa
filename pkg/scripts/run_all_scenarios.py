"""Run every shipped config and print one status line per scenario.

    python3 scripts/run_all_scenarios.py [--out out] [--skip cantor]
"""
import argparse
import sys
from pathlib import Path

from perron_lab.scenarios import ScenarioConfig, load_config, run_scenario

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out", help="parent directory for scenario outputs")
    ap.add_argument("--skip", nargs="*", default=[], help="config stems to skip")
    args = ap.parse_args(argv)
    failures = 0
    for path in sorted(CONFIGS.glob("*.toml")):
        if path.stem in args.skip:
            continue
        raw = load_config(path).raw
        cfg = ScenarioConfig.from_dict(raw, output_dir=Path(args.out) / path.stem)
        res = run_scenario(cfg)
        n_ok = sum(r.passed for r in res.rows)
        print(f"{path.stem:22s} {n_ok}/{len(res.rows)} checks  {res.elapsed:7.1f} s  -> {res.output_dir}")
        for r in res.rows:
            if not r.passed:
                print(f"    FAIL {r.name}: {r.value} (expected {r.expected})")
        failures += not res.passed
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
