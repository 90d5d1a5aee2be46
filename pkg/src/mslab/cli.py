"""Command line driver.

    mslab run <config.json> --out report.json [--seed S]
    mslab dump <config.json> --target <name> --out <file> [--N n]

``run`` exits with status 0 iff every task passes.
"""
import argparse
import json
import sys

from .experiments import ConfigError, ExperimentConfig, dump_target, run_config, to_jsonable


def _write_json(obj, path, indent=1):
    text = json.dumps(to_jsonable(obj), indent=indent, sort_keys=True)
    if path == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _parser():
    p = argparse.ArgumentParser(prog="mslab", description="Truncated multiplication operators on model spaces")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the tasks of a config and write a JSON report")
    r.add_argument("config")
    r.add_argument("--out", default="-", help="report path ('-' for stdout)")
    r.add_argument("--seed", type=int, default=None, help="override the config seed")
    d = sub.add_parser("dump", help="write a matrix, vector or symbol as JSON")
    d.add_argument("config")
    d.add_argument("--target", required=True,
                   help="S_u, identity, k0k0, k0kt, X_mu:<mu>, symbol:<name>, random, "
                        "k0, ktilde0, onb, space, C_u, recovered:<operator>")
    d.add_argument("--out", default="-")
    d.add_argument("--N", type=int, default=None, help="truncation order (default: first N of the config)")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        config = ExperimentConfig.load(args.config)
    except (OSError, ConfigError) as exc:
        print(f"mslab: {exc}", file=sys.stderr)
        return 2
    if args.command == "run":
        if args.seed is not None:
            config.seed = args.seed
        report = run_config(config)
        _write_json(report, args.out)
        for r in report["results"]:
            status = "PASS" if r["passed"] else "FAIL"
            extra = f"  ({r['error']})" if "error" in r else ""
            print(f"{status}  {r['task']:<24} N={r['N']}{extra}", file=sys.stderr)
        return 0 if report["passed"] else 1
    try:
        content = dump_target(config, args.target, args.N)
    except (ConfigError, ValueError) as exc:
        print(f"mslab: {exc}", file=sys.stderr)
        return 2
    _write_json(content, args.out, indent=None)
    return 0


if __name__ == "__main__":
    sys.exit(main())
