"""Command line entry point.

    conedecay run --scenario ID --config PATH --out DIR [--k-max N] [--threads N] [--d3]
    conedecay verify --config PATH
    conedecay statphase --config PATH

The exit code is 0 exactly when no check in the report has status FAIL.
"""

import argparse
import logging
import sys

from . import harness
from .errors import ConeDecayError, ConfigError


def _parser():
    p = argparse.ArgumentParser(prog="conedecay", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log every check")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario or a scenario group")
    run.add_argument("--scenario", required=True,
                     help="C1, C2, D1, C3_saddle, lower_cone, lower_cylinder, identities, morse, "
                          "statphase, or a group: upper, lower, verify, all")
    run.add_argument("--config", required=True, help="JSON configuration file")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--k-max", type=float, help="largest frequency of the decay profiles")
    run.add_argument("--threads", type=int, help="numba worker threads")
    run.add_argument("--d3", action="store_true", help="enable the d=3 cone over the saddle")

    for name, text in (("verify", "algebraic identity and Morse suites"), ("statphase", "stationary phase suite")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="JSON configuration file")
        s.add_argument("--out", help="output directory (overrides the config)")
    return p


def _load(args, scenario):
    cfg = harness.ScenarioConfig.from_json(args.config)
    cfg.scenario = scenario
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "k_max", None):
        cfg.k_max = args.k_max
    if getattr(args, "threads", None):
        cfg.threads = args.threads
    if getattr(args, "d3", False):
        cfg.d3 = True
    cfg.validate()
    return cfg


def _print(rep, out):
    for c in rep.checks:
        print(f"{c.status:4s} {c.name}  measured={c.measured}  tol={c.tolerance}  ({c.runtime:.2f} s)")
    print(f"report written to {out}; {'all checks passed' if rep.passed else 'some checks FAILED'}")


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    scenario = {"verify": "verify", "statphase": "statphase"}.get(args.command, getattr(args, "scenario", None))
    try:
        cfg = _load(args, scenario)
        rep = harness.run_all(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ConeDecayError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    _print(rep, cfg.out)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
