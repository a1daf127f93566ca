"""Command-line front end.

Exit status: 0 all audits pass, 1 an audit fails, 2 bad configuration,
3 numerical failure in a requested stage.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import config as cfgmod
from .catalog import CATALOG
from .config import ConfigError
from .report import EXIT_AUDIT, EXIT_CONFIG, Report, run_analysis

SUBCOMMAND_ANALYSES = {
    "scan-legendrian": ("invariants", "hopf"),
    "audit-index": ("invariants", "hopf"),
    "search": ("search",),
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config_path", nargs="?", metavar="CONFIG", help="run configuration (INI)")
    p.add_argument("--config", dest="config_opt", metavar="PATH", help="same as the positional CONFIG")
    p.add_argument("--out", metavar="DIR",
                   help=f"output directory (default: ${cfgmod.OUTPUT_ENV} or ./{cfgmod.DEFAULT_OUTPUT})")
    p.add_argument("--seed", type=int, help="random seed for search trials")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                   help="override a named tolerance (repeatable)")
    p.add_argument("--threads", type=int, help="worker threads for grid evaluation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hscone", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "analyze": "run the analyses listed in the config",
        "scan-legendrian": "locate Legendrian points and their indices",
        "search": "damped least-squares search over homogeneous tori",
        "audit-index": "check the Legendrian point indices against the Euler characteristic",
    }
    for name, text in helps.items():
        _common(sub.add_parser(name, help=text))
    sub.add_parser("catalog", help="list built-in immersions and their parameters")
    return parser


def _load(args) -> cfgmod.Config:
    if args.config_path and args.config_opt and args.config_path != args.config_opt:
        raise ConfigError("give the config either positionally or with --config, not both")
    path = args.config_path or args.config_opt
    if not path:
        raise ConfigError("no config given")
    cfg = cfgmod.load(path)
    tols = dict(cfgmod.parse_tolerance_override(t) for t in args.tol)
    return cfg.with_overrides(out=args.out, seed=args.seed, tolerances=tols, threads=args.threads,
                              analyses=SUBCOMMAND_ANALYSES.get(args.command))


def _print_catalog() -> None:
    for name in sorted(CATALOG):
        print(name)
        for key, desc in CATALOG[name].items():
            print(f"    {key}: {desc}")


def _print_flags(rep: Report) -> None:
    for name, f in sorted(rep.data["flags"].items()):
        state = {True: "true", False: "false", None: "indeterminate"}[f["flag"]]
        print(f"{name:22s} {state:13s} (value {f['value']:.3e}, tol {f['tol']:.0e})")
    for name, a in sorted(rep.data["audits"].items()):
        print(f"audit {name:28s} {'PASS' if a['passed'] else 'FAIL'}")


def _print_points(rep: Report) -> None:
    hopf = rep.data["analyses"].get("hopf", {})
    pts = hopf.get("legendrian_points")
    if isinstance(pts, str) or pts is None:
        print(pts or hopf.get("status", "no Legendrian scan"))
        return
    if hopf.get("everywhere_legendrian"):
        print("link is Legendrian everywhere")
        return
    print(f"{len(pts)} Legendrian points")
    for p in pts:
        print(f"  t = ({p['t1']:.12f}, {p['t2']:.12f})  multiplicity {p['multiplicity']:+d}  "
              f"index {p['index']:+d}  |alpha| = {p['residual']:.2e}")


def _print_index_audit(rep: Report) -> int:
    hopf = rep.data["analyses"].get("hopf", {})
    audit = rep.data["audits"].get("poincare_hopf")
    if audit is None:
        reason = hopf.get("index_audit") if isinstance(hopf.get("index_audit"), str) else None
        reason = reason or hopf.get("legendrian_points") or hopf.get("status") or "audit not run"
        print(f"index audit unavailable: {reason}")
        return max(rep.exit_code, EXIT_AUDIT)
    verdict = "PASS" if audit["passed"] else "FAIL"
    chi = audit["euler_characteristic"]
    if audit["everywhere_legendrian"]:
        print(f"everywhere Legendrian, χ = {chi}, audit {verdict}")
    else:
        print(f"{audit['n_points']} Legendrian points, χ = {chi}, audit {verdict}")
    return rep.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "catalog":
        _print_catalog()
        return 0
    try:
        cfg = _load(args)
        rep = run_analysis(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    code = rep.exit_code
    if args.command == "analyze":
        _print_flags(rep)
    elif args.command == "scan-legendrian":
        _print_points(rep)
    elif args.command == "audit-index":
        code = _print_index_audit(rep)
    elif args.command == "search":
        s = rep.data["analyses"]["search"]
        if "success_rate" in s:
            print(f"{len(s['trials'])} trials, success rate {s['success_rate']:.2f}, "
                  f"max iterations {s['max_iterations']}")
        else:
            print(s.get("error", s.get("status")))
    for path in rep.files:
        print(f"wrote {path}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
