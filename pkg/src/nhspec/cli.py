"""Command line entry point: ``nhspec run|eps-family|lab|inspect``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .checkpoint import describe, load
from .config import ConfigError, load_case_set, load_scenario
from .errors import CheckpointFormatError, InadmissibleParameters, NonFinite
from .grid import THREADS_ENV

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARAMS = 3
EXIT_NUMERIC = 4


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nhspec", description="Spectral solver and inequality lab "
                                 "for incompressible neo-Hookean elastodynamics on the torus.")
    ap.add_argument("--threads", type=int, help=f"FFT / corpus workers (sets {THREADS_ENV})")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario")
    p.add_argument("scenario", help="scenario file or bundled scenario name")
    p.add_argument("--out", type=Path, help="output directory (overrides the scenario)")

    p = sub.add_parser("eps-family", help="continuous dependence on the mollification scale")
    p.add_argument("scenario")
    p.add_argument("--eps", type=_floats, help="comma separated, strictly decreasing")
    p.add_argument("--s", type=_floats, help="Sobolev orders of the difference norms")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("lab", help="evaluate an inequality case set")
    p.add_argument("case_set", help="case-set file or bundled name (e.g. default)")
    p.add_argument("--out", type=Path, default=Path("lab-reports"))
    p.add_argument("--only", help="comma separated case ids")

    p = sub.add_parser("inspect", help="describe a checkpoint file")
    p.add_argument("checkpoint", type=Path)
    return ap


def _run(args) -> int:
    from .runner import run_case_set, run_eps_family, run_scenario

    if args.command == "run":
        sc = load_scenario(args.scenario)
        res = run_scenario(sc, args.out)
        print(f"{sc.name}: {res.status} at t={res.final.t:.6g}; artifacts in {res.out_dir}")
        if res.status != "ok":
            print(res.message, file=sys.stderr)
            return EXIT_NUMERIC
        return EXIT_OK
    if args.command == "eps-family":
        sc = load_scenario(args.scenario)
        table = run_eps_family(sc, args.eps, args.s, args.out)
        for row in table.rows():
            print("  ".join(f"{k}={v:.6g}" for k, v in row.items()))
        for s in table.s:
            print(f"H^{s:g}: {'strictly decreasing' if table.decreasing(s) else 'NOT strictly decreasing'}")
        return EXIT_OK
    if args.command == "lab":
        name, cases = load_case_set(args.case_set)
        if args.only:
            keep = set(args.only.split(","))
            cases = [c for c in cases if c.get("id") in keep]
            if not cases:
                raise ConfigError(f"no cases match {args.only!r}")
        reports = run_case_set(cases, args.out)
        for cid, rep in reports.items():
            if "max_ratio" in rep:
                print(f"{cid}: max ratio {rep['max_ratio']:.4g}")
            else:
                print(f"{cid}: finite={rep.get('finite')} monotone={rep.get('monotone_in_amplitude')}")
        return EXIT_OK
    if args.command == "inspect":
        print(json.dumps(describe(load(args.checkpoint)), indent=2, sort_keys=True))
        return EXIT_OK
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        os.environ[THREADS_ENV] = str(args.threads)
    try:
        return _run(args)
    except (ConfigError, CheckpointFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InadmissibleParameters as exc:
        print(f"inadmissible parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except NonFinite as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
