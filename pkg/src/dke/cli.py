"""Batch command-line front end.

Subcommands: verify-basis, simulate, limit-study, serve.  By default the
first three run in-process against the library; with --server URL they
POST to a running service instead and write the returned artifacts
locally, so results are identical either way.

Exit codes: 0 ok, 1 check or run failure (including config violations),
2 usage.  Every failure prints a one-line `error=<code> <text>` diagnostic
to stderr before any detail lines.
"""

import argparse
import os
import sys

from .evolve import PositivityError
from .runner import (fmt17, limit_study, simulate, verify_basis_report,
                     write_limit_study, write_outputs)
from .scenario import ConfigError, load_config


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error=usage {message}", file=sys.stderr)
        sys.exit(2)


def _fail(code, message, details=()):
    print(f"error={code} {message}", file=sys.stderr)
    for line in details:
        print(f"  {line}", file=sys.stderr)
    return 1


def _even_cells(text):
    value = int(text)
    if value < 2 or value % 2:
        raise argparse.ArgumentTypeError(
            f"cells must be even and >= 2, got {value}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected integer >= 1, got {value}")
    return value


def build_parser():
    parser = _Parser(prog="dke",
                     description="difference kinetic equation toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    verify = sub.add_parser("verify-basis",
                            help="audit the cell basis closed forms "
                                 "against quadrature")
    verify.add_argument("--cells", type=_even_cells, required=True,
                        help="number of position cells (even, >= 2)")
    verify.add_argument("--nmax", type=_positive_int, required=True,
                        help="largest momentum index")
    verify.add_argument("--d", type=float, default=1.0, help="cell width")
    verify.add_argument("--corrupt-prefactor", type=float, default=1.0,
                        help=argparse.SUPPRESS)
    verify.add_argument("--server", metavar="URL", default=None)

    sim = sub.add_parser("simulate", help="run a configured scenario")
    sim.add_argument("--config", required=True, metavar="FILE")
    sim.add_argument("--output-dir", default=None,
                     help="override the config's output directory")
    sim.add_argument("--server", metavar="URL", default=None)

    limit = sub.add_parser("limit-study",
                           help="difference-vs-classical defect under "
                                "grid refinement")
    limit.add_argument("--config", required=True, metavar="FILE")
    limit.add_argument("--levels", type=int, required=True,
                       help="refinement levels (2..5)")
    limit.add_argument("--output-dir", default=None)
    limit.add_argument("--server", metavar="URL", default=None)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_text(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _post(server, route, payload):
    import httpx
    response = httpx.post(server.rstrip("/") + route, json=payload,
                          timeout=600.0)
    return response


def _cmd_verify(args):
    if args.server:
        response = _post(args.server, "/verify-basis",
                         {"cells": args.cells, "nmax": args.nmax,
                          "d": args.d})
        if response.status_code != 200:
            return _fail("server", f"HTTP {response.status_code}",
                         [response.text])
        body = response.json()
        print(body["report"], end="")
        return 0 if body["passed"] else _fail(
            "verify_failed", "basis verification reported FAIL")
    try:
        result = verify_basis_report(
            args.cells, args.nmax, d=args.d,
            prefactor_scale=args.corrupt_prefactor)
    except ValueError as err:
        print(f"error=usage {err}", file=sys.stderr)
        return 2
    print(result.report, end="")
    if not result.passed:
        return _fail("verify_failed", "basis verification reported FAIL")
    return 0


def _cmd_simulate(args):
    if args.server:
        try:
            text = _load(args.config)
        except OSError as err:
            return _fail("io", str(err))
        response = _post(args.server, "/simulate",
                         {"config_text": text, "output_dir": args.output_dir})
        if response.status_code == 422:
            detail = response.json().get("detail", {})
            return _fail("config_invalid", "configuration rejected",
                         detail.get("violations", [response.text]))
        if response.status_code != 200:
            return _fail("server", f"HTTP {response.status_code}",
                         [response.text])
        body = response.json()
        outdir = args.output_dir or body["output_dir"]
        for name, key in (("snapshots.csv", "snapshots_csv"),
                          ("diagnostics.csv", "diagnostics_csv"),
                          ("run_meta", "run_meta")):
            _write_text(os.path.join(outdir, name), body[key])
        print(f"wrote snapshots.csv, diagnostics.csv, run_meta to {outdir}")
        return 0

    try:
        config = load_config(args.config)
    except OSError as err:
        return _fail("io", str(err))
    except ConfigError as err:
        return _fail("config_invalid",
                     f"{len(err.violations)} violation(s)", err.violations)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    try:
        result = simulate(config, base_dir=base_dir,
                          output_dir=args.output_dir)
    except PositivityError as err:
        return _fail("positivity_abort", str(err))
    except (ValueError, OSError) as err:
        return _fail("run_failed", str(err))
    paths = write_outputs(result)
    last = result.trajectory[-1]
    print(f"wrote {', '.join(sorted(paths))} to {result.output_dir}")
    print(f"t_end {fmt17(last[0])}  total_number "
          f"{fmt17(last[2].total_number)}")
    return 0


def _cmd_limit_study(args):
    if not 2 <= args.levels <= 5:
        print(f"error=usage levels must be in [2, 5], got {args.levels}",
              file=sys.stderr)
        return 2
    if args.server:
        try:
            text = _load(args.config)
        except OSError as err:
            return _fail("io", str(err))
        response = _post(args.server, "/limit-study",
                         {"config_text": text, "levels": args.levels,
                          "output_dir": args.output_dir})
        if response.status_code == 422:
            detail = response.json().get("detail", {})
            return _fail("config_invalid", "configuration rejected",
                         detail.get("violations", [response.text]))
        if response.status_code != 200:
            return _fail("server", f"HTTP {response.status_code}",
                         [response.text])
        body = response.json()
        outdir = args.output_dir or body["output_dir"]
        _write_text(os.path.join(outdir, "limit_study.csv"), body["csv_text"])
        print(f"wrote limit_study.csv to {outdir}")
        return 0

    try:
        config = load_config(args.config)
    except OSError as err:
        return _fail("io", str(err))
    except ConfigError as err:
        return _fail("config_invalid",
                     f"{len(err.violations)} violation(s)", err.violations)
    base_dir = os.path.dirname(os.path.abspath(args.config))
    try:
        result = limit_study(config, args.levels, base_dir=base_dir,
                             output_dir=args.output_dir)
    except (ValueError, OSError) as err:
        return _fail("run_failed", str(err))
    paths = write_limit_study(result)
    print(f"wrote {', '.join(sorted(paths))} to {result.output_dir}")
    for level, d, n_max, defect in result.rows:
        print(f"level {level}  d {fmt17(d)}  n_max {n_max}  "
              f"defect {fmt17(defect)}")
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error=usage missing subcommand", file=sys.stderr)
        return 2
    handler = {"verify-basis": _cmd_verify,
               "simulate": _cmd_simulate,
               "limit-study": _cmd_limit_study,
               "serve": _cmd_serve}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
