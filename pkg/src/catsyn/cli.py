"""Command-line runner: ``catsyn list``, ``catsyn run`` and ``catsyn verify``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dynamics import AccuracyError, StiffnessError
from .hilbert import HilbertError
from .registry import ConfigError, get_experiment, list_experiments, resolve_params

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def parse_assignments(items) -> dict:
    """``key=value`` strings into a dict; later keys win."""
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def read_config(path: str) -> dict:
    """Key-per-line config; ``[section]`` headers and dotted keys nest.

    Only the last dotted component names the parameter, so ``pcc.beta = 2``
    and ``beta = 2`` are the same override.  ``#`` starts a comment.
    """
    out = {}
    section = ""
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            dotted = f"{section}.{key}" if section else key
            out[dotted.rsplit(".", 1)[-1]] = value
    return out


def _cmd_list(args) -> int:
    for exp in list_experiments():
        flag = " [slow]" if exp.slow else ""
        print(f"{exp.id:28s} {exp.figure:16s} {exp.description}{flag}")
        if args.verbose:
            for k, v in exp.defaults.items():
                print(f"    {k} = {v}")
    return EXIT_OK


def _diagnostic_block(exp_id: str, params: dict, err: Exception) -> dict:
    block = {"id": exp_id, "params": params, "error": type(err).__name__, "message": str(err)}
    if isinstance(err, StiffnessError):
        block["t_reached"] = err.t_reached
    return block


def _cmd_run(args) -> int:
    try:
        exp = get_experiment(args.id)
        overrides = read_config(args.config) if args.config else {}
        overrides.update(parse_assignments(args.set or []))
        params = resolve_params(exp, overrides)
    except (ConfigError, OSError) as err:
        print(f"catsyn: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = exp.runner(params)
    except (AccuracyError, StiffnessError, HilbertError, FloatingPointError) as err:
        block = _diagnostic_block(exp.id, params, err)
        text = json.dumps(block, indent=1, sort_keys=True, default=str)
        print(f"catsyn: numerical failure in {exp.id}\n{text}", file=sys.stderr)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        return EXIT_NUMERICAL
    payload = result.to_csv() if args.format == "csv" else result.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .acceptance import run_suite
    reports = run_suite(args.suite)
    failed = 0
    for rep in reports:
        print(rep.line())
        failed += not rep.passed
    print(f"{len(reports) - failed}/{len(reports)} criteria passed")
    return EXIT_OK if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catsyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="show the experiment catalog")
    p.add_argument("-v", "--verbose", action="store_true", help="also print default parameters")
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("id")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a parameter")
    p.add_argument("--config", help="key = value file with parameter overrides")
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--suite", choices=("quick", "full"), default="quick")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
