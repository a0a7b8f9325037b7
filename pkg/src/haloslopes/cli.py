"""Command line front end.  Parses flags into a request payload and hands it
to the service dispatcher, in process or over HTTP with --server."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Dict, List, Optional, Sequence

from .service import (COMMANDS, EXIT_MALFORMED, EXIT_OK, EXIT_PRECONDITION, EXIT_UNKNOWN_COMMAND,
                      run_command)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_weight(sp, with_rule: bool = False) -> None:
    sp.add_argument("--p", type=int)
    sp.add_argument("--t", "--weight", dest="t", type=_int_list, help="dominant weight, e.g. 4,0")
    sp.add_argument("--conductors", type=_int_list)
    sp.add_argument("--tame", type=_int_list)
    sp.add_argument("--wild-k", dest="wild_k", type=_int_list)
    if with_rule:
        sp.add_argument("--rule", choices=["auto", "max", "data"])


def _add_common(sp) -> None:
    sp.add_argument("--config", help="JSON file of default arguments; explicit flags win")
    sp.add_argument("--out", help="write JSON here instead of stdout")
    sp.add_argument("--plot-data", dest="plot_data", help="write two-column x y text here")
    sp.add_argument("--server", help="base URL of a running service to send the request to")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="haloslopes", description="Slopes of U_p on truncated spaces of p-adic forms.")
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)

    sp = subs.add_parser("weight-coords", help="valuations of the weight-space coordinates")
    _add_weight(sp)

    sp = subs.add_parser("roche", help="level matrix and index of the extension subgroup")
    _add_weight(sp, with_rule=True)

    sp = subs.add_parser("dims", help="dimension of the algebraic representation")
    sp.add_argument("--n", type=int)
    sp.add_argument("--t", "--weight", dest="t", type=_int_list)

    sp = subs.add_parser("budget", help="slope budget l(t) for an exponent vector a")
    sp.add_argument("--n", type=int)
    sp.add_argument("--a", type=_int_list)
    sp.add_argument("--m", type=_int_list)
    sp.add_argument("--psi", type=_str_list)

    sp = subs.add_parser("mackey", help="brute-force irreducibility of the induced representation")
    _add_weight(sp, with_rule=True)
    sp.add_argument("--budget", type=int)

    for name, text in (("charpoly", "coefficients of det(1 - X U_p)"), ("np", "Newton polygon of U_p")):
        sp = subs.add_parser(name, help=text)
        _add_weight(sp)
        sp.add_argument("--n", type=int)
        sp.add_argument("--h", type=int)
        sp.add_argument("--a", type=_int_list)
        sp.add_argument("--degree-cap", dest="degree_cap", type=int)
        sp.add_argument("--precision", type=int)
        sp.add_argument("--Nmax", type=int)
        sp.add_argument("--radius", type=int)
        sp.add_argument("--global-data", dest="global_data", help="gallery name or JSON file")
        sp.add_argument("--allow-floors", dest="allow_floors", action="store_const", const=True)

    sp = subs.add_parser("lower-bound", help="exact lower-bound point table")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--h", type=int)
    sp.add_argument("--vTa")
    sp.add_argument("--Mmax", type=int)

    sp = subs.add_parser("upper-bound", help="the upper-bound point for a weight")
    _add_weight(sp)
    sp.add_argument("--h", type=int)
    sp.add_argument("--eps")

    sp = subs.add_parser("iterate-ubd", help="upper-bound points along perturbed weights")
    _add_weight(sp)
    sp.add_argument("--h", type=int)
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--A1")

    sp = subs.add_parser("disconnect", help="slope lattice trapping certificate")
    sp.add_argument("--alpha")
    sp.add_argument("--n", type=int)
    sp.add_argument("--A1")
    sp.add_argument("--p", type=int)
    sp.add_argument("--h", type=int)

    sp = subs.add_parser("ordinary", help="degree of the ordinary part from coefficient valuations")
    sp.add_argument("--valuations", type=_str_list)

    for sp in subs.choices.values():
        _add_common(sp)
    return parser


_PLUMBING = ("command", "config", "out", "plot_data", "server")


def _load_config(path: str) -> Dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read config {path!r}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path!r} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _plot_rows(command: str, body: dict) -> List[Sequence[str]]:
    if command in ("np",):
        return body["polygon"]["vertices"]
    if command == "charpoly":
        rows = []
        for c in body["coefficients"]:
            y = c.get("valuation", c.get("floor"))
            if y is not None and y != "inf":
                rows.append((c["N"], y))
        return rows
    if command in ("lower-bound", "iterate-ubd"):
        return body["points"]
    if command == "upper-bound":
        return [(body["x"], body["y"])]
    raise ValueError(f"{command} has no plot data")


def _remote(server: str, command: str, payload: dict):
    import httpx
    resp = httpx.post(f"{server.rstrip('/')}/run/{command}", json=payload, timeout=None)
    return int(resp.headers.get("X-Exit-Code", "0" if resp.is_success else "1")), resp.json()


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    first = next((a for a in argv if not a.startswith("-")), None)
    if first is None or first not in COMMANDS:
        if argv and argv[0] in ("-h", "--help"):
            build_parser().print_help()
            return EXIT_OK
        sys.stderr.write(f"unknown command: {first!r}; expected one of {', '.join(sorted(COMMANDS))}\n")
        return EXIT_UNKNOWN_COMMAND
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(f"{first}: {exc}\n")
        return EXIT_UNKNOWN_COMMAND
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    command = ns.command
    payload: Dict = {}
    if ns.config:
        try:
            payload = _load_config(ns.config)
        except ValueError as exc:
            sys.stderr.write(f"malformed config: {exc}\n")
            return EXIT_MALFORMED
        cfg_cmd = payload.pop("command", command)
        if cfg_cmd != command:
            sys.stderr.write(f"malformed config: it is for {cfg_cmd!r}, not {command!r}\n")
            return EXIT_MALFORMED
    for key, val in vars(ns).items():
        if key not in _PLUMBING and val is not None:
            payload[key] = val
    if ns.server:
        code, body = _remote(ns.server, command, payload)
    else:
        code, body = run_command(command, payload)
    text = json.dumps(body, sort_keys=True, indent=2) + "\n"
    if code != EXIT_OK:
        sys.stderr.write(f"{body.get('error')}: {body.get('message')}\n")
        if ns.out:
            _emit(text, ns.out)
        return code
    _emit(text, ns.out)
    if ns.plot_data:
        try:
            rows = _plot_rows(command, body)
        except ValueError as exc:
            sys.stderr.write(f"{exc}\n")
            return EXIT_PRECONDITION
        with open(ns.plot_data, "w") as fh:
            fh.writelines(f"{x} {y}\n" for x, y in rows)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
