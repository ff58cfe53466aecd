"""Command-line front end.

Two command families:

    elliptic-bailey verify <identity> [flags]   run a verification campaign
    elliptic-bailey eval <function> [flags]     evaluate one special function

Complex numbers on the command line use ``a+bi`` / ``a-bi`` notation with no
spaces, e.g. ``--z 0.5+0.2i``.  Campaign options can also come from an INI
config file (section ``[campaign]``, optional ``[fixed]`` for pinned
parameters); explicit flags override config values and unknown keys are hard
errors.  Exit codes: 0 all draws passed, 1 at least one verification failure,
2 configuration/usage error, 3 internal numerical non-convergence.  JSON mode
(``--json``) emits one report object per line plus a trailing summary object,
all keyed to the versioned schema tag; floats are hex-encoded so reports
round-trip losslessly, and timing is excluded unless ``--timing`` is given so
that reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import argparse
import configparser
import sys

from .bailey_algebra import d_entry, m_entry
from .errors import EllipticBaileyError, QuadratureConvergenceError
from .harness import IDENTITIES, CampaignConfig, run_campaign, summarize
from .special_functions import (
    NomePair,
    elliptic_gamma,
    elliptic_pochhammer,
    gamma_truncation_orders,
    qpochhammer_inf,
    theta,
    _qpoch_order,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3


class CliError(Exception):
    pass


def parse_complex(text: str) -> complex:
    """Parse ``a+bi`` / ``a-bi`` (no spaces); plain reals are accepted too."""
    s = text.strip()
    if " " in s:
        raise CliError(f"complex literal may not contain spaces: {text!r}")
    if s.endswith(("i", "I")):
        s = s[:-1] + "j"
    try:
        return complex(s)
    except ValueError as exc:
        raise CliError(f"cannot parse complex number {text!r} (use a+bi notation)") from exc


_CAMPAIGN_KEYS = {
    "identity": str,
    "draws": int,
    "seed": int,
    "N": int,
    "tolerance": float,
    "p": parse_complex,
    "q": parse_complex,
    "allow_complex_nomes": lambda s: s.lower() in ("1", "true", "yes"),
    "retry_cap": int,
    "amplification_cap": float,
    "spectators": int,
    "quad_rel_tol": float,
    "threads": int,
}


def load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case-sensitive ('N' mirrors the flag)
    read = parser.read(path)
    if not read:
        raise CliError(f"config file not found: {path}")
    allowed_sections = {"campaign", "fixed"}
    unknown_sections = set(parser.sections()) - allowed_sections
    if unknown_sections:
        raise CliError(f"unknown config sections: {sorted(unknown_sections)}")
    out: dict = {}
    if parser.has_section("campaign"):
        for key, raw in parser.items("campaign"):
            if key == "n":
                key = "N"
            if key not in _CAMPAIGN_KEYS:
                raise CliError(f"unknown config key [campaign] {key}")
            try:
                out[key] = _CAMPAIGN_KEYS[key](raw)
            except (ValueError, CliError) as exc:
                raise CliError(f"bad value for [campaign] {key}: {raw!r} ({exc})") from exc
    if parser.has_section("fixed"):
        out["fixed"] = {k: parse_complex(v) for k, v in parser.items("fixed")}
    return out


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="elliptic-bailey",
        description="Verify elliptic Bailey-lemma identities to floating-point tolerance.",
        epilog="Complex arguments use a+bi notation without spaces, e.g. 0.5-0.2i.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    ver = sub.add_parser("verify", help="run a verification campaign")
    ver.add_argument("identity", choices=IDENTITIES)
    ver.add_argument("--config", help="INI config file ([campaign] section)")
    ver.add_argument("--draws", type=int)
    ver.add_argument("--seed", type=int)
    ver.add_argument("--N", type=int, dest="N")
    ver.add_argument("--tol", type=float, dest="tolerance", help="override the pass tolerance")
    ver.add_argument("--p", type=parse_complex, help="fix the nome p (a+bi)")
    ver.add_argument("--q", type=parse_complex, help="fix the nome q (a+bi)")
    ver.add_argument("--complex-nomes", action="store_true", dest="allow_complex_nomes",
                     default=None, help="sample complex nomes instead of real defaults")
    ver.add_argument("--threads", type=int, help="parallel draws (capped by ELLIPTIC_BAILEY_THREADS)")
    ver.add_argument("--json", action="store_true", help="line-delimited JSON reports + summary")
    ver.add_argument("--timing", action="store_true", help="include wall time in JSON output")
    ver.add_argument("-v", "--verbose", action="store_true")

    ev = sub.add_parser("eval", help="evaluate one special function")
    ev.add_argument("function", choices=["gamma", "theta", "pochhammer", "m-entry", "d-entry"])
    ev.add_argument("--z", type=parse_complex)
    ev.add_argument("--p", type=parse_complex, required=True)
    ev.add_argument("--q", type=parse_complex)
    ev.add_argument("--n", type=int, help="pochhammer order (may be negative)")
    ev.add_argument("--N", type=int, dest="bigN")
    ev.add_argument("--m", type=int)
    ev.add_argument("--a", type=parse_complex)
    ev.add_argument("--k", type=parse_complex)
    ev.add_argument("--b", type=parse_complex)
    ev.add_argument("--c", type=parse_complex)
    return top


def _require(args, names):
    missing = [n for n in names if getattr(args, "bigN" if n == "N" else n.replace("-", "_")) is None]
    if missing:
        raise CliError(f"missing required arguments: {', '.join('--' + n for n in missing)}")


def cmd_eval(args) -> int:
    fn = args.function
    if fn == "theta":
        _require(args, ["z"])
        from .special_functions import DEFAULT_POLICY

        val = theta(args.z, args.p)
        order = _qpoch_order(abs(args.p), max(abs(args.z), 1.0), DEFAULT_POLICY)
        print(f"theta({_fmt(args.z)}; {_fmt(args.p)}) = {_fmt(val)}")
        print(f"  [q-pochhammer order {order}]")
        return EXIT_OK
    _require(args, ["q"])
    nome = NomePair(args.p, args.q)
    if fn == "gamma":
        _require(args, ["z"])
        val = elliptic_gamma(args.z, nome)
        jp, jq = gamma_truncation_orders(args.z, nome)
        print(f"gamma({_fmt(args.z)}; {_fmt(nome.p)}, {_fmt(nome.q)}) = {_fmt(val)}")
        print(f"  [truncation orders J_p={jp}, J_q={jq}]")
    elif fn == "pochhammer":
        _require(args, ["z", "n"])
        val = elliptic_pochhammer(args.z, args.n, nome)
        print(f"theta({_fmt(args.z)})_{args.n} = {_fmt(val)}")
        print(f"  [theta factors truncated at order {_theta_order(nome)}]")
    elif fn == "m-entry":
        _require(args, ["N", "m", "a", "k"])
        val = m_entry(args.bigN, args.m, args.a, args.k, nome)
        print(f"M[{args.bigN}, {args.m}]({_fmt(args.a)}, {_fmt(args.k)}) = {_fmt(val)}")
        print(f"  [theta factors truncated at order {_theta_order(nome)}]")
    elif fn == "d-entry":
        _require(args, ["m", "a", "b", "c"])
        val = d_entry(args.m, args.a, args.b, args.c, nome)
        print(f"D_{args.m}({_fmt(args.a)}; {_fmt(args.b)}, {_fmt(args.c)}) = {_fmt(val)}")
        print(f"  [theta factors truncated at order {_theta_order(nome)}]")
    return EXIT_OK


def _theta_order(nome: NomePair) -> int:
    return _qpoch_order(abs(nome.p), 1.0, nome.trunc)


def _fmt(v) -> str:
    v = complex(v)
    if v.imag == 0:
        return repr(v.real)
    sign = "+" if v.imag >= 0 else "-"
    return f"{v.real!r}{sign}{abs(v.imag)!r}i"


def cmd_verify(args) -> int:
    settings: dict = {}
    if args.config:
        settings.update(load_config_file(args.config))
    settings["identity"] = args.identity
    for key in ("draws", "seed", "N", "tolerance", "p", "q", "allow_complex_nomes", "threads"):
        val = getattr(args, key)
        if val is not None:
            settings[key] = val
    try:
        config = CampaignConfig.from_mapping(settings)
    except EllipticBaileyError as exc:
        raise CliError(str(exc)) from exc

    reports = run_campaign(config)
    summary = summarize(reports)

    if args.json:
        for rep in reports:
            print(rep.to_json(include_timing=args.timing))
        import json as _json

        print(_json.dumps(summary.to_json_dict(), sort_keys=True, separators=(",", ":")))
    else:
        _print_table(reports, summary, verbose=args.verbose)

    if any(r.error is not None and r.error.startswith("non-convergence") for r in reports):
        return EXIT_NONCONVERGENCE
    if summary.n_pass < summary.n_reports:
        return EXIT_FAIL
    return EXIT_OK


def _print_table(reports, summary, verbose=False):
    print(f"identity: {summary.identity}")
    print(f"{'draw':>5s}  {'residual':>12s}  {'tolerance':>10s}  result")
    for rep in reports:
        res = f"{rep.residual:.3e}" if rep.error is None else "--"
        label = "pass" if rep.passed else ("error" if rep.error else "FAIL")
        line = f"{str(rep.draw_index):>5s}  {res:>12s}  {rep.tolerance:>10.1e}  {label}"
        if rep.error and verbose:
            line += f"  ({rep.error})"
        print(line)
    print(
        f"summary: {summary.n_pass}/{summary.n_reports} passed, "
        f"max residual {summary.max_residual:.3e}, "
        f"median {summary.median_residual:.3e}, "
        f"{summary.rejected_draws} rejected draws"
    )
    if summary.n_error:
        print(f"         {summary.n_error} draws errored")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the config-error code
        return int(exc.code) if exc.code else EXIT_OK
    try:
        if args.command == "verify":
            return cmd_verify(args)
        return cmd_eval(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except EllipticBaileyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
