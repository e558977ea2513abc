"""Command-line front end.

Subcommands: ``check``, ``region``, ``compare``, ``simulate`` and ``report``.
Every command writes a CSV table or a JSON document (``--format obj``) to
``--out`` or standard output. Exit status is 0 on success, 1 when an
internal consistency check fails and 2 for bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bounds import KINDS, OPERATIONS, RegionResult, SearchBudget, certify
from .channel import AuxInput, ChannelError, CicChannel, FIXTURE_ENV, resolve_channel
from .coding import CodeSpec, CodingError, estimate_errors, sweep_csv
from .conditions import CHECKS, CheckBudget, Verdict
from .prob import ProbabilityError
from .regions import BOUND_TOL, equal, gap, subset

log = logging.getLogger("cogcic")

CERTIFY_TOL = 1e-6


class InvariantError(RuntimeError):
    """An internal consistency check failed; maps to exit status 1."""


# -- argument parsing -------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _rate_list(text: str) -> list[tuple[float, float]]:
    out = []
    for item in text.split(","):
        try:
            a, b = item.split(":")
            out.append((float(a), float(b)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected R1:R2 pairs, got {item!r}") from None
    return out


def _kinds(text: str) -> list[str]:
    kinds = [k.strip() for k in text.split(",") if k.strip()]
    bad = [k for k in kinds if k not in KINDS]
    if bad or not kinds:
        raise argparse.ArgumentTypeError(f"unknown region kind(s) {bad}; choose from {', '.join(KINDS)}")
    return kinds


def _positive(kind):
    def parse(text: str):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return v

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cogcic",
        description="Rate regions, channel orderings and coding simulations for the cognitive interference channel.",
        epilog=f"Channels are JSON files or fixture names; ${FIXTURE_ENV} overrides the fixture directory.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("channel_pos", nargs="?", metavar="CHANNEL", help="channel file or fixture name")
    common.add_argument("--channel", help="channel file or fixture name")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--aux-card", type=_positive(int), default=None, help="auxiliary alphabet size")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "obj"), default="csv", help="csv table or JSON document")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--restarts", type=_positive(int), default=None, help="random restarts per direction or check")
    search.add_argument("--weights", type=_positive(int), default=9, help="initial weight directions")
    search.add_argument("--iters", type=_positive(int), default=400, help="ascent iterations per run")

    kinds = argparse.ArgumentParser(add_help=False)
    kinds.add_argument("--kind", type=_kinds, default=None, help=f"comma list of {','.join(KINDS)}")
    kinds.add_argument("--tol", type=float, default=1e-2, help="tolerance for equality in comparisons")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--n", type=_int_list, default=[10], help="blocklengths, comma separated")
    sim.add_argument("--rates", type=_rate_list, default=[(0.5, 0.5)], help="R1:R2[,R1:R2...]")
    sim.add_argument("--trials", type=_positive(int), default=1000)
    sim.add_argument("--epsilon", type=_positive(float), default=0.2)
    sim.add_argument("--scheme", choices=("superposition", "independent"), default="superposition")
    sim.add_argument("--input", type=Path, help="JSON input distribution over (w, x1, x2); default uniform")

    sub.add_parser("check", parents=[common, search], help="decide channel orderings and regime conditions")
    sub.add_parser("region", parents=[common, search, kinds], help="compute rate regions")
    sub.add_parser("compare", parents=[common, search, kinds], help="pairwise containment of regions")
    sub.add_parser("simulate", parents=[common, sim], help="Monte Carlo error rates of random codes")
    sub.add_parser("report", parents=[common, search, kinds, sim], help="all of the above in one document")
    return p


# -- commands ----------------------------------------------------------------------


def _channel(args) -> CicChannel:
    ref = args.channel or args.channel_pos
    if not ref:
        raise ChannelError("no channel given (positional CHANNEL or --channel)")
    return resolve_channel(ref)


def _search_budget(args) -> SearchBudget:
    return SearchBudget(
        restarts=args.restarts or SearchBudget.restarts,
        weight_sweep=args.weights,
        max_iters=args.iters,
        seed=args.seed,
        aux_card=args.aux_card,
    )


def _check_budget(args) -> CheckBudget:
    return CheckBudget(restarts=args.restarts or CheckBudget.restarts, seed=args.seed, aux_card=args.aux_card)


def run_checks(ch: CicChannel, args) -> dict[str, Verdict]:
    budget = _check_budget(args)
    verdicts = {k: fn(ch, budget) for k, fn in CHECKS.items()}
    for name, v in verdicts.items():
        if v.witness_values is not None and v.witness_values["violation"] < 1e-6:
            raise InvariantError(f"{name}: witness does not reproduce a violation")
    return verdicts


def run_regions(ch: CicChannel, args, default: Sequence[str]) -> dict[str, RegionResult]:
    budget = _search_budget(args)
    out = {}
    for kind in args.kind or default:
        res = OPERATIONS[kind](ch, budget)
        worst = max(certify(res, ch))
        if worst > CERTIFY_TOL:
            raise InvariantError(f"{kind}: a vertex does not re-evaluate from its distribution (excess {worst:.3g})")
        out[kind] = res
    return out


def comparisons(results: dict[str, RegionResult], tol: float) -> list[dict[str, Any]]:
    rows = []
    names = list(results)
    for a in names:
        for b in names:
            if a == b:
                continue
            ra, rb = results[a].region, results[b].region
            rows.append(
                {
                    "a": a,
                    "b": b,
                    "gap": gap(ra, rb),
                    "subset": subset(ra, rb, BOUND_TOL),
                    "equal": equal(ra, rb, tol),
                }
            )
    return rows


def _default_input(ch: CicChannel, args) -> AuxInput:
    if args.input is not None:
        try:
            doc = json.loads(Path(args.input).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ChannelError(f"cannot read input distribution {args.input}: {exc}") from None
        return AuxInput.from_dict(doc)
    p = np.full((1, ch.nx1, ch.nx2), 1.0 / (ch.nx1 * ch.nx2))
    return AuxInput.from_array(p, ("w",), "product" if args.scheme == "independent" else "unconstrained")


def run_simulations(ch: CicChannel, args):
    inp = _default_input(ch, args)
    return [
        estimate_errors(ch, inp, CodeSpec(n, r1, r2, args.epsilon, args.seed, args.scheme), args.trials)
        for n in args.n
        for r1, r2 in args.rates
    ]


def _compare_csv(rows: list[dict[str, Any]]) -> str:
    return _csv([("a", "b", "gap", "subset", "equal")] + [(r["a"], r["b"], r["gap"], r["subset"], r["equal"]) for r in rows])


def _csv(rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _dump(doc: Any) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _header(ch: CicChannel, args) -> dict[str, Any]:
    return {"channel": ch.name or str(args.channel or args.channel_pos), "sizes": list(ch.sizes), "seed": args.seed}


def cmd_check(args) -> str:
    ch = _channel(args)
    verdicts = run_checks(ch, args)
    if args.format == "obj":
        return _dump(_header(ch, args) | {"verdicts": {k: v.to_dict() for k, v in verdicts.items()}})
    return _verdict_csv(verdicts)


def _region_doc(results: dict[str, RegionResult]) -> dict[str, Any]:
    return {k: r.to_dict() for k, r in results.items()}


def _vertex_rows(results: dict[str, RegionResult]) -> list[tuple]:
    rows: list[tuple] = [("kind", "r1", "r2")]
    for k, r in results.items():
        rows += [(k, v.r1, v.r2) for v in r.vertices]
    return rows


def cmd_region(args) -> str:
    ch = _channel(args)
    results = run_regions(ch, args, ["thm4"])
    if args.format == "obj":
        doc = _header(ch, args) | {"regions": _region_doc(results)}
        if len(results) > 1:
            doc["comparisons"] = comparisons(results, args.tol)
        return _dump(doc)
    return _csv(_vertex_rows(results))


def cmd_compare(args) -> str:
    ch = _channel(args)
    results = run_regions(ch, args, ["thm4", "c2"])
    rows = comparisons(results, args.tol)
    if args.format == "obj":
        return _dump(_header(ch, args) | {"tolerance": args.tol, "subset_tolerance": BOUND_TOL, "comparisons": rows})
    return _compare_csv(rows)


def cmd_simulate(args) -> str:
    ch = _channel(args)
    reports = run_simulations(ch, args)
    if args.format == "obj":
        return _dump(_header(ch, args) | {"simulations": [r.to_dict() for r in reports]})
    return sweep_csv(reports)


def cmd_report(args) -> str:
    ch = _channel(args)
    verdicts = run_checks(ch, args)
    results = run_regions(ch, args, ["thm1", "thm2", "thm4"])
    reports = run_simulations(ch, args)
    if args.format == "obj":
        return _dump(
            _header(ch, args)
            | {
                "verdicts": {k: v.to_dict() for k, v in verdicts.items()},
                "regions": _region_doc(results),
                "comparisons": comparisons(results, args.tol),
                "simulations": [r.to_dict() for r in reports],
            }
        )
    parts = [
        "# checks\n" + _verdict_csv(verdicts),
        "# regions\n" + _csv(_vertex_rows(results)),
        "# comparisons\n" + _compare_csv(comparisons(results, args.tol)),
        "# simulations\n" + sweep_csv(reports),
    ]
    return "\n".join(parts)


def _verdict_csv(verdicts: dict[str, Verdict]) -> str:
    rows = [("check", "status", "certificate", "sound", "violation")]
    for k, v in verdicts.items():
        viol = "" if v.witness_values is None else v.witness_values["violation"]
        cert = "" if v.certificate is None else v.certificate["type"]
        rows.append((k, v.status.value, cert, v.sound, viol))
    return _csv(rows)


COMMANDS = {
    "check": cmd_check,
    "region": cmd_region,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s: %(message)s")
    try:
        text = COMMANDS[args.command](args)
        if args.out:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
    except (ChannelError, CodingError, ProbabilityError, OSError) as exc:
        print(f"cogcic: error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"cogcic: invariant violated: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
