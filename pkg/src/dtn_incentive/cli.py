"""Command-line entry point.

Exit codes: 0 success, 1 validation failure (closed form outside oracle tolerance),
2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, kernels
from .errors import DTNIncentiveError
from .model import CostParams, load_relays
from .reward import theoretical_expected_payment
from .scenarios import SCENARIOS

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _point(text: str):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y in meters, got {text!r}") from None
    return x, y


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def cmd_simulate(args) -> int:
    from .sim import ExperimentConfig, run

    cfg = ExperimentConfig.from_json(args.config)
    changes = {"seed": args.seed}
    if args.setting:
        changes["setting"] = args.setting
    if args.messages:
        changes["messages"] = args.messages
    report = run(cfg.replace(**changes))
    _write(args.out, _dump(report.to_dict(per_message=not args.summary_only)))
    if args.csv:
        Path(args.csv).write_text(report.series_csv())
    return EXIT_OK


def cmd_validate_prob(args) -> int:
    from .validation import validate_probabilities

    result = validate_probabilities(args.n_relays, args.draws, args.samples, args.seed,
                                    variant=args.variant, k=args.k)
    _write(args.out, _dump(result))
    return EXIT_OK if result["ok"] else EXIT_FAIL


def cmd_ttl_curve(args) -> int:
    from .ttl import parse_grid, tradeoff_curve

    lines = [f"{g:.12g},{d:.12g}\n" for g, d in tradeoff_curve(args.n, parse_grid(args.grid))]
    _write(args.out, "".join(lines))
    return EXIT_OK


def cmd_fit_traces(args) -> int:
    from . import traces

    if args.positions:
        if args.source is None or args.dest is None:
            raise DTNIncentiveError("--positions needs --source X,Y and --dest X,Y")
        positions = traces.read_positions(args.positions)
        anchors = {traces.SOURCE: args.source, traces.DEST: args.dest}
        contacts = traces.detect_contacts(positions, anchors, args.range)
        fitted = traces.fit_from_contacts(contacts)
    else:
        contacts = traces.read_contacts(args.contacts)
        fitted = traces.fit_from_contacts(contacts, source=args.source_node, dest=args.dest_node)
    _write(args.out, _dump(fitted.to_dict(bins=args.bins)))
    return EXIT_OK


def cmd_theoretical(args) -> int:
    relays = SCENARIOS[args.scenario]() if args.scenario else load_relays(args.relays)
    costs = CostParams.from_cli(args.costs)
    print(f"{theoretical_expected_payment(costs, relays):.10g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtn-incentive",
        description="Incentive-compatible two-hop relaying: quotes, simulation and trace fitting.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a per-message payment experiment")
    p.add_argument("--config", required=True, help="experiment JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="report JSON (default: stdout)")
    p.add_argument("--csv", help="time series CSV: slot,payment,running_avg,theoretical")
    p.add_argument("--setting", help="override the setting: F, P+, P- or N")
    p.add_argument("--messages", type=int, help="override the message count")
    p.add_argument("--summary-only", action="store_true", help="omit per-message arrays")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate-prob", help="closed forms against the Monte Carlo oracle")
    p.add_argument("--n-relays", type=int, required=True)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--draws", type=int, default=20)
    p.add_argument("--variant", choices=("normalized", "as_written"), default="normalized")
    p.add_argument("--k", type=float, default=3.0, help="tolerance in standard errors")
    p.add_argument("--out", help="JSON table (default: stdout)")
    p.set_defaults(func=cmd_validate_prob)

    p = sub.add_parser("ttl-curve", help="failure probability against storage gain")
    p.add_argument("--n", type=int, required=True, help="number of relays")
    p.add_argument("--grid", required=True, help="gains as start:stop:step or a comma list")
    p.add_argument("--out", help="CSV of G,D (default: stdout)")
    p.set_defaults(func=cmd_ttl_curve)

    p = sub.add_parser("fit-traces", help="fit contact rates from positions or contacts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--positions", help="CSV time_s,node_id,x_m,y_m")
    src.add_argument("--contacts", help="CSV t_start_s,t_end_s,node_a,node_b")
    p.add_argument("--source", type=_point, help="source position X,Y in meters")
    p.add_argument("--dest", type=_point, help="destination position X,Y in meters")
    p.add_argument("--range", type=float, default=50.0, help="contact radius in meters")
    p.add_argument("--source-node", default="source", help="source node id in a contact log")
    p.add_argument("--dest-node", default="dest", help="destination node id in a contact log")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--out", help="relay JSON (default: stdout)")
    p.set_defaults(func=cmd_fit_traces)

    p = sub.add_parser("theoretical", help="expected payment per message")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--relays", help="relay JSON file")
    grp.add_argument("--scenario", choices=sorted(SCENARIOS))
    p.add_argument("--costs", required=True, help="c_d,c_r,c_s (in that order)")
    p.set_defaults(func=cmd_theoretical)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DTNIncentiveError, OSError) as exc:
        print(f"dtn-incentive {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
