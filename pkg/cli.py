"""
Virtual Qubit Machines - command-line entry point.

    python cli.py design --mode fridge --n 4 --ev 1 --emax 2 --bc 0.2 --bh 0.05
    python cli.py scan single --range 3:10
    python cli.py dynamics --range 3:16 --tau-s 1 10 100
    python cli.py eval machine.json

Tables go to stdout (or --out), logs and errors to stderr.
"""
import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import config
from amplify import amplify, amplify_optimal, effective_virtual_qubit, multi_steady_state
from concat import ConcatSpec, Placement, concat_steady, concat_virtual_qubit
from cycle import efficiency, steady_state, virtual_qubit_of
from design import DesignParams, Mode, optimal_cycle
from dynamics import DynamicsConfig, build_rates, optimal_length, scan_cycle_length, steady, system_beta
from errors import DegenerateMachineError, MachineError, UsageError
from logger_setup import get_logger, setup_logging
from machine_document import document_for, load_document, write_document
from results import ResultTable, join_values, write_table

logger = get_logger(__name__)


def parse_range(text: str) -> Tuple[int, int]:
    """'a:b' -> (a, b), inclusive; a single integer is a one-point range."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            low = high = int(parts[0])
        elif len(parts) == 2:
            low, high = int(parts[0]), int(parts[1])
        else:
            raise ValueError(text)
    except ValueError:
        raise UsageError(f"range must look like a:b, got {text!r}")
    if low > high:
        raise UsageError(f"empty range {text!r}")
    return low, high


def _positive_timescale(text: str) -> float:
    value = float(text)
    if math.isnan(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"timescale must be positive, got {text}")
    return value


def design_params(args: argparse.Namespace, n: Optional[int] = None) -> DesignParams:
    return DesignParams(
        n=args.n if n is None else n,
        e_v=args.ev,
        e_max=args.emax,
        beta_c=args.bc,
        beta_h=args.bh,
        mode=args.mode,
    )


def cmd_design(args: argparse.Namespace) -> ResultTable:
    params = design_params(args)
    params.check()
    spec = optimal_cycle(params)
    vq = virtual_qubit_of(spec)
    try:
        eta = efficiency(spec, params.mode.value).eta
    except DegenerateMachineError:
        eta = math.inf

    table = ResultTable(["n", "mode", "beta_v", "Z_v", "N_v", "eta", "gaps", "baths"])
    table.add_row(params.n, params.mode.value, vq.beta_v, vq.bias, vq.norm, eta,
                  join_values(spec.gaps), join_values(spec.betas))
    if args.document:
        write_document(document_for(spec, params), Path(args.document))
    return table


def _scan_points(args: argparse.Namespace) -> List[int]:
    if args.range:
        low, high = parse_range(args.range)
    elif args.k is not None:
        low = high = args.k
    elif args.n is not None:
        low = high = args.n
    else:
        raise UsageError("scan needs --range, --n or --k")
    points = list(range(low, high + 1))
    if args.variant == "multi":
        points = [p for p in points if p % 2 == 0 and p >= 4]
    elif args.variant == "single":
        points = [p for p in points if p >= 3]
    else:
        points = [p for p in points if p >= 1]
    if not points:
        raise UsageError(f"range {args.range or low} holds no valid {args.variant} machine")
    return points


def cmd_scan(args: argparse.Namespace) -> ResultTable:
    points = _scan_points(args)
    base = design_params(args, n=3)
    base.check()
    label = {"single": "n", "multi": "n_prime", "concat": "k"}[args.variant]
    table = ResultTable([label, "Z_v", "N_v", "beta_v"])

    for point in points:
        if args.variant == "single":
            vq = virtual_qubit_of(optimal_cycle(base.with_n(point)))
        elif args.variant == "multi":
            vq = effective_virtual_qubit(amplify_optimal(base.with_n(point // 2 + 1)))
        else:
            spec = ConcatSpec.from_params(base, k=point, placement=args.placement)
            vq = concat_virtual_qubit(spec)
        table.add_row(point, vq.bias, vq.norm, vq.beta_v)
    logger.info(f"Scanned {len(points)} {args.variant} machines")
    return table


def _dynamics_config(args: argparse.Namespace, tau_s: float) -> DynamicsConfig:
    return DynamicsConfig(tau_beta=args.tau_beta, tau_s=tau_s, tau_swap=args.tau_swap, beta_env=args.beta_env)


def cmd_dynamics(args: argparse.Namespace) -> ResultTable:
    low, high = parse_range(args.range)
    params = design_params(args, n=max(low, 3))
    params.check()
    if low < 3:
        raise UsageError(f"cycles need at least 3 levels, range starts at {low}")

    if args.optimal:
        table = ResultTable(["tau_s", "n_opt"])
        for tau_s in sorted(set(args.tau_s)):
            table.add_row(tau_s, optimal_length(_dynamics_config(args, tau_s), params, n_max=high, n_min=low))
        return table

    rows = scan_cycle_length(params, range(low, high + 1), args.tau_s, _dynamics_config(args, args.tau_s[0]))
    table = ResultTable(["n", "tau_s", "beta_s", "beta_loaded"])
    for row in rows:
        table.add_row(row.n, row.tau_s, row.beta_s, row.beta_loaded)
    return table


def cmd_eval(args: argparse.Namespace) -> ResultTable:
    doc = load_document(Path(args.document))
    table = ResultTable(["quantity", "value"])

    if doc.kind == "concat":
        params = doc.design
        spec = ConcatSpec.from_params(params, k=params.n - 2, placement=args.placement)
        state = concat_steady(spec)
        populations = state.first
        vq = concat_virtual_qubit(spec, state)
    elif doc.kind == "multi":
        multi = amplify(doc.cycle_spec())
        populations = multi_steady_state(multi).populations
        vq = effective_virtual_qubit(multi)
    else:
        cycle = doc.cycle_spec()
        populations = steady_state(cycle).populations
        vq = virtual_qubit_of(cycle)

    for j, p in enumerate(populations, start=1):
        table.add_row(f"p_{j}", p)
    table.add_row("beta_v", vq.beta_v)
    table.add_row("N_v", vq.norm)
    table.add_row("Z_v", vq.bias)

    if doc.dynamics is not None and doc.kind == "cycle":
        cycle = doc.cycle_spec()
        dyn = doc.dynamics.resolved(doc.design) if doc.design is not None else doc.dynamics
        state = steady(build_rates(cycle, dyn))
        table.add_row("beta_s", system_beta(state, dyn.e_s if dyn.e_s is not None else cycle.e_v))
    return table


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=[m.value for m in Mode], default=config.DEFAULT_MODE)
    common.add_argument("--ev", type=float, default=config.DEFAULT_E_V, help="virtual qubit gap E_v")
    common.add_argument("--emax", type=float, default=config.DEFAULT_E_MAX, help="largest bath-coupled gap")
    common.add_argument("--bc", type=float, default=config.DEFAULT_BETA_COLD, help="cold bath inverse temperature")
    common.add_argument("--bh", type=float, default=config.DEFAULT_BETA_HOT, help="hot bath inverse temperature")
    common.add_argument("--json", action="store_true", help="emit {columns, rows} JSON instead of CSV")
    common.add_argument("--out", type=Path, default=None, help="write the table to PATH")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="vqm", description="Design and simulate virtual-qubit thermal machines.")
    commands = parser.add_subparsers(dest="command", required=True)

    design = commands.add_parser("design", parents=[common], help="optimal single-cycle machine")
    design.add_argument("--n", type=int, required=True, help="number of levels")
    design.add_argument("--document", default=None, metavar="PATH", help="also write a machine document")
    design.set_defaults(handler=cmd_design)

    scan = commands.add_parser("scan", parents=[common], help="Z_v and N_v across a machine family")
    scan.add_argument("variant", choices=["single", "multi", "concat"])
    scan.add_argument("--range", default=None, metavar="A:B", help="n, n' or k range (inclusive)")
    scan.add_argument("--n", type=int, default=None)
    scan.add_argument("--k", type=int, default=None)
    scan.add_argument("--placement", choices=[p.value for p in Placement], default=None)
    scan.set_defaults(handler=cmd_scan)

    dynamics = commands.add_parser("dynamics", parents=[common], help="system temperature under load")
    dynamics.add_argument("--range", default="3:16", metavar="A:B", help="cycle lengths (inclusive)")
    dynamics.add_argument("--tau-beta", type=_positive_timescale, default=config.DEFAULT_TAU_BETA)
    dynamics.add_argument("--tau-s", type=_positive_timescale, nargs="+", default=[config.DEFAULT_TAU_S])
    dynamics.add_argument("--tau-swap", type=_positive_timescale, default=config.DEFAULT_TAU_SWAP)
    dynamics.add_argument("--beta-env", type=float, default=None, help="system environment (default: --bc)")
    dynamics.add_argument("--optimal", action="store_true", help="report the best cycle length per tau_s")
    dynamics.set_defaults(handler=cmd_dynamics)

    evaluate = commands.add_parser("eval", parents=[common], help="evaluate a machine document")
    evaluate.add_argument("document", help="path to a JSON machine document")
    evaluate.add_argument("--placement", choices=[p.value for p in Placement], default=None)
    evaluate.set_defaults(handler=cmd_eval)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else getattr(logging, config.LOG_LEVEL, logging.INFO)
    setup_logging(level)

    is_valid, error_msg = config.validate_config()
    if not is_valid:
        logger.error(f"Configuration error: {error_msg}")
        print(f"error: {error_msg}", file=sys.stderr)
        return 1

    try:
        table = args.handler(args)
        write_table(table, args.out, args.json, sys.stdout)
    except MachineError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error in {args.command}: {str(e)}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
