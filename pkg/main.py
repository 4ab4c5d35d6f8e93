"""
Main entry: command line -> ExperimentConfig -> command handler -> artifacts.

    python main.py tiling gen --symbol 5,5 --radius 6 --out out
    python main.py sweep --config default --seeds 200
    python main.py boundary --p auto
    python main.py render --graph out/graph.json --analysis out/boundary.json
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from cli.commands import cmd_boundary, cmd_render, cmd_sweep, cmd_tiling_gen
from cli.config_loader import apply_overrides, load_config
from core import __version__, settings
from core.errors import EXIT_INVALID_INPUT, EXIT_IO, EXIT_OK, LabError
from core.tiling import SchlafliSymbol

logger = logging.getLogger("hyperperc")


def _symbol(text: str) -> tuple[int, int]:
    symbol = SchlafliSymbol.parse(text)
    return symbol.p, symbol.q


def _p_values(values: list[str] | None):
    if not values:
        return None
    if values == ["auto"]:
        return "auto"
    try:
        return [float(v) for v in values]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--p takes numbers or 'auto', got {values}") from None


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file or name of a file in configs/")
    common.add_argument("--symbol", help="Schläfli symbol P,Q")
    common.add_argument("--radius", type=int, nargs="+", help="patch radius (several for sweep/boundary)")
    common.add_argument("--pmin", type=float)
    common.add_argument("--pmax", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--seeds", type=int, help="number of seeds")
    common.add_argument("--seed-base", type=int, help="first seed")
    common.add_argument("--tau", type=int, help="giant-candidate threshold on outermost-layer vertices")
    common.add_argument("--sigma", type=int, help="cluster size floor for limit directions and halfplanes")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int)
    common.add_argument("--dual", action="store_true", default=None, help="run on the dual patch")
    common.add_argument("--log-level", default=None)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="hyperperc", description="Percolation on hyperbolic {p,q} tilings")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    tiling = commands.add_parser("tiling", help="tiling patches")
    tiling_commands = tiling.add_subparsers(dest="action", required=True)
    tiling_commands.add_parser("gen", parents=[common], help="generate a patch and write graph.json")

    commands.add_parser("sweep", parents=[common], help="coupled percolation sweeps and threshold estimates")

    boundary = commands.add_parser("boundary", parents=[common], help="end chains and ideal-boundary statistics")
    boundary.add_argument("--p", nargs="+", help="p values, or 'auto' for the middle of the estimated phase")
    boundary.add_argument("--chain-radii", type=int, nargs="+")

    render = commands.add_parser("render", parents=[common], help="draw a graph file as SVG")
    render.add_argument("--graph", required=True, type=Path)
    render.add_argument("--analysis", type=Path, help="boundary.json whose terminal arcs are marked")
    render.add_argument("--p", type=float, help="draw a sample at this p")
    render.add_argument("--seed", type=int, default=None)
    return parser


def config_from_args(args: argparse.Namespace):
    config = load_config(args.config)
    overrides = {
        "symbol": _symbol(args.symbol) if args.symbol else None,
        "radii": args.radius,
        "grid.pmin": args.pmin,
        "grid.pmax": args.pmax,
        "grid.steps": args.steps,
        "n_seeds": args.seeds,
        "seed_base": args.seed_base,
        "tau": args.tau,
        "sigma": args.sigma,
        "out": args.out,
        "workers": args.workers,
        "dual": args.dual,
    }
    if args.seeds is not None or args.seed_base is not None:
        # a seed count or base on the command line replaces an explicit list from the file
        config = config.model_copy(update={"seeds": None})
    if args.command == "boundary":
        overrides["p_values"] = _p_values(args.p)
        overrides["chain_radii"] = args.chain_radii
    if args.command == "render":
        overrides["render.p"] = args.p
        overrides["render.seed"] = args.seed
    return apply_overrides(config, overrides)


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    if args.command == "tiling":
        stats = cmd_tiling_gen(config)
        print(
            f"{{{stats['symbol'][0]},{stats['symbol'][1]}}} R={stats['radius']} vertices={stats['n_vertices']} "
            f"edges={stats['n_edges']} faces={stats['n_faces']} layers={stats['layer_counts']}"
        )
    elif args.command == "sweep":
        estimates = cmd_sweep(config)
        print(json.dumps({k: estimates[k] for k in ("p_c", "p_u", "errors")}, indent=2))
    elif args.command == "boundary":
        aggregate = cmd_boundary(config)
        print(json.dumps((aggregate["one_point"] or {}).get("per_p", {}), indent=2))
    elif args.command == "render":
        print(cmd_render(config, args.graph, args.analysis))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        level = args.log_level or settings.log_level()
        logging.basicConfig(level=level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
        return run(args)
    except LabError as exc:
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"[{type(exc).__name__}] {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except OSError as exc:
        print(f"[IOError] {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
