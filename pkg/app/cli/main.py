"""
Command-line driver.

    list                               scenario table
    certify --scenario NAME ...        sweep CSV, exit 0 PASS / 2 FAIL
    profile --delta D [--out PATH]     bump profile CSV with its certificate
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from app.cli.commands import cmd_certify, cmd_list, cmd_profile
from app.core.config import settings
from app.core.containers import Container, settings_dict
from app.core.exceptions import GluingError
from app.core.logging import configure_logging
from app.schemas.run import AUTO, RunSpec

logger = logging.getLogger(__name__)

EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; 2 is reserved for a failed sweep."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ladder_or_auto(text: str):
    return AUTO if text.strip() == AUTO else _floats(text)


def _number_or_auto(text: str):
    if text.strip() == AUTO:
        return AUTO
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gluing", description=f"{settings.PROJECT_NAME} {settings.VERSION}")
    parser.add_argument(
        "--scenario-dir",
        action="append",
        default=[],
        help="Extra directory of *.cfg scenarios (repeatable)",
    )
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    commands.add_parser("list", help="List builtin and config scenarios")

    certify = commands.add_parser("certify", help="Run a gluing sweep and write the CSV table")
    source = certify.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", help="Scenario name")
    source.add_argument("--config", dest="config_path", help="Scenario config file")
    certify.add_argument("--functional", default="operator", help="Curvature functional")
    certify.add_argument("--kappa", type=float, default=None, help="Override the declared lower bound")
    certify.add_argument("--deltas", type=_floats, default=[0.4, 0.2, 0.1], help="Strictly decreasing delta ladder")
    certify.add_argument("--hs", type=_ladder_or_auto, default=AUTO, help="'auto' (delta/8) or smoothing radii")
    certify.add_argument("--c", dest="C", type=_number_or_auto, default=AUTO, help="'auto' or a fixed C >= 0")
    certify.add_argument("--out", dest="output", default=None, help="CSV path (stdout if omitted)")
    certify.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="Frame-search seed")
    certify.add_argument("--phi-slope", type=float, default=None, help="Mean-curvature perturbation slope (<= 0)")
    certify.add_argument("--phi-width", type=float, default=None, help="Perturbation width d0")
    certify.add_argument("--mode", dest="mollifier_mode", default="normal-only", help="normal-only or full")
    certify.add_argument("--timings", action="store_true", help="Fill the wall_ms column")

    profile = commands.add_parser("profile", help="Dump the bump profile for one delta")
    profile.add_argument("--delta", type=float, required=True)
    profile.add_argument("--out", dest="output", default=None)
    profile.add_argument("--points", type=int, default=2001)
    return parser


def build_container(scenario_dirs: Sequence[str] = (), **overrides) -> Container:
    values = settings_dict()
    values["scenario_dirs"] = list(values["scenario_dirs"]) + list(scenario_dirs)
    values.update(overrides)
    container = Container()
    container.config.from_dict(values)
    return container


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        logging.getLogger().setLevel(args.log_level.upper())

    try:
        if args.command == "list":
            print(cmd_list(build_container(args.scenario_dir)), end="")
            return 0
        if args.command == "profile":
            return cmd_profile(args.delta, args.output, build_container(args.scenario_dir), args.points)

        try:
            spec = RunSpec(
                scenario=args.scenario,
                config_path=args.config_path,
                functional=args.functional,
                kappa=args.kappa,
                deltas=args.deltas,
                hs=args.hs,
                C=args.C,
                output=args.output,
                seed=args.seed,
                phi_slope=args.phi_slope,
                phi_width=args.phi_width,
                mollifier_mode=args.mollifier_mode,
                timings=args.timings,
            )
        except ValidationError as exc:
            error = exc.errors()[0]
            logger.error("Invalid run: %s", error["msg"])
            return EXIT_USAGE
        container = build_container(args.scenario_dir, seed=spec.seed, mollifier_mode=spec.mollifier_mode)
        return cmd_certify(spec, container)
    except GluingError as exc:
        logger.error("%s", exc.message)
        return exc.exit_code


def run() -> None:
    """Console entry point."""
    load_dotenv()
    configure_logging(settings.LOG_LEVEL)
    sys.exit(main())
