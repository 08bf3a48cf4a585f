"""Command-line surface for the optimal-wait toolchain."""
import argparse
import logging
import math
import sys
from typing import IO, List, Optional, Sequence

from . import __version__
from .commands import OptimalWaitCommands
from .config.optwait_config import OptimalWaitConfig
from .decorators import EXIT_DATA, EXIT_USAGE
from .errors import ConfigError, UsageError
from .markov_cost import READY

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting, so exit codes stay ours."""

    def error(self, message: str) -> None:
        raise UsageError(message)


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "text"), default="csv", help="result format on stdout")
    common.add_argument("--verbose", action="store_true", help="log progress at INFO level")

    transition = argparse.ArgumentParser(add_help=False)
    transition.add_argument("--from-state", default="Unhealthy")
    transition.add_argument("--to-state", default=READY)

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--family", required=True, help="exponential, weibull, lomax or loglogistic")
    params.add_argument("--shape", type=float)
    params.add_argument("--scale", type=float, help="scale (the rate for the exponential)")

    parser = _Parser(prog="optwait", description="Optimal intervention thresholds from state-transition logs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    fit = sub.add_parser("fit", parents=[common, transition], help="fit a censored distribution to a log")
    fit.add_argument("--family", required=True)
    fit.add_argument("--log", required=True)
    fit.add_argument("--cluster-feature", type=int, help="1-based feature column holding the cluster id")
    fit.add_argument("--c-int", type=float, help="intervention cost, for model-file thresholds")
    fit.add_argument("--baseline-tau", type=float)
    fit.add_argument("--model-file", help="write per-cluster model file here")

    optimize = sub.add_parser("optimize", parents=[common, transition, params], help="optimal waiting threshold")
    optimize.add_argument("--log", help="fit the family to this log instead of using --shape/--scale")
    optimize.add_argument("--c-int", type=float, required=True)
    optimize.add_argument("--baseline-tau", type=float)

    cost = sub.add_parser(
        "cost", parents=[common], help="intervention cost from a log",
        description="Prints the hitting time of --from-state, a blank line, then the estimated transition "
                    "model as one row per nonzero entry: from_state, to_state, probability (P) and "
                    "mean_time (T). Entries missing from the rows are zero.")
    cost.add_argument("--log", required=True)
    cost.add_argument("--from-state", default="PoweringOn", help="state whose hitting time is the cost")
    cost.add_argument("--states", help="comma-separated state list (default: as seen in the log)")
    cost.add_argument("--absorbing", default=READY)

    regress = sub.add_parser("regress", parents=[common, transition], help="feature regression of parameters")
    regress.add_argument("--family", required=True)
    regress.add_argument("--log", required=True)
    regress.add_argument("--c-int", type=float, required=True)
    regress.add_argument("--baseline-tau", type=float)
    regress.add_argument("--cluster-feature", type=int)
    regress.add_argument("--upper-bounds", type=float, nargs=2, metavar=("U_SHAPE", "U_SCALE"))
    regress.add_argument("--model-file")

    joint = sub.add_parser("joint", parents=[common], help="jointly optimal coupled thresholds")
    joint.add_argument("--scenario", required=True)
    joint.add_argument("--init", type=float, nargs=2, metavar=("TAU1", "TAU2"))
    joint.add_argument("--dump-config", action="store_true", help="print the canonical scenario and exit")

    simulate = sub.add_parser("simulate", parents=[common], help="synthetic transition log")
    simulate.add_argument("--scenario", required=True)
    simulate.add_argument("--n-episodes", type=int, required=True)
    simulate.add_argument("--seed", type=int, required=True)
    simulate.add_argument("--tau1", type=float, help="Unhealthy threshold (default: scenario baseline_tau)")
    simulate.add_argument("--tau2", type=float, default=math.inf)
    simulate.add_argument("--output")

    abtest = sub.add_parser("abtest", parents=[common], help="randomized threshold experiment")
    abtest.add_argument("--scenario", required=True)
    abtest.add_argument("--n-episodes", type=int, required=True)
    abtest.add_argument("--seed", type=int, required=True)
    abtest.add_argument("--tau-treatment", type=float, help="default: optimal threshold for the scenario")
    abtest.add_argument("--tau-control", type=float, help="default: scenario baseline_tau")
    abtest.add_argument("--tau2", type=float, default=math.inf)
    abtest.add_argument("--assignment-prob", type=float)

    curve = sub.add_parser("curve", parents=[common], help="plot data for downtime or cost curves")
    curve.add_argument("--kind", choices=("downtime", "cost"), default="downtime")
    curve.add_argument("--family")
    curve.add_argument("--shape", type=float)
    curve.add_argument("--scale", type=float)
    curve.add_argument("--scenario")
    curve.add_argument("--c-int", type=float, required=True)
    curve.add_argument("--tau-max", type=float, required=True)
    curve.add_argument("--points", type=int, default=101)
    curve.add_argument("--p-values", type=_float_list, default=[0.0, 0.25, 0.5])
    return parser


class OptimalWaitCLI:
    """
    Command-line application.

    Manages configuration, argument parsing and dispatch to the commands.
    """

    def __init__(self, config: OptimalWaitConfig, out: Optional[IO[str]] = None) -> None:
        self.config = config
        self.parser = build_parser()
        self.commands = OptimalWaitCommands(config, out)

    def run(self, argv: Sequence[str]) -> int:
        """
        Parse ``argv`` and run one subcommand.

        Returns:
            Exit code: 0 on success, 1 on usage error, 2 on data error
        """
        try:
            args = self.parser.parse_args(list(argv))
        except UsageError as e:
            print(self.parser.format_usage().rstrip(), file=sys.stderr)
            print(f"usage error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except SystemExit as e:
            # --help and --version
            return int(e.code or 0)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        if args.command == "curve" and args.kind == "downtime" and args.family is None:
            print("usage error: curve --kind downtime needs --family", file=sys.stderr)
            return EXIT_USAGE
        if args.command == "optimize" and not args.log and args.scale is None:
            print("usage error: optimize needs --scale (and --shape) or --log", file=sys.stderr)
            return EXIT_USAGE
        logger.info(f"Running '{args.command}'")
        return getattr(self.commands, args.command)(args)


def run_cli(argv: Sequence[str], out: Optional[IO[str]] = None, config: Optional[OptimalWaitConfig] = None) -> int:
    """Entry point used by the script and the tests."""
    if config is None:
        try:
            config = OptimalWaitConfig.load_from_env()
        except ConfigError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_DATA
    return OptimalWaitCLI(config, out).run(argv)
