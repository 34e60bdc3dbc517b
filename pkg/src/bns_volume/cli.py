"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure
(including an estimate that does not exist on the sample).
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import asymptotics
from .data import DEFAULT_VOLUME_UNIT, DataError, load_csv
from .density import CumulantDomainError, CumulantEvaluator, DensityFailure, density_x
from .estimate import estimate
from .model import REFERENCE_PARAMS, TRADING_DAYS, GridConstants, LawKind, ModelParams, StationaryLaw
from .simulate import PathSample, RngStream, simulate_gamma_ou, simulate_ig_ou
from .study import AnalysisOptions, McStudyConfig, analyze, mc_study

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("bns_volume")
_STDOUT = Path("/dev/stdout")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common_flags() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--config", type=Path, help="flat key = value file; keys are long flag names")
    p.add_argument("--delta", type=float, help="observation spacing in years (default 1 / trading days)")
    p.add_argument("--trading-days", type=float, default=TRADING_DAYS)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, help="output file or directory (default: stdout where possible)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _theta_flags() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    for name, default in REFERENCE_PARAMS.as_dict().items():
        p.add_argument(f"--{name}", dest="lam" if name == "lambda" else name, type=float, default=default)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bns-volume", description="Gamma-OU volume/return model: simulation, "
                     "estimation, asymptotics, density and diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common, theta = _common_flags(), _theta_flags()

    p = sub.add_parser("simulate", parents=[common, theta], help="simulate a path and write it as CSV")
    p.add_argument("--n", type=int, default=2500)
    p.add_argument("--law", choices=("gamma", "ig"), default="gamma",
                   help="'ig' uses the inverse Gaussian law with the same stationary mean and variance")
    p.add_argument("--mesh", type=int, default=16, help="sub-steps per interval for the IG law")
    p.add_argument("--latent", action="store_true", help="also write z, u, y, s")

    p = sub.add_parser("estimate", parents=[common], help="estimate the parameters from a path CSV")
    p.add_argument("input", type=Path)

    p = sub.add_parser("mc-study", parents=[common, theta], help="Monte Carlo replication study")
    p.add_argument("--n", type=int, default=2500)
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--residual-point", choices=("left", "right"), default="left")

    p = sub.add_parser("asymptotics", parents=[common, theta], help="theoretical sandwich covariance")
    p.add_argument("--n-outer", type=int, default=2000)
    p.add_argument("--n-inner", type=int, default=2000)
    p.add_argument("--n", type=int, help="also report standard errors for this sample size")

    p = sub.add_parser("density", parents=[common, theta], help="return density on an x grid")
    p.add_argument("--x-min", type=float, default=-0.08)
    p.add_argument("--x-max", type=float, default=0.08)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("analyze", parents=[common], help="fit and diagnose a date,close,volume CSV")
    p.add_argument("input", type=Path)
    p.add_argument("--volume-unit", type=float, default=DEFAULT_VOLUME_UNIT)
    p.add_argument("--lb-lags", type=int, default=35)
    p.add_argument("--acf-lags", type=int, default=50)
    p.add_argument("--density-points", type=int, default=201)
    p.add_argument("--residual-point", choices=("left", "right"), default="left")
    return parser


def _config_tokens(path: Path, subparser: argparse.ArgumentParser) -> list[str]:
    """Turn a flat config file into flag tokens understood by ``subparser``."""
    if not path.is_file():
        raise DataError(f"{path}: no such config file")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string("[config]\n" + path.read_text())
    except configparser.Error as exc:
        raise DataError(f"{path}: {exc}") from None
    known = subparser._option_string_actions
    tokens = []
    for key, value in cp["config"].items():
        flag = "--" + key.strip().replace("_", "-")
        if flag == "--config":
            continue
        if flag not in known:
            raise UsageError(f"{path}: unknown key {key!r} for '{subparser.prog}'")
        action = known[flag]
        value = value.strip().strip('"').strip("'")
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(flag)
        else:
            tokens += [flag, value]
    return tokens


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        at = argv.index(args.command)
        args = parser.parse_args(argv[:at + 1] + _config_tokens(args.config, sub) + argv[at + 1:])
    if args.delta is None:
        if not args.trading_days > 0:
            raise UsageError("--trading-days must be positive")
        args.delta = 1.0 / args.trading_days
    if not args.delta > 0:
        raise UsageError("--delta must be positive")
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    return args


def _theta(args) -> ModelParams:
    try:
        return ModelParams(args.nu, args.alpha, args.lam, args.mu, args.beta, args.sigma, args.rho)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit_json(obj, out: Path | None) -> None:
    text = json.dumps(obj, indent=2)
    if out is None:
        print(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")


def _cmd_simulate(args) -> int:
    theta = _theta(args)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    rng = RngStream(args.seed)
    if args.law == "gamma":
        sample = simulate_gamma_ou(theta, args.n, args.delta, rng, with_latent=args.latent)
    else:
        law = StationaryLaw(LawKind.IG_OU, theta.zeta, theta.eta)
        sample = simulate_ig_ou(law, theta.lam, theta.mu, theta.beta, theta.sigma, theta.rho, args.n,
                                args.delta, rng, mesh=args.mesh, with_latent=args.latent)
    sample.to_csv(args.out if args.out is not None else _STDOUT)
    return EXIT_OK


def _cmd_estimate(args) -> int:
    sample = PathSample.from_csv(args.input, args.delta)
    report = estimate(sample)
    _emit_json(report.as_dict(), args.out)
    return EXIT_OK if report.valid else EXIT_NUMERIC


def _cmd_mc_study(args) -> int:
    config = McStudyConfig(_theta(args), args.n, args.m, args.seed, args.delta, args.residual_point)
    report = mc_study(config, threads=args.threads)
    if args.out is None:
        _emit_json(report.as_dict(), None)
    else:
        report.write(args.out)
    return EXIT_OK


def _cmd_asymptotics(args) -> int:
    theta = _theta(args)
    grid = GridConstants.for_params(theta.lam, args.delta)
    report = asymptotics.theoretical_sandwich(theta, grid, args.n_outer, args.n_inner, RngStream(args.seed))
    report.n = args.n
    _emit_json(report.as_dict(), args.out)
    return EXIT_OK


def _cmd_density(args) -> int:
    theta = _theta(args)
    if args.points < 2 or not args.x_max > args.x_min:
        raise UsageError("need --points >= 2 and --x-max > --x-min")
    grid = GridConstants.for_params(theta.lam, args.delta)
    curve = density_x(np.linspace(args.x_min, args.x_max, args.points),
                      CumulantEvaluator.from_params(theta, grid), args.tol)
    curve.to_csv(args.out if args.out is not None else _STDOUT)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    dataset = load_csv(args.input, args.volume_unit)
    opts = AnalysisOptions(lb_lags=args.lb_lags, acf_lags=args.acf_lags, density_points=args.density_points,
                           residual_point=args.residual_point)
    report = analyze(dataset, args.delta, opts, out_dir=args.out)
    if args.out is None:
        _emit_json(report, None)
    return EXIT_OK if report["valid"] else EXIT_NUMERIC


COMMANDS = {"simulate": _cmd_simulate, "estimate": _cmd_estimate, "mc-study": _cmd_mc_study,
            "asymptotics": _cmd_asymptotics, "density": _cmd_density, "analyze": _cmd_analyze}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(format="%(levelname)s: %(message)s")
    try:
        args = parse_args(argv)
        log.setLevel(logging.INFO if args.verbose else logging.WARNING)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CumulantDomainError, DensityFailure, asymptotics.SingularJacobianError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # malformed path CSVs surface as plain ValueError from the readers
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
