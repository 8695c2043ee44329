"""Command line front end.

Subcommands map to experiment modes:

  convergence        BER vs symbol index (single scenario point)
  sweep-snr          BER (and SINR) vs SNR
  sweep-users        BER vs user count
  sweep-rank         BER/SINR vs transform rank
  sweep-sir          BER vs signal-to-jammer ratio (tone interferer on)
  channel-mse        blind channel estimator MSE vs symbol index
  certify-convexity  report the E1*v^2 convexity condition for given E1, v

Exit codes: 0 success, 2 configuration/usage error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .signal_model import ConfigError

_EXPERIMENT_COMMANDS = {
    "convergence": ("convergence", "symbols"),
    "sweep-snr": ("sweep", "snr_db"),
    "sweep-users": ("sweep", "users"),
    "sweep-rank": ("sweep", "rank"),
    "sweep-sir": ("sweep", "sir_db"),
    "channel-mse": ("channel_mse", "symbols"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uwbjio",
        description="Blind reduced-rank DS-UWB receiver simulations",
    )
    sub = parser.add_subparsers(dest="command")
    for name in _EXPERIMENT_COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="experiment config file (key=value text)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--trials", type=int, help="override the trial count")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--algo", help="comma-separated algorithm names to keep")
    cc = sub.add_parser("certify-convexity", help="check the E1*v^2 condition")
    cc.add_argument("--e1", type=float, required=True, help="desired-user energy")
    cc.add_argument("--v", type=float, required=True, help="constraint constant")
    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors
        return int(exc.code or 0)

    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2

    if args.command == "certify-convexity":
        cond = args.e1 * args.v * args.v
        if cond > 1.0:
            print(f"E1*v^2 = {cond!r} > 1: cost Hessian positive definite "
                  f"(eigenvalue floor {cond - 1.0!r})")
        else:
            print(f"E1*v^2 = {cond!r} <= 1: convexity not certified "
                  f"(non-convex regime possible)")
        return 0

    if not args.config:
        print("error: --config is required", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2

    mode, axis = _EXPERIMENT_COMMANDS[args.command]
    try:
        from .configio import parse_config
        from .harness import run_experiment

        cfg = parse_config(args.config, mode, axis)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, master_seed=args.seed)
        if args.trials is not None:
            cfg = dataclasses.replace(cfg, trials=args.trials)
        if args.algo:
            keep = {a.strip() for a in args.algo.split(",") if a.strip()}
            chosen = tuple(s for s in cfg.algorithms if s.name in keep or s.kind in keep)
            if not chosen:
                raise ConfigError(f"--algo {args.algo!r} matches no configured algorithm")
            cfg = dataclasses.replace(cfg, algorithms=chosen)
        paths = run_experiment(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 -- CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
