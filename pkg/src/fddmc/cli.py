"""Command-line entry point: ``fddmc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__, detection, harness, spectral
from .params import ConfigError, SystemConfig, derive_all, read_config


def _load(args) -> SystemConfig:
    return read_config(args.config) if args.config else SystemConfig()


def _emit(text: str, args) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args) -> int:
    path = args.path or args.config
    cfg = read_config(path) if path else SystemConfig()
    derived = derive_all(cfg)
    text = f"# config_fingerprint: {cfg.fingerprint()}\n" + derived.to_text()
    if derived.A_Gr_assumed:
        text += "# A_Gr not given; using l_gr**2\n"
    _emit(text, args)
    return 0


def cmd_psd(args) -> int:
    cfg = _load(args)
    derived = derive_all(cfg)
    model = spectral.PsdModel.from_config(cfg, derived)
    f_min = args.fmin if args.fmin is not None else 1.0 / (cfg.N * cfg.dt)
    f_max = args.fmax if args.fmax is not None else 1.0 / (2.0 * cfg.dt)
    if not 0 < f_min < f_max:
        raise ValueError("need 0 < fmin < fmax")
    f = np.geomspace(f_min, f_max, args.points)
    S_b = spectral.binding_noise_psd(f, args.cm, args.ci, model)
    S_f = spectral.one_over_f_psd(f, cfg.S_1Hz, cfg.beta)
    lines = [f"# config_fingerprint: {cfg.fingerprint()}", "f,S_b,S_f,S_total"]
    lines += [f"{a:.17e},{b:.17e},{c:.17e},{b + c:.17e}" for a, b, c in zip(f, S_b, S_f)]
    _emit("\n".join(lines) + "\n", args)
    return 0


def cmd_analytic(args) -> int:
    cfg = _load(args)
    derived = derive_all(cfg)
    th = harness.compute_thresholds(cfg, derived)
    rows = [
        ("gamma_td", th.tdd.value),
        ("gamma_fd", th.fdd.value),
        ("tdd_bep", detection.tdd_bep(cfg, derived)),
        ("fdd_bep", detection.fdd_bep(cfg, derived)),
    ]
    lines = [f"# config_fingerprint: {cfg.fingerprint()}", "quantity,value"]
    lines += [f"{k},{v:.17e}" for k, v in rows]
    _emit("\n".join(lines) + "\n", args)
    return 0


def _write_or_print(obj, args) -> None:
    if args.out:
        harness.write_report(obj, args.out)
    else:
        sys.stdout.write(harness.format_report(obj))


def cmd_simulate(args) -> int:
    cfg = _load(args)
    report = harness.monte_carlo_bep(cfg, args.trials, args.seed, args.threads)
    _write_or_print(report, args)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    result = harness.sweep(args.param, values, cfg, args.trials, args.seed, args.threads)
    _write_or_print(result, args)
    return 0 if all(p.report is not None for p in result.points) else 3


def _global_options(parser, suppress: bool) -> None:
    # Subcommands accept the global flags too; SUPPRESS keeps their absence
    # from overwriting a value given before the subcommand.
    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--config", default=d(None), help="configuration file (key = value lines)")
    parser.add_argument("--out", default=d(None), help="output file (default: stdout)")
    parser.add_argument(
        "--threads", type=int, default=d(1), help="worker processes, 0 = all cores"
    )
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)

    parser = argparse.ArgumentParser(
        prog="fddmc",
        description="Interference-aware detection for bioFET molecular receivers.",
    )
    _global_options(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="parse a config and print derived values")
    p.add_argument("path", nargs="?", help="configuration file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("psd", parents=[common], help="tabulate the model noise spectra")
    p.add_argument("--cm", type=float, required=True, help="information ligand concentration (1/m^3)")
    p.add_argument("--ci", type=float, required=True, help="interferer concentration (1/m^3)")
    p.add_argument("--fmin", type=float)
    p.add_argument("--fmax", type=float)
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("analytic", parents=[common], help="thresholds and closed-form BEPs")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo BEP for both detectors")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="Monte Carlo BEP across one parameter")
    p.add_argument("--param", required=True, choices=harness.SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
