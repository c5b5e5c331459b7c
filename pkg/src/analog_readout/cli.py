"""Command line interface: ``gen-task``, ``run`` and ``sweep``."""

from __future__ import annotations

import argparse
import contextlib
import sys

from .channel import make_dataset
from .errors import ReadoutError
from .harness import (
    MODES,
    SEEDS_ENV,
    SWEEP_AXES,
    evaluate_seed,
    load_config,
    run_sweep,
    write_rows,
)

# (flag, config key, help)
_OVERRIDES = [
    ("--n-nodes", "n_nodes", "number of virtual nodes"),
    ("--theta", "theta", "node duration in seconds"),
    ("--tau-ratio", "tau_ratio", "integrator time constant over theta*N"),
    ("--snr-db", "snr_db", "channel SNR in dB"),
    ("--mode", "readout_mode", "readout mode: " + ", ".join(MODES)),
    ("--lambda", "lam", "ridge regularization"),
    ("--seq-length", "seq_length", "symbols per dataset"),
    ("--train-fraction", "train_fraction", "fraction of symbols used for training"),
    ("--washout", "washout", "steps dropped at the start of each segment"),
    ("--tuning", "tuning", "grid-search alpha, beta, phase (on/off)"),
    ("--alpha", "alpha", "input gain"),
    ("--beta", "beta", "feedback gain"),
    ("--phase", "phase", "sine operating point in radians"),
    ("--quantization-bits", "quantization_bits", "modulator voltage resolution"),
    ("--noise-std", "noise_std", "photodiode noise standard deviation"),
    ("--bandwidth-hz", "bandwidth_hz", "photodiode bandwidth"),
    ("--workers", "workers", "worker processes"),
]


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="file of 'key = value' lines")
    parser.add_argument(
        "--seed", action="append", dest="seeds", metavar="SEED",
        help=f"seed to run (repeatable; default from ${SEEDS_ENV} or 0..9)",
    )
    for flag, key, text in _OVERRIDES:
        parser.add_argument(flag, dest=f"set_{key}", metavar="VALUE", help=text)
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="set any config key",
    )
    parser.add_argument("-o", "--output", help="CSV destination (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="analog-readout",
        description="Simulate a time-multiplexed reservoir with an analog readout.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-task", help="write a channel equalization dataset as CSV")
    gen.add_argument("--length", type=int, default=9000)
    gen.add_argument("--snr-db", type=float, default=28.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", help="CSV destination (default: stdout)")

    run = sub.add_parser("run", help="run one experiment, one CSV row per seed")
    _add_config_options(run)

    sweep = sub.add_parser("sweep", help="sweep one parameter, one CSV row per value and mode")
    _add_config_options(sweep)
    sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep.add_argument("--values", required=True, nargs="+")
    sweep.add_argument("--modes", nargs="+", choices=MODES)
    return parser


def _config_from_args(args):
    overrides = []
    for _, key, _ in _OVERRIDES:
        value = getattr(args, f"set_{key}")
        if value is not None:
            overrides.append((key, value))
    for item in args.set:
        if "=" not in item:
            raise ReadoutError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides.append((key, value))
    if args.seeds:
        overrides.append(("seeds", ",".join(args.seeds)))
    if args.config:
        with open(args.config) as fh:
            return load_config(fh, overrides)
    return load_config(None, overrides)


@contextlib.contextmanager
def _open_output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _cmd_gen_task(args) -> None:
    ds = make_dataset(args.length, args.snr_db, args.seed)
    with _open_output(args.output) as out:
        ds.write_csv(out)


def _cmd_run(args) -> None:
    config = _config_from_args(args)
    mode = config.readout_mode
    rows = []
    for seed in config.seeds:
        outcome = evaluate_seed(config, seed, (mode,))
        alpha, beta, phase = outcome.params
        rows.append({"seed": seed, "mode": mode, "ser": outcome.ser[mode],
                     "alpha": alpha, "beta": beta, "phase": phase})
    with _open_output(args.output) as out:
        write_rows(rows, out, ("seed", "mode", "ser", "alpha", "beta", "phase"))
    sers = [r["ser"] for r in rows]
    mean = sum(sers) / len(sers)
    std = (sum((s - mean) ** 2 for s in sers) / len(sers)) ** 0.5
    print(f"mean_ser={mean:.6g} std_ser={std:.6g} n_seeds={len(sers)} "
          f"implied_capacitance_nF={config.capacitance * 1e9:.4g}", file=sys.stderr)


def _cmd_sweep(args) -> None:
    config = _config_from_args(args)
    rows = run_sweep(config, args.axis, args.values, args.modes)
    with _open_output(args.output) as out:
        write_rows(rows, out)


_COMMANDS = {"gen-task": _cmd_gen_task, "run": _cmd_run, "sweep": _cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (ReadoutError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
