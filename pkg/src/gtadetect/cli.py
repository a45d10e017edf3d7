"""Command-line driver for SER sweeps.

SNR convention: ``10 log10(n e / sigma2)`` where ``n`` counts REAL
unknowns (twice the transmit antennas unless ``--real``), ``e`` is the mean
PAM energy per real dimension and ``sigma2`` the variance of each real noise
component.  Curves on the complex-count convention sit 10 log10(2) dB lower.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import InvalidArgumentError
from .harness import SimConfig, dump_trees, emit_report, run_sweep, snr_grid

log = logging.getLogger("gtadetect")


def build_parser():
    p = argparse.ArgumentParser(
        prog="gta-sim",
        description="Monte Carlo symbol-error-rate sweep for MIMO detectors.",
    )
    p.add_argument("--tx", type=int, required=True, help="transmit antennas (real unknowns with --real)")
    p.add_argument("--rx", type=int, required=True, help="receive antennas (real observations with --real)")
    p.add_argument("--qam", type=int, default=16, help="square QAM order; with --real the per-dimension PAM of it")
    grid = p.add_argument_group("SNR grid (dB)")
    grid.add_argument("--snr-start", type=float)
    grid.add_argument("--snr-stop", type=float)
    grid.add_argument("--snr-step", type=float, default=2.0)
    grid.add_argument("--snr-list", help="comma separated SNR values; overrides start/stop/step")
    p.add_argument("--trials", type=int, default=10_000, help="channel realizations per SNR point")
    p.add_argument(
        "--detectors",
        default="zf,mmse,sic,gta",
        help="comma list from zf,mmse,sic,gta,gta:line,gta:zf,gta:max,ml,loopybp",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--real", action="store_true", help="simulate a real-valued channel directly")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--dump-tree", metavar="PATH", help="write the GTA tree of trial 0 per SNR point")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--ml-budget", type=int, default=2**24, help="max candidates for exhaustive ML")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args):
    if args.snr_list:
        grid = tuple(float(s) for s in args.snr_list.split(",") if s.strip())
    elif args.snr_start is not None and args.snr_stop is not None:
        grid = snr_grid(args.snr_start, args.snr_stop, args.snr_step)
    else:
        raise InvalidArgumentError("give --snr-list or both --snr-start and --snr-stop")
    return SimConfig(
        tx_antennas=args.tx,
        rx_antennas=args.rx,
        qam_order=args.qam,
        snr_grid_db=grid,
        trials_per_point=args.trials,
        detectors=tuple(d for d in args.detectors.split(",") if d.strip()),
        master_seed=args.seed,
        real_mode=args.real,
        output_format=args.format,
        ml_budget=args.ml_budget,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except (InvalidArgumentError, ValueError) as exc:
        print(f"gta-sim: configuration error: {exc}", file=sys.stderr)
        return 2
    if args.dump_tree:
        try:
            with open(args.dump_tree, "w") as fh:
                fh.write(dump_trees(cfg))
        except OSError as exc:
            print(f"gta-sim: cannot write {args.dump_tree}: {exc.strerror}", file=sys.stderr)
            return 1
    log.info("running %d SNR points x %d trials", len(cfg.snr_grid_db), cfg.trials_per_point)
    report = run_sweep(cfg, workers=args.workers)
    data = emit_report(report, cfg.output_format)
    if args.out:
        try:
            with open(args.out, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            print(f"gta-sim: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return 1
    else:
        sys.stdout.buffer.write(data)
    return 0


if __name__ == "__main__":
    sys.exit(main())
