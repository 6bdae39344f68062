"""DLMP, MP and MMSE on the N=64 QPSK setup with four transmit antennas."""

import argparse
import sys

from afdm_im.harness import ExperimentConfig, emit_results, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snr", type=float, nargs="+", default=[6, 8, 10, 12, 14])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--min-errors", type=int, default=500)
    ap.add_argument("--doppler", choices=["integer", "fractional"], default="integer")
    ap.add_argument("--k-alpha", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = ExperimentConfig(
        scheme="I", n=4, groups=16, m_active=1, mod_order=4, nt=4, paths=3, lmax=0, alphamax=1,
        doppler=args.doppler, k_alpha=args.k_alpha, snr_db=tuple(args.snr), trials=args.trials,
        min_errors=args.min_errors, detectors=("dlmp", "mp", "mmse"), seed=args.seed,
    )
    sys.stdout.write(emit_results(run_experiment(cfg)))


if __name__ == "__main__":
    main()
