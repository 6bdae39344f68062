"""Scheme I (BPSK) against Scheme II (QPSK, 8 subblocks) at 0.75 bit/s/Hz, DLMP."""

import argparse
import sys

from afdm_im.harness import ExperimentConfig, emit_results, run_experiment

SCHEMES = {
    "I": dict(scheme="I", groups=16, subblocks=1, mod_order=2),
    "II": dict(scheme="II", groups=2, subblocks=8, mod_order=4),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snr", type=float, nargs="+", default=[8, 10, 12, 14])
    ap.add_argument("--trials", type=int, default=3000)
    ap.add_argument("--min-errors", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name, kw in SCHEMES.items():
        cfg = ExperimentConfig(
            n=4, m_active=1, nt=4, paths=3, lmax=0, alphamax=1, snr_db=tuple(args.snr), trials=args.trials,
            min_errors=args.min_errors, detectors=("dlmp",), seed=args.seed, **kw,
        )
        print(f"# scheme {name}")
        sys.stdout.write(emit_results(run_experiment(cfg)))


if __name__ == "__main__":
    main()
