"""ML BER against the profile-averaged union bound, N=10, one group, BPSK."""

import argparse
import sys

from afdm_im.harness import ExperimentConfig, bound_records, emit_results, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nt", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--snr", type=float, nargs="+", default=[10, 14, 18, 22, 26])
    ap.add_argument("--min-errors", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for nt in args.nt:
        cfg = ExperimentConfig(
            scheme="I", n=10, groups=1, m_active=1, mod_order=2, nt=nt, paths=3, lmax=0, alphamax=1,
            snr_db=tuple(args.snr), trials=10**9, min_errors=args.min_errors, detectors=("ml",),
            seed=args.seed, chunk=20000,
        )
        print(f"# nt={nt}")
        sys.stdout.write(emit_results(run_experiment(cfg) + bound_records(cfg)))


if __name__ == "__main__":
    main()
