"""Real-valued FLOP counts per detection."""

from __future__ import annotations


def dlmp_flops_per_iter(N: int, P: int, nt: int, M: int, n: int) -> int:
    """Per-iteration FLOPs of double-layer message passing.

    Terms in order: interference mean, interference variance, Gaussian
    likelihoods, extrinsic variable PMFs, indicator posteriors and the
    constraint-node convolutions.
    """
    e = P * nt * N
    mean = e * (4 * M + 10) - 2 * N
    var = e * (9 * M + 15)
    lik = 17 * e * (M + 1)
    var_node = e * (M + 1)
    indicator = e * (M + 1) - 2 * N
    # (n-1)(n-2) is even, so this stays integral
    constraint = (3 * (n - 1) * (n - 2) // 2 - 3) * N
    return mean + var + lik + var_node + indicator + constraint


def mp_flops_per_iter(N: int, P: int, nt: int, M: int) -> int:
    return N * P * nt * (31 * M + 43) - 2 * N


def mmse_flops(N: int) -> int:
    return 16 * N**3 + 13 * N**2


def ml_flops(N: int, codebook_size: int) -> int:
    # our own count: one complex N x N mat-vec plus a squared norm per candidate
    return codebook_size * (8 * N * N + 4 * N)


def flop_estimate(which: str, N: int, P: int = 0, nt: int = 1, M: int = 2, n: int = 1,
                  n_iter_ave: float = 1, codebook_size: int = 0) -> int:
    which = which.lower()
    if which == "dlmp":
        return int(round(dlmp_flops_per_iter(N, P, nt, M, n) * n_iter_ave))
    if which == "mp":
        return int(round(mp_flops_per_iter(N, P, nt, M) * n_iter_ave))
    if which == "mmse":
        return mmse_flops(N)
    if which == "ml":
        return ml_flops(N, codebook_size)
    raise ValueError(f"unknown detector {which!r}")
