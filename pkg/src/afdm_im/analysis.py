"""Pairwise error probability, ABEP union bound and diversity order.

The bound conditions on the delay-Doppler profile (the unit-gain component
matrices) and averages over Rayleigh gains only.  With ``h`` of variance
``1/P`` per entry and the ``1/sqrt(nt)`` antenna scaling, the quadratic
form ``||(1/sqrt(nt)) (U_i - U_j) h||^2`` has eigen-weights
``kappa^2 / (nt P)``, which is where that divisor comes from.  The Gaussian
tail is replaced by the two-exponential approximation
``Q(x) ~ exp(-x^2/2)/12 + exp(-2x^2/3)/4``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import EffectiveChannel, effective_channel, sample_channel
from .codec import enumerate_codebook_arrays
from .core_types import AfdmParams, ChannelConfig, ImConfig, derive_bit_budget

BOUND_MAX_BITS = 16
RANK_RTOL = 1e-9


@dataclass(frozen=True)
class UpsilonMatrix:
    """Columns ``H_{e,l} x`` in (antenna, path) row-major order."""

    values: np.ndarray

    def __matmul__(self, h):
        return self.values @ h


@dataclass(frozen=True)
class PepTerms:
    kappa2: np.ndarray  # descending
    rank: int
    q1: float
    q2: float


@dataclass(frozen=True)
class PepSpectra:
    """Squared singular values of every unordered codeword-pair difference.

    ``kappa2`` is (pairs, nt*P); ``weights`` is the bit Hamming distance of
    each pair counted in both directions.
    """

    kappa2: np.ndarray
    weights: np.ndarray
    p: int
    nt: int
    P: int


def _components(eff) -> np.ndarray:
    return np.asarray(eff.components if hasattr(eff, "components") else eff)


def upsilon(x, eff: EffectiveChannel) -> UpsilonMatrix:
    comps = _components(eff)
    x = np.asarray(getattr(x, "values", x), dtype=complex)
    return UpsilonMatrix(np.einsum("knm,m->nk", comps, x))


def _kappa2(D: np.ndarray) -> np.ndarray:
    """Squared singular values, descending, over the trailing two axes."""
    s = np.linalg.svd(D, compute_uv=False)
    return s**2


def pep_from_spectrum(kappa2: np.ndarray, N0, scale: float = 1.0) -> np.ndarray:
    """Rayleigh-averaged PEP from squared singular values (..., K).

    The result has shape ``N0.shape + kappa2.shape[:-1]``.  ``scale``
    divides every ``kappa^2`` (``nt * P`` for the channel model here).
    """
    kappa2 = np.asarray(kappa2, dtype=float)
    N0 = np.asarray(N0, dtype=float)
    N0 = N0.reshape(N0.shape + (1,) * kappa2.ndim)
    k = kappa2 / scale
    t1 = np.prod(1.0 / (1.0 + k / (4.0 * N0)), axis=-1)
    t2 = np.prod(1.0 / (1.0 + k / (3.0 * N0)), axis=-1)
    return t1 / 12.0 + t2 / 4.0


def pep_terms(xi, xj, eff: EffectiveChannel, N0: float) -> PepTerms:
    D = upsilon(xi, eff).values - upsilon(xj, eff).values
    k2 = _kappa2(D)
    rank = int(np.count_nonzero(k2 > RANK_RTOL**2 * k2[0])) if k2[0] > 0 else 0
    return PepTerms(k2, rank, 1.0 / (4 * N0), 1.0 / (3 * N0))


def unconditional_pep(xi, xj, eff: EffectiveChannel, N0: float) -> float:
    """Gain-averaged probability of deciding ``xj`` when ``xi`` was sent."""
    a = np.asarray(getattr(xi, "values", xi), dtype=complex)
    b = np.asarray(getattr(xj, "values", xj), dtype=complex)
    if np.allclose(a, b, rtol=0, atol=1e-15):
        raise ValueError("PEP is undefined for identical codewords")
    k2 = pep_terms(a, b, eff, N0).kappa2
    # nt * P is the number of component matrices
    return float(pep_from_spectrum(k2, N0, scale=_components(eff).shape[0]))


def pep_spectra(im: ImConfig, eff: EffectiveChannel, max_bits: int = BOUND_MAX_BITS) -> PepSpectra:
    """Pair spectra of the whole codebook under one delay-Doppler profile."""
    p = derive_bit_budget(im).p
    if p > max_bits:
        raise ValueError(f"bound needs the full codebook; 2**{p} words exceeds the 2**{max_bits} guard")
    x, _, _, bits = enumerate_codebook_arrays(im, max_bits)
    comps = _components(eff)
    U = np.einsum("knm,cm->cnk", comps, x)  # (C, N, K)
    C = x.shape[0]
    iu, ju = np.triu_indices(C, k=1)
    k2 = np.empty((iu.size, comps.shape[0]))
    step = 4096
    for s in range(0, iu.size, step):
        sl = slice(s, s + step)
        k2[sl] = _kappa2(U[iu[sl]] - U[ju[sl]])
    ham = np.count_nonzero(bits[iu] != bits[ju], axis=1)
    return PepSpectra(k2, 2.0 * ham, p, eff.nt, comps.shape[0] // eff.nt)


def abep_from_spectra(spec: PepSpectra, N0) -> np.ndarray:
    """Union bound for one or many noise levels."""
    N0 = np.atleast_1d(np.asarray(N0, dtype=float))
    pep = pep_from_spectrum(spec.kappa2, N0, scale=spec.nt * spec.P)  # (S, pairs)
    out = pep @ spec.weights / (2.0**spec.p * spec.p)
    return out


def abep_upper_bound(im: ImConfig, eff: EffectiveChannel, params: AfdmParams | None = None, N0=None) -> float:
    """``(1 / (2^p p)) sum_i sum_j PEP(x_i -> x_j) d_H(b_i, b_j)``."""
    if N0 is None:
        N0 = params.noise_var
    val = abep_from_spectra(pep_spectra(im, eff), N0)
    return float(val[0]) if np.ndim(N0) == 0 else val


def averaged_abep_bound(
    im: ImConfig,
    cfg: ChannelConfig,
    params: AfdmParams,
    N0,
    n_profiles: int = 20,
    seed=0,
) -> np.ndarray:
    """ABEP bound averaged over randomly drawn delay-Doppler profiles.

    Gains do not enter the bound, so only the path positions matter.  When
    the integer grid is exhausted (``P == P_max``) every profile is the same
    and a single one is used.
    """
    rng = np.random.default_rng(seed)
    if cfg.P == cfg.P_max and cfg.doppler_mode.value == "integer":
        n_profiles = 1
    acc = np.zeros(np.size(N0))
    for _ in range(n_profiles):
        real = sample_channel(cfg, params.nt, rng)
        eff = effective_channel(real, params, cfg)
        acc += abep_from_spectra(pep_spectra(im, eff), N0)
    return acc / n_profiles


def diversity_order(im: ImConfig, eff: EffectiveChannel, im_different_only: bool = False) -> int:
    """Minimum rank of ``U_{x_i} - U_{x_j}`` over codeword pairs.

    ``im_different_only`` restricts to pairs whose activation patterns differ.
    """
    x, pidx, _, _ = enumerate_codebook_arrays(im, BOUND_MAX_BITS)
    comps = _components(eff)
    U = np.einsum("knm,cm->cnk", comps, x)
    iu, ju = np.triu_indices(x.shape[0], k=1)
    if im_different_only:
        keep = np.any(pidx[iu] != pidx[ju], axis=1)
        iu, ju = iu[keep], ju[keep]
    if iu.size == 0:
        raise ValueError("no codeword pairs to compare")
    best = min(comps.shape[0], im.N)
    step = 4096
    for s in range(0, iu.size, step):
        sv = np.sqrt(_kappa2(U[iu[s : s + step]] - U[ju[s : s + step]]))
        ranks = np.count_nonzero(sv > RANK_RTOL * sv[:, :1], axis=1)
        best = min(best, int(ranks.min()))
    return best
