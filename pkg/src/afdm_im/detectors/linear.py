"""Exhaustive ML and linear MMSE detectors, single-frame and batched."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..codec import enumerate_codebook_arrays, project_support
from ..core_types import AfdmParams, ImConfig
from ..transform import DafVector
from .common import DetectionResult, active_positions, decide, unit_scores
from .flops import ml_flops, mmse_flops

ML_MAX_BITS = 24


@lru_cache(maxsize=16)
def _codebook(im: ImConfig):
    return enumerate_codebook_arrays(im, ML_MAX_BITS)


def ml_indices_batch(Y: np.ndarray, H: np.ndarray, codewords: np.ndarray) -> np.ndarray:
    """Codeword index minimising ||y - H c||^2 for each frame.

    ``Y`` (B, N), ``H`` (B, N, N), ``codewords`` (C, N).  Ties resolve to the
    lowest index.
    """
    HC = H @ codewords.T  # (B, N, C)
    d = Y[:, :, None] - HC
    metric = np.einsum("bnc,bnc->bc", d.real, d.real) + np.einsum("bnc,bnc->bc", d.imag, d.imag)
    return np.argmin(metric, axis=1)


def ml_detect(y, eff, im: ImConfig, params: AfdmParams | None = None) -> DetectionResult:
    h = eff.h_eff if hasattr(eff, "h_eff") else np.asarray(eff)
    x, pidx, sidx, bits = _codebook(im)
    i = int(ml_indices_batch(np.asarray(y, dtype=complex)[None], h[None], x)[0])
    return DetectionResult(DafVector(x[i]), pidx[i], sidx[i], bits[i].copy(), 0, ml_flops(im.N, x.shape[0]))


def mmse_estimate(Y: np.ndarray, H: np.ndarray, N0: float) -> np.ndarray:
    """(H^H H + N0 I)^{-1} H^H y, batched over a leading axis."""
    Hh = np.conj(np.swapaxes(H, -1, -2))
    G = Hh @ H
    G = G + N0 * np.eye(H.shape[-1])
    return np.linalg.solve(G, (Hh @ Y[..., None]))[..., 0]


def mmse_decide_batch(xt: np.ndarray, im: ImConfig):
    """Activation by |x~|^2, pattern projection, nearest-point symbols."""
    B = xt.shape[0]
    scores = np.abs(xt) ** 2
    pidx = np.stack([project_support(im, unit_scores(im, scores[b])) for b in range(B)])
    sidx = np.empty((B, im.n_groups, im.m), dtype=np.int64)
    for b in range(B):
        pos = active_positions(im, pidx[b])
        sidx[b] = np.argmin(np.abs(xt[b][pos][..., None] - im.alphabet) ** 2, axis=-1)
    return pidx, sidx


def mmse_detect(y, eff, im: ImConfig, params: AfdmParams) -> DetectionResult:
    h = eff.h_eff if hasattr(eff, "h_eff") else np.asarray(eff)
    xt = mmse_estimate(np.asarray(y, dtype=complex)[None], h[None], params.noise_var)[0]
    sym = -np.abs(xt[:, None] - im.alphabet[None, :]) ** 2
    return decide(im, np.abs(xt) ** 2, sym, flops=mmse_flops(im.N), diagnostics={"x_tilde": xt})
