"""Bit <-> DAF-frame mapping for the two index-modulation schemes.

Frame bit layout, MSB first within every field:

* Scheme I: for each group, the group's index bits then its ``m`` symbol
  labels.
* Scheme II: for each subblock, the shared index bits then the symbol labels
  of its ``g`` groups in order.

Internally frames are handled as integer arrays: one pattern index per
pattern-carrying unit (group or subblock) and one alphabet index per active
carrier.  The ``*_batch`` helpers work on a leading batch axis and are what
the simulation harness uses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core_types import ImConfig, derive_bit_budget
from .transform import DafVector

CODEBOOK_MAX_BITS = 24

# the one ordering given explicitly for (n, m) = (4, 2)
_TABLE_4_2 = ((0, 1), (1, 2), (2, 3), (0, 3))


@dataclass(frozen=True)
class ActivationPattern:
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx) or list(idx) != sorted(idx):
            raise ValueError(f"pattern indices must be distinct and sorted: {idx}")
        object.__setattr__(self, "indices", idx)


@dataclass(frozen=True)
class DafFrame:
    x: DafVector
    patterns: tuple[ActivationPattern, ...]
    symbols: tuple[tuple[complex, ...], ...]
    bits: np.ndarray


@lru_cache(maxsize=None)
def _table(n: int, m: int) -> tuple[tuple[int, ...], ...]:
    if not 0 < m <= n:
        raise ValueError(f"need 0 < m <= n, got m={m}, n={n}")
    p1 = int(math.floor(math.log2(math.comb(n, m))))
    if (n, m) == (4, 2):
        return _TABLE_4_2
    return tuple(itertools.islice(itertools.combinations(range(n), m), 1 << p1))


def pattern_table(n: int, m: int) -> list[ActivationPattern]:
    """The ``2**p1`` usable activation patterns, indexed by their index bits."""
    return [ActivationPattern(p) for p in _table(n, m)]


def pattern_array(n: int, m: int) -> np.ndarray:
    """Pattern table as an int array of shape (2**p1, m)."""
    return np.array(_table(n, m), dtype=np.int64).reshape(-1, m)


def pattern_masks(n: int, m: int) -> np.ndarray:
    """Boolean (2**p1, n) activation masks."""
    pats = pattern_array(n, m)
    masks = np.zeros((pats.shape[0], n), dtype=bool)
    np.put_along_axis(masks, pats, True, axis=1)
    return masks


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    """MSB-first bit fields along the last axis to integers."""
    k = bits.shape[-1]
    if k == 0:
        return np.zeros(bits.shape[:-1], dtype=np.int64)
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    return bits.astype(np.int64) @ weights


def _int_to_bits(v: np.ndarray, k: int) -> np.ndarray:
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(v, dtype=np.int64)[..., None] >> shifts) & 1).astype(np.int8)


def _split(im: ImConfig, bits: np.ndarray):
    """Split (B, p) bits into index fields (B, units, p1) and symbol fields."""
    B = bits.shape[0]
    k = im.bits_per_symbol
    p1 = im.index_bits
    per_unit = p1 + im.groups_per_unit * im.m * k
    u = bits.reshape(B, im.n_units, per_unit)
    idx_bits = u[..., :p1]
    sym_bits = u[..., p1:].reshape(B, im.n_groups, im.m, k)
    return idx_bits, sym_bits


def index_bit_mask(im: ImConfig) -> np.ndarray:
    """True at frame bit positions that carry index bits."""
    p1 = im.index_bits
    per_unit = p1 + im.groups_per_unit * im.m * im.bits_per_symbol
    unit = np.zeros(per_unit, dtype=bool)
    unit[:p1] = True
    return np.tile(unit, im.n_units)


def indices_from_bits(im: ImConfig, bits: np.ndarray):
    """(B, p) bits -> pattern indices (B, units), symbol indices (B, groups, m)."""
    bits = np.atleast_2d(np.asarray(bits))
    if bits.shape[-1] != derive_bit_budget(im).p:
        raise ValueError(f"expected {derive_bit_budget(im).p} bits, got {bits.shape[-1]}")
    idx_bits, sym_bits = _split(im, bits)
    return _bits_to_int(idx_bits), _bits_to_int(sym_bits)


def bits_from_indices(im: ImConfig, pattern_idx: np.ndarray, symbol_idx: np.ndarray) -> np.ndarray:
    pattern_idx = np.atleast_2d(pattern_idx)
    B = pattern_idx.shape[0]
    symbol_idx = np.asarray(symbol_idx).reshape(B, im.n_groups, im.m)
    ib = _int_to_bits(pattern_idx, im.index_bits)
    sb = _int_to_bits(symbol_idx, im.bits_per_symbol).reshape(
        B, im.n_units, im.groups_per_unit * im.m * im.bits_per_symbol
    )
    return np.concatenate([ib, sb], axis=-1).reshape(B, -1)


def group_supports(im: ImConfig, pattern_idx: np.ndarray) -> np.ndarray:
    """Active carrier positions within each group, shape (B, groups, m)."""
    pats = pattern_array(im.n, im.m)
    per_group = np.repeat(np.atleast_2d(pattern_idx), im.groups_per_unit, axis=1)
    return pats[per_group]


def frames_from_indices(im: ImConfig, pattern_idx: np.ndarray, symbol_idx: np.ndarray) -> np.ndarray:
    """Build DAF vectors (B, N) from pattern and symbol indices."""
    pattern_idx = np.atleast_2d(pattern_idx)
    B = pattern_idx.shape[0]
    support = group_supports(im, pattern_idx)
    offsets = (np.arange(im.n_groups) * im.n)[None, :, None]
    x = np.zeros((B, im.N), dtype=complex)
    pos = (support + offsets).reshape(B, -1)
    vals = im.alphabet[np.asarray(symbol_idx).reshape(B, -1)]
    np.put_along_axis(x, pos, vals, axis=1)
    return x


def encode_batch(bits: np.ndarray, im: ImConfig):
    """Vectorised encoder: returns (x, pattern_idx, symbol_idx)."""
    pidx, sidx = indices_from_bits(im, bits)
    return frames_from_indices(im, pidx, sidx), pidx, sidx


def encode(bits, im: ImConfig, params=None) -> DafFrame:
    """Map one bit word onto a DAF frame."""
    bits = np.asarray(bits, dtype=np.int8).ravel()
    if params is not None and params.N != im.N:
        raise ValueError(f"IM structure covers {im.N} carriers, waveform has {params.N}")
    x, pidx, sidx = encode_batch(bits[None, :], im)
    return _frame(im, x[0], pidx[0], sidx[0], bits)


def _frame(im, x, pidx, sidx, bits) -> DafFrame:
    table = pattern_table(im.n, im.m)
    per_group = np.repeat(pidx, im.groups_per_unit)
    patterns = tuple(table[i] for i in per_group)
    symbols = tuple(tuple(im.alphabet[s]) for s in np.asarray(sidx).reshape(im.n_groups, im.m))
    return DafFrame(DafVector(x), patterns, symbols, np.asarray(bits, dtype=np.int8))


def decode(patterns, symbols, im: ImConfig) -> np.ndarray:
    """Inverse of :func:`encode`.

    ``patterns`` holds one :class:`ActivationPattern` (or index tuple) per
    group; for Scheme II the groups of a subblock must agree.  ``symbols``
    holds per-group constellation points, mapped to the nearest alphabet entry.
    """
    lookup = {p: i for i, p in enumerate(_table(im.n, im.m))}
    per_group = []
    for p in patterns:
        key = p.indices if isinstance(p, ActivationPattern) else tuple(int(i) for i in p)
        if key not in lookup:
            raise ValueError(f"pattern {key} is not in the pattern table")
        per_group.append(lookup[key])
    if len(per_group) != im.n_groups:
        raise ValueError(f"expected {im.n_groups} group patterns, got {len(per_group)}")
    units = np.array(per_group).reshape(im.n_units, im.groups_per_unit)
    if np.any(units != units[:, :1]):
        raise ValueError("groups of a subblock carry different patterns")
    pts = np.asarray(symbols, dtype=complex).reshape(im.n_groups, im.m)
    sidx = np.argmin(np.abs(pts[..., None] - im.alphabet) ** 2, axis=-1)
    return bits_from_indices(im, units[:, 0][None, :], sidx[None])[0]


def enumerate_codebook_arrays(im: ImConfig, max_bits: int = CODEBOOK_MAX_BITS):
    """All codewords as arrays: (x, pattern_idx, symbol_idx, bits).

    Codeword ``i`` carries the bit word whose MSB-first integer value is ``i``.
    """
    p = derive_bit_budget(im).p
    if p > max_bits:
        raise ValueError(f"codebook of 2**{p} words exceeds the 2**{max_bits} guard")
    bits = _int_to_bits(np.arange(1 << p), p)
    x, pidx, sidx = encode_batch(bits, im)
    return x, pidx, sidx, bits


def enumerate_codebook(im: ImConfig, params=None, max_bits: int = CODEBOOK_MAX_BITS) -> list[DafFrame]:
    x, pidx, sidx, bits = enumerate_codebook_arrays(im, max_bits)
    return [_frame(im, x[i], pidx[i], sidx[i], bits[i]) for i in range(x.shape[0])]


def project_support(im: ImConfig, scores: np.ndarray) -> np.ndarray:
    """Pick a pattern per unit from per-carrier activation scores.

    ``scores`` has shape (units, n) (Scheme II callers sum the groups of a
    subblock first).  The top-``m`` carriers form a support; when it is not
    in the pattern table the nearest table entry in Hamming distance is used,
    ties going to the lowest table index.
    """
    masks = pattern_masks(im.n, im.m)
    order = np.argsort(-scores, axis=1, kind="stable")[:, : im.m]
    chosen = np.zeros(scores.shape, dtype=bool)
    np.put_along_axis(chosen, order, True, axis=1)
    dist = np.count_nonzero(chosen[:, None, :] != masks[None, :, :], axis=-1)
    return np.argmin(dist, axis=1)
