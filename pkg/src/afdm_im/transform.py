"""Discrete affine Fourier transform pair and chirp-periodic prefix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_types import AfdmParams


@dataclass(frozen=True)
class DafVector:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex).ravel())

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class TimeVector:
    """Time-domain samples; the first ``prefix_len`` entries are the prefix."""

    values: np.ndarray
    prefix_len: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex).ravel())
        if not 0 <= self.prefix_len <= self.values.size:
            raise ValueError("prefix longer than signal")

    @property
    def body(self) -> np.ndarray:
        return self.values[self.prefix_len:]


def _frac_phase(coef, k: np.ndarray) -> np.ndarray:
    """exp(-j 2 pi coef k) with ``coef`` rational and ``k`` integer.

    The product is reduced modulo 1 with exact integer arithmetic before the
    exponential, which keeps the phase exact for large ``k``.
    """
    num, den = coef.numerator, coef.denominator
    r = np.mod(num * k.astype(np.int64), den)
    return np.exp(-2j * np.pi * r / den)


def chirp_diag(coef, N: int) -> np.ndarray:
    """Diagonal of Lambda_coef: exp(-j 2 pi coef n^2), n = 0..N-1."""
    n = np.arange(N, dtype=np.int64)
    return _frac_phase(coef, n * n)


def daft_matrix(params: AfdmParams) -> np.ndarray:
    """Unitary DAFT matrix ``A = Lambda2 F Lambda1``; y = A r, s = A^H x."""
    N = params.N
    n = np.arange(N)
    F = np.exp(-2j * np.pi * np.outer(n, n) / N) / np.sqrt(N)
    return chirp_diag(params.lambda2, N)[:, None] * F * chirp_diag(params.lambda1, N)[None, :]


def daft(r, params: AfdmParams) -> DafVector:
    """Time samples (no prefix) to the DAF domain."""
    v = r.body if isinstance(r, TimeVector) else np.asarray(r, dtype=complex)
    if v.size != params.N:
        raise ValueError(f"expected {params.N} samples, got {v.size}")
    N = params.N
    # A r = Lambda2 F Lambda1 r, evaluated with an FFT
    out = np.fft.fft(chirp_diag(params.lambda1, N) * v) / np.sqrt(N)
    return DafVector(chirp_diag(params.lambda2, N) * out)


def idaft(x, params: AfdmParams) -> TimeVector:
    """DAF-domain symbols to time samples, without prefix."""
    v = x.values if isinstance(x, DafVector) else np.asarray(x, dtype=complex)
    if v.size != params.N:
        raise ValueError(f"expected {params.N} symbols, got {v.size}")
    N = params.N
    s = np.fft.ifft(np.conj(chirp_diag(params.lambda2, N)) * v) * np.sqrt(N)
    return TimeVector(np.conj(chirp_diag(params.lambda1, N)) * s)


def chirp_extension_phase(params: AfdmParams, n: np.ndarray) -> np.ndarray:
    """Factor relating s[n] to s[n + N]: s[n] = s[n + N] * phase(n)."""
    N = params.N
    n = np.asarray(n, dtype=np.int64)
    return _frac_phase(params.lambda1, N * N + 2 * N * n)


def add_cpp(s: TimeVector, params: AfdmParams, l_max: int = 0) -> TimeVector:
    """Prepend the chirp-periodic prefix of length ``params.cpp_len``."""
    if s.prefix_len:
        raise ValueError("signal already carries a prefix")
    if s.values.size != params.N:
        raise ValueError(f"expected {params.N} samples, got {s.values.size}")
    params.check_prefix(l_max)
    c = params.cpp_len
    if c > params.N:
        raise ValueError("prefix longer than the AFDM block is not supported")
    n = np.arange(-c, 0)
    prefix = s.values[n + params.N] * chirp_extension_phase(params, n)
    return TimeVector(np.concatenate([prefix, s.values]), prefix_len=c)


def remove_cpp(r: TimeVector, params: AfdmParams) -> TimeVector:
    if r.prefix_len != params.cpp_len:
        raise ValueError(f"prefix length {r.prefix_len} != cpp_len {params.cpp_len}")
    if r.values.size != params.N + params.cpp_len:
        raise ValueError("signal length does not match N + cpp_len")
    return TimeVector(r.body.copy())


def cyclic_delay(s: TimeVector, delay: int, params: AfdmParams) -> TimeVector:
    """Chirp-cyclic shift of a prefix-free block by ``delay`` samples.

    Returns ``s_ext[n - delay]`` for n = 0..N-1 where ``s_ext`` is the
    chirp-periodic extension of ``s``.
    """
    if s.prefix_len:
        raise ValueError("apply the cyclic delay before adding the prefix")
    N = params.N
    n = np.arange(N) - delay
    wraps = np.floor_divide(n, N)
    base = s.values[n - wraps * N]
    # walk back one period at a time; wraps is 0 or negative
    phase = np.ones(N, dtype=complex)
    k = n - wraps * N
    for _ in range(int(-wraps.min()) if wraps.size else 0):
        mask = wraps < 0
        k = np.where(mask, k - N, k)
        phase = np.where(mask, phase * chirp_extension_phase(params, k), phase)
        wraps = np.where(mask, wraps + 1, wraps)
    return TimeVector(base * phase)
