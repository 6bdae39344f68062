"""Shared configuration types, constellations and the bit budget."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np


class Scheme(enum.Enum):
    I = "I"
    II = "II"


class DopplerMode(enum.Enum):
    INTEGER = "integer"
    FRACTIONAL = "fractional"


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # floats are accepted only when they are short binary fractions
        return Fraction(value).limit_denominator(1 << 20)
    return Fraction(value)


@dataclass(frozen=True)
class AfdmParams:
    """Waveform geometry.

    ``lambda1`` is kept as an exact :class:`~fractions.Fraction` so that
    ``2 * N * lambda1`` is an exact integer.  The sampling interval is
    normalised to one.
    """

    N: int
    lambda1: Fraction
    lambda2: Fraction = Fraction(0)
    cpp_len: int = 0
    nt: int = 1
    cyclic_delays: tuple[int, ...] = (0,)
    noise_var: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "lambda1", _as_fraction(self.lambda1))
        object.__setattr__(self, "lambda2", _as_fraction(self.lambda2))
        object.__setattr__(self, "cyclic_delays", tuple(int(d) for d in self.cyclic_delays))
        if self.N < 1:
            raise ValueError(f"N must be positive, got {self.N}")
        if (2 * self.N * self.lambda1).denominator != 1:
            raise ValueError(f"lambda1={self.lambda1} is not of the form p/(2N) for N={self.N}")
        if self.cpp_len < 0:
            raise ValueError("cpp_len must be nonnegative")
        if self.nt < 1 or len(self.cyclic_delays) != self.nt:
            raise ValueError("need one cyclic delay per transmit antenna")
        if self.cyclic_delays[0] != 0:
            raise ValueError("first cyclic delay must be 0")
        if any(b <= a for a, b in zip(self.cyclic_delays, self.cyclic_delays[1:])):
            raise ValueError("cyclic delays must be strictly increasing")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")

    @property
    def chirp_shift(self) -> int:
        """The integer ``2 N lambda1``: DAF-domain shift per unit of delay."""
        return int(2 * self.N * self.lambda1)

    def check_prefix(self, l_max: int) -> None:
        need = l_max + self.cyclic_delays[-1]
        if self.cpp_len < need:
            raise ValueError(f"cpp_len={self.cpp_len} shorter than l_max + last cyclic delay = {need}")


def _gray_inverse(v: np.ndarray) -> np.ndarray:
    p = v.copy()
    shift = v >> 1
    while np.any(shift):
        p ^= shift
        shift >>= 1
    return p


def gray_constellation(M: int) -> np.ndarray:
    """Gray-labelled rectangular QAM with unit average energy.

    Entry ``i`` is the point carrying bit label ``i`` (MSB first).  ``M=2``
    gives BPSK {+1, -1}, ``M=4`` QPSK, ``M=8`` a 4x2 rectangle, ``M=16``
    square 16-QAM.
    """
    k = int(round(math.log2(M))) if M >= 1 else -1
    if M < 2 or 2**k != M:
        raise ValueError(f"constellation size must be a power of two >= 2, got {M}")
    ki = (k + 1) // 2
    kq = k // 2
    labels = np.arange(M)
    vi = labels >> kq
    vq = labels & ((1 << kq) - 1)

    def pam(v, bits):
        if bits == 0:
            return np.zeros(v.shape)
        pos = _gray_inverse(v)
        return ((1 << bits) - 1) - 2.0 * pos

    pts = pam(vi, ki) + 1j * pam(vq, kq)
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


@dataclass(frozen=True)
class ImConfig:
    """Index-modulation block structure.

    Scheme I splits the frame into ``g`` groups of ``n`` carriers.  Scheme II
    splits it into ``L`` subblocks of ``g`` groups; all groups in a subblock
    share one activation pattern.
    """

    scheme: Scheme
    n: int
    m: int
    g: int
    mod_order: int
    L: int = 1

    def __post_init__(self):
        if isinstance(self.scheme, str):
            object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.n < 1 or self.g < 1 or self.L < 1:
            raise ValueError("n, g and L must be positive")
        if not 1 <= self.m <= self.n:
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.scheme is Scheme.I and self.L != 1:
            raise ValueError("Scheme I uses a single subblock (L=1)")
        k = math.log2(self.mod_order) if self.mod_order > 0 else 0.5
        if self.mod_order < 2 or k != int(k):
            raise ValueError(f"mod_order must be a power of two, got {self.mod_order}")

    @property
    def N(self) -> int:
        return self.n * self.g * self.L

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.mod_order))

    @property
    def index_bits(self) -> int:
        """Index bits per pattern-carrying unit (group or subblock)."""
        return int(math.floor(math.log2(math.comb(self.n, self.m))))

    @property
    def n_groups(self) -> int:
        return self.g * self.L

    @property
    def n_units(self) -> int:
        """Number of independently chosen activation patterns per frame."""
        return self.g if self.scheme is Scheme.I else self.L

    @property
    def groups_per_unit(self) -> int:
        return 1 if self.scheme is Scheme.I else self.g

    @cached_property
    def alphabet(self) -> np.ndarray:
        return gray_constellation(self.mod_order)

    @cached_property
    def augmented_alphabet(self) -> np.ndarray:
        """Zero followed by the constellation points."""
        return np.concatenate([[0.0 + 0.0j], self.alphabet])


@dataclass(frozen=True)
class ChannelConfig:
    P: int
    l_max: int
    alpha_max: int
    doppler_mode: DopplerMode = DopplerMode.INTEGER
    k_alpha: int = 0

    def __post_init__(self):
        if isinstance(self.doppler_mode, str):
            object.__setattr__(self, "doppler_mode", DopplerMode(self.doppler_mode))
        if self.P < 1 or self.l_max < 0 or self.alpha_max < 0 or self.k_alpha < 0:
            raise ValueError("invalid channel configuration")
        if self.doppler_mode is DopplerMode.INTEGER:
            if self.k_alpha != 0:
                raise ValueError("k_alpha must be 0 for integer Doppler")
            if self.P > self.P_max:
                raise ValueError(f"P={self.P} exceeds delay-Doppler grid size {self.P_max}")

    @property
    def P_max(self) -> int:
        return (self.l_max + 1) * (2 * self.alpha_max + 1)

    @property
    def spread(self) -> int:
        """Doppler half-width including the fractional window."""
        return self.alpha_max + self.k_alpha


@dataclass(frozen=True)
class DetectorOptions:
    damping: float = 0.2
    max_iter: int = 20
    conv_tol: float = 0.05

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be positive")


@dataclass(frozen=True)
class BitBudget:
    p: int
    p1: int
    p2: int


def derive_bit_budget(im: ImConfig) -> BitBudget:
    """Total, index and modulated bits carried by one frame."""
    p1 = im.n_units * im.index_bits
    p2 = im.n_groups * im.m * im.bits_per_symbol
    return BitBudget(p=p1 + p2, p1=p1, p2=p2)
