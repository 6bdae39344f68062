"""Linear time-varying channel: sampling, DAF-domain subchannels, CDD design.

Delays and Doppler shifts are normalised (delay in samples, Doppler in units
of the subcarrier spacing).  Each transmit antenna sees its own independent
set of ``P`` paths; antenna ``e`` additionally carries the cyclic delay
``params.cyclic_delays[e]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .core_types import AfdmParams, ChannelConfig, DopplerMode
from .transform import TimeVector, add_cpp, cyclic_delay, idaft


@dataclass(frozen=True)
class Path:
    gain: complex
    delay: int
    doppler: float


@dataclass(frozen=True)
class ChannelRealization:
    """Per-antenna path lists, stored as (nt, P) arrays."""

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray

    @property
    def nt(self) -> int:
        return self.gains.shape[0]

    @property
    def P(self) -> int:
        return self.gains.shape[1]

    def paths(self, antenna: int) -> list[Path]:
        return [
            Path(complex(g), int(d), float(a))
            for g, d, a in zip(self.gains[antenna], self.delays[antenna], self.dopplers[antenna])
        ]

    def with_gains(self, gains) -> "ChannelRealization":
        return ChannelRealization(np.asarray(gains, dtype=complex).reshape(self.gains.shape), self.delays, self.dopplers)


@dataclass
class EffectiveChannel:
    """``h_eff = (1/sqrt(nt)) sum_{e,l} h_{e,l} H_{e,l}``.

    ``components`` holds the unit-gain subchannel matrices in (antenna, path)
    row-major order, matching ``gains``.
    """

    h_eff: np.ndarray
    components: np.ndarray
    gains: np.ndarray
    nt: int
    _edges: tuple | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.h_eff.shape[0]

    def component(self, antenna: int, path: int) -> np.ndarray:
        return self.components[antenna * (self.gains.size // self.nt) + path]


# --- sampling ---------------------------------------------------------------


def sample_channels(cfg: ChannelConfig, nt: int, rng: np.random.Generator, count: int):
    """Draw ``count`` realizations at once; returns (gains, delays, dopplers)
    each of shape (count, nt, P)."""
    shape = (count, nt, cfg.P)
    gains = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5 / cfg.P)
    if cfg.doppler_mode is DopplerMode.INTEGER:
        grid = cfg.P_max
        # uniform draw without replacement from the delay-Doppler grid
        picks = np.argsort(rng.random((count, nt, grid)), axis=-1)[..., : cfg.P]
        delays = picks // (2 * cfg.alpha_max + 1)
        dopplers = (picks % (2 * cfg.alpha_max + 1) - cfg.alpha_max).astype(float)
    else:
        delays = rng.integers(0, cfg.l_max + 1, size=shape)
        theta = rng.uniform(-np.pi, np.pi, size=shape)
        dopplers = cfg.alpha_max * np.cos(theta)
    return gains, delays.astype(np.int64), dopplers


def sample_channel(cfg: ChannelConfig, nt: int, rng_seed) -> ChannelRealization:
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    g, d, a = sample_channels(cfg, nt, rng, 1)
    return ChannelRealization(g[0], d[0], a[0])


# --- DAF-domain subchannel matrices -----------------------------------------


_PHASE_TABLE_MAX = 1 << 22


@lru_cache(maxsize=8)
def _unit_roots(D: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(D) / D)


def _zeta_phase(params: AfdmParams, total_delay, v, vbar):
    """exp(j 2 pi zeta / N) with
    zeta = N l2 (v^2 - vbar^2) - v L + N l1 L^2, evaluated modulo N exactly."""
    N = params.N
    L = np.asarray(total_delay, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    l2 = params.lambda2
    # N*l1*L^2 = chirp_shift * L^2 / 2, so everything but the l2 term lives
    # on the grid of 1/(2N) turns
    half = (np.int64(params.chirp_shift) * L * L - 2 * v * L) % (2 * N)
    den = l2.denominator
    quad = np.mod(l2.numerator * (v**2 - np.asarray(vbar, dtype=np.int64) ** 2), den) if l2 != 0 else 0
    D = 2 * N * den
    if D <= _PHASE_TABLE_MAX:
        return _unit_roots(D)[(half * den + quad * 2 * N) % D]
    return np.exp(2j * np.pi * (half / (2.0 * N) + np.asarray(quad) / den))


def _kernel(delta: np.ndarray, N: int) -> np.ndarray:
    """(1/N) sum_n exp(j 2 pi n delta / N) in closed form."""
    # the kernel has period N in delta; centring keeps the phases small
    delta = delta - N * np.round(delta / N)
    num = np.expm1(2j * np.pi * delta)
    den = np.expm1(2j * np.pi * delta / N)
    near = np.abs(den) < 1e-13
    out = np.where(near, 1.0 + 0j, num / np.where(near, 1.0, den) / N)
    return out


def subchannel_matrix(
    path: Path,
    antenna_delay: int,
    params: AfdmParams,
    cfg: ChannelConfig,
    exact: bool = False,
) -> np.ndarray:
    """DAF-domain matrix ``H_{e,l}`` of one unit-gain path.

    Integer Doppler: one unit-modulus entry per row at column
    ``(vbar + loc) mod N``.  Fractional Doppler: the closed-form kernel
    restricted to a cyclic window of half-width ``k_alpha`` around the
    integer part of the Doppler; ``exact=True`` keeps every column.
    """
    N = params.N
    L = int(path.delay) + int(antenna_delay)
    vbar = np.arange(N)
    H = np.zeros((N, N), dtype=complex)
    alpha = float(path.doppler)
    if cfg.doppler_mode is DopplerMode.INTEGER and not exact and alpha == round(alpha):
        loc = -int(round(alpha)) + params.chirp_shift * L
        v = np.mod(vbar + loc, N)
        H[vbar, v] = _zeta_phase(params, L, v, vbar)
        return H
    a_int = int(round(alpha))
    center = -a_int + params.chirp_shift * L
    if exact or cfg.doppler_mode is DopplerMode.INTEGER:
        v = np.broadcast_to(np.arange(N), (N, N))
    else:
        k = cfg.k_alpha
        offs = np.arange(-k, k + 1)
        v = np.mod(vbar[:, None] + center + offs[None, :], N)
    vb = np.broadcast_to(vbar[:, None], v.shape)
    # v - (vbar - alpha + 2 N l1 L)
    delta = (v - vb - params.chirp_shift * L) + alpha
    vals = _zeta_phase(params, L, v, vb) * _kernel(delta, N)
    H[vb, v] = vals
    return H


def effective_channel(
    real: ChannelRealization,
    params: AfdmParams,
    cfg: ChannelConfig,
    exact: bool = False,
) -> EffectiveChannel:
    nt, P = real.gains.shape
    if nt != params.nt:
        raise ValueError(f"realization has {nt} antennas, params expect {params.nt}")
    comps = np.empty((nt * P, params.N, params.N), dtype=complex)
    for e in range(nt):
        for i, path in enumerate(real.paths(e)):
            comps[e * P + i] = subchannel_matrix(path, params.cyclic_delays[e], params, cfg, exact=exact)
    gains = real.gains.reshape(-1)
    h_eff = np.tensordot(gains, comps, axes=1) / np.sqrt(nt)
    return EffectiveChannel(h_eff, comps, gains, nt)


def integer_heff_batch(gains, delays, dopplers, params: AfdmParams) -> np.ndarray:
    """Vectorised integer-Doppler ``h_eff`` for arrays of shape (B, nt, P)."""
    B, nt, P = gains.shape
    N = params.N
    L = delays + np.asarray(params.cyclic_delays)[None, :, None]
    loc = -np.rint(dopplers).astype(np.int64) + params.chirp_shift * L
    vbar = np.arange(N)
    v = np.mod(vbar[None, None, None, :] + loc[..., None], N)  # (B, nt, P, N)
    ph = _zeta_phase(params, L[..., None], v, vbar)
    vals = gains[..., None] * ph / np.sqrt(nt)
    flat = ((np.arange(B)[:, None, None, None] * N + vbar) * N + v).ravel()
    vals = vals.ravel()
    size = B * N * N
    H = np.bincount(flat, vals.real, size) + 1j * np.bincount(flat, vals.imag, size)
    return H.reshape(B, N, N)


# --- parameter design rules -------------------------------------------------


def recommend_lambda1(cfg: ChannelConfig, N: int) -> Fraction:
    """Chirp rate separating all Doppler spreads of one antenna."""
    k = cfg.k_alpha if cfg.doppler_mode is DopplerMode.FRACTIONAL else 0
    return Fraction(2 * cfg.alpha_max + 2 * k + 1, 2 * N)


def min_cyclic_delay(cfg: ChannelConfig, N: int, lambda1) -> int:
    """Smallest integer antenna spacing ``D`` with
    ``D > l_max + 2 (alpha_max + k_alpha) / (2 N lambda1)``."""
    lambda1 = Fraction(lambda1)
    bound = cfg.l_max + Fraction(2 * cfg.spread) / (2 * N * lambda1)
    return math.floor(bound) + 1


def full_diversity_ok(cfg: ChannelConfig, N: int, nt: int) -> bool:
    """Whether every (antenna, delay, Doppler) path fits in N DAF bins."""
    return (cfg.l_max + 1) * (2 * cfg.spread + 1) * nt <= N


def design_params(
    cfg: ChannelConfig,
    N: int,
    nt: int,
    noise_var: float = 1.0,
    lambda2=None,
    cpp_len: int | None = None,
) -> AfdmParams:
    """AfdmParams using the recommended chirp rate and minimum CDD spacing."""
    lam1 = recommend_lambda1(cfg, N)
    delta = min_cyclic_delay(cfg, N, lam1)
    delays = tuple(e * delta for e in range(nt))
    if lambda2 is None:
        lambda2 = Fraction(1, 4 * N * N)
    if cpp_len is None:
        cpp_len = cfg.l_max + delays[-1]
    return AfdmParams(N, lam1, lambda2, cpp_len, nt, delays, noise_var)


# --- reference time-domain model --------------------------------------------


def antenna_signals(s: TimeVector, params: AfdmParams, l_max: int = 0) -> list[TimeVector]:
    """Per-antenna prefixed signals: scaled by 1/sqrt(nt), chirp-cyclically
    delayed by the antenna's cyclic delay, then prefixed."""
    out = []
    for d in params.cyclic_delays:
        se = cyclic_delay(s, d, params)
        se = TimeVector(se.values / np.sqrt(params.nt))
        out.append(add_cpp(se, params, l_max=l_max))
    return out


def time_domain_propagate(
    s_cpp,
    real: ChannelRealization,
    params: AfdmParams,
    rng=None,
) -> TimeVector:
    """Pass prefixed antenna signals through the LTV channel.

    ``s_cpp`` is either the list of per-antenna prefixed signals (see
    :func:`antenna_signals`) or a single prefixed common signal, from which
    the per-antenna versions are derived.  The output keeps the prefix
    layout; samples whose input would precede the received block are zero.
    ``rng=None`` gives a noiseless output.
    """
    if isinstance(s_cpp, TimeVector):
        c = s_cpp.prefix_len
        base = TimeVector(s_cpp.body.copy())
        sigs = antenna_signals(base, params, l_max=max(0, c - params.cyclic_delays[-1]))
    else:
        sigs = list(s_cpp)
    if len(sigs) != real.nt:
        raise ValueError("one prefixed signal per antenna is required")
    c = sigs[0].prefix_len
    N = params.N
    need = int(real.delays.max()) + params.cyclic_delays[-1]
    if c < need:
        raise ValueError(f"prefix of {c} samples cannot cover total delay {need}")
    n = np.arange(-c, N)
    r = np.zeros(N + c, dtype=complex)
    for e, sig in enumerate(sigs):
        for g, l, a in zip(real.gains[e], real.delays[e], real.dopplers[e]):
            shifted = np.zeros(N + c, dtype=complex)
            l = int(l)
            shifted[l:] = sig.values[: N + c - l]
            r += g * shifted * np.exp(2j * np.pi * a * n / N)
    if rng is not None:
        w = (rng.standard_normal(N + c) + 1j * rng.standard_normal(N + c)) * np.sqrt(params.noise_var / 2)
        r = r + w
    return TimeVector(r, prefix_len=c)


def transmit(x, params: AfdmParams, l_max: int = 0) -> list[TimeVector]:
    """IDAFT, cyclic delay diversity and prefix for every antenna."""
    return antenna_signals(idaft(x, params), params, l_max=l_max)


# --- plain-text realization records -----------------------------------------


def dump_realization(real: ChannelRealization) -> str:
    """One line per path: antenna, path, Re h, Im h, delay, Doppler."""
    lines = ["antenna,path,re,im,delay,doppler"]
    for e in range(real.nt):
        for i in range(real.P):
            g = real.gains[e, i]
            lines.append(
                f"{e},{i},{float(g.real)!r},{float(g.imag)!r},{int(real.delays[e, i])},{float(real.dopplers[e, i])!r}"
            )
    return "\n".join(lines) + "\n"


def load_realization(text: str) -> ChannelRealization:
    rows = [ln.split(",") for ln in text.strip().splitlines()[1:] if ln.strip()]
    nt = max(int(r[0]) for r in rows) + 1
    P = max(int(r[1]) for r in rows) + 1
    gains = np.zeros((nt, P), dtype=complex)
    delays = np.zeros((nt, P), dtype=np.int64)
    dopplers = np.zeros((nt, P))
    for r in rows:
        e, i = int(r[0]), int(r[1])
        gains[e, i] = complex(float(r[2]), float(r[3]))
        delays[e, i] = int(r[4])
        dopplers[e, i] = float(r[5])
    return ChannelRealization(gains, delays, dopplers)
