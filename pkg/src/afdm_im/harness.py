"""Monte Carlo BER driver, result tables and the command-line entry point.

Frames are drawn in fixed-size chunks; chunk ``k`` of SNR point ``i`` uses
the generator seeded by ``(seed, i, k)``, so a run is bit-exact
reproducible and chunks could be farmed out independently.  All detectors at
an SNR point see the same frames.  A detector stops once it has collected
``min_errors`` bit errors (checked at chunk boundaries) or ``trials`` frames.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path as FsPath

import numpy as np

from .analysis import averaged_abep_bound
from .channel import (
    ChannelRealization,
    effective_channel,
    full_diversity_ok,
    integer_heff_batch,
    recommend_lambda1,
    sample_channels,
    design_params,
    time_domain_propagate,
    transmit,
)
from .codec import encode_batch, index_bit_mask
from .core_types import (
    AfdmParams,
    ChannelConfig,
    DetectorOptions,
    DopplerMode,
    ImConfig,
    Scheme,
    derive_bit_budget,
)
from .detectors import dlmp_detect, ml_indices_batch, mmse_decide_batch, mmse_estimate, mp_detect
from .detectors.common import format_diagnostics
from .detectors.flops import dlmp_flops_per_iter, ml_flops, mmse_flops, mp_flops_per_iter
from .detectors.linear import _codebook
from .codec import bits_from_indices
from .transform import TimeVector, daft, remove_cpp

DETECTORS = ("ml", "dlmp", "mp", "mmse")
INF_SNR_N0 = 1e-12
CHUNK = 64


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scheme: str = "I"
    n: int = 4
    groups: int = 16
    subblocks: int = 1
    m_active: int = 1
    mod_order: int = 4
    nt: int = 4
    paths: int = 3
    lmax: int = 0
    alphamax: int = 1
    doppler: str = "integer"
    k_alpha: int = 0
    snr_db: tuple = (12.0,)
    trials: int = 1000
    min_errors: int = 200
    detectors: tuple = ("dlmp",)
    damping: float = 0.2
    max_iter: int = 20
    conv_tol: float = 0.05
    seed: int = 0
    out: str | None = None
    emit_bound: bool = False
    bound_profiles: int = 20
    time_domain_check: bool = False
    diagnostics: str | None = None
    chunk: int = CHUNK

    def __post_init__(self):
        self.snr_db = tuple(float(s) for s in self.snr_db)
        self.detectors = tuple(d.lower() for d in self.detectors)
        try:
            self.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self):
        bad = [d for d in self.detectors if d not in DETECTORS]
        if bad:
            raise ConfigError(f"unknown detector(s): {', '.join(bad)}")
        if not self.detectors:
            raise ConfigError("no detector selected")
        if self.scheme not in ("I", "II", "none"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.trials < 1 or self.min_errors < 1 or self.chunk < 1:
            raise ConfigError("trials, min_errors and chunk must be positive")
        if self.time_domain_check and self.doppler != "integer":
            raise ConfigError("--time-domain-check applies to integer Doppler runs")
        im = self.im_config()
        cfg = self.channel_config()
        self.afdm_params(1.0).check_prefix(cfg.l_max)
        p = derive_bit_budget(im).p
        if self.emit_bound and p > 16:
            raise ConfigError("--emit-bound needs a codebook of at most 2**16 words")
        if "ml" in self.detectors and p > 16:
            raise ConfigError(f"ML search over 2**{p} codewords is not supported; use at most 16 bits per frame")
        self.detector_options()

    @property
    def N(self) -> int:
        return self.im_config().N

    def im_config(self) -> ImConfig:
        if self.scheme == "none":
            # plain CDD-AFDM: every carrier active
            return ImConfig(Scheme.I, 1, 1, self.n * self.groups * self.subblocks, self.mod_order)
        L = self.subblocks if self.scheme == "II" else 1
        return ImConfig(Scheme(self.scheme), self.n, self.m_active, self.groups, self.mod_order, L)

    def channel_config(self) -> ChannelConfig:
        mode = DopplerMode(self.doppler)
        k = self.k_alpha if mode is DopplerMode.FRACTIONAL else 0
        return ChannelConfig(self.paths, self.lmax, self.alphamax, mode, k)

    def afdm_params(self, noise_var: float) -> AfdmParams:
        return design_params(self.channel_config(), self.N, self.nt, noise_var=noise_var)

    def detector_options(self) -> DetectorOptions:
        return DetectorOptions(self.damping, self.max_iter, self.conv_tol)

    def metadata(self) -> dict:
        cfg = self.channel_config()
        return {
            "N": self.N,
            "lambda1": str(recommend_lambda1(cfg, self.N)),
            "full_diversity": full_diversity_ok(cfg, self.N, self.nt),
            "bits_per_frame": derive_bit_budget(self.im_config()).p,
        }


@dataclass
class BerRecord:
    detector: str
    snr_db: float
    trials: int
    total_bits: int
    bit_errors: int
    ber: float
    index_bit_errors: int
    mod_bit_errors: int
    mean_iterations: float
    flops_per_detection: float
    # sum of squared per-frame error counts, kept for standard errors only
    sq_errors: float = field(default=0.0, repr=False, compare=False)

    def stderr(self) -> float:
        """Standard error of ``ber`` treating frames as the sampling unit."""
        if self.trials < 2 or self.total_bits == 0:
            return math.nan
        bpf = self.total_bits / self.trials
        mean = self.bit_errors / self.trials
        var = (self.sq_errors / self.trials - mean**2) * self.trials / (self.trials - 1)
        return math.sqrt(max(var, 0.0) / self.trials) / bpf


COLUMNS = tuple(f.name for f in fields(BerRecord) if f.name != "sq_errors")
_INT_COLS = {"trials", "total_bits", "bit_errors", "index_bit_errors", "mod_bit_errors"}


def snr_to_n0(snr_db: float) -> float:
    return INF_SNR_N0 if math.isinf(snr_db) and snr_db > 0 else 10.0 ** (-snr_db / 10.0)


# --- per-detector state -----------------------------------------------------


@dataclass
class _Tally:
    frames: int = 0
    errors: int = 0
    index_errors: int = 0
    sq: float = 0.0
    iterations: int = 0
    flops: float = 0.0

    def add(self, err_bits: np.ndarray, idx_mask: np.ndarray, iters, flops):
        per = err_bits.sum(axis=1)
        self.frames += err_bits.shape[0]
        self.errors += int(per.sum())
        self.index_errors += int(err_bits[:, idx_mask].sum())
        self.sq += float((per.astype(float) ** 2).sum())
        self.iterations += int(np.sum(iters))
        self.flops += float(np.sum(flops))


def _chunk_frames(cfg: ExperimentConfig, im, ch, params, rng, count):
    """Random bits, channels and received vectors for one chunk."""
    p = derive_bit_budget(im).p
    bits = rng.integers(0, 2, size=(count, p), dtype=np.int8)
    x, _, _ = encode_batch(bits, im)
    g, d, a = sample_channels(ch, cfg.nt, rng, count)
    N = im.N
    noise = (rng.standard_normal((count, N)) + 1j * rng.standard_normal((count, N))) * np.sqrt(params.noise_var / 2)
    if ch.doppler_mode is DopplerMode.INTEGER:
        H = integer_heff_batch(g, d, a, params)
        H_det = H
        if cfg.time_domain_check:
            Y = np.empty((count, N), dtype=complex)
            for b in range(count):
                real = ChannelRealization(g[b], d[b], a[b])
                r = time_domain_propagate(transmit(x[b], params, ch.l_max), real, params)
                Y[b] = daft(remove_cpp(r, params), params).values + noise[b]
        else:
            Y = np.einsum("bij,bj->bi", H, x) + noise
    else:
        # propagate through the full kernel, detect with the truncated window
        H = np.empty((count, N, N), dtype=complex)
        H_det = np.empty_like(H)
        for b in range(count):
            real = ChannelRealization(g[b], d[b], a[b])
            H[b] = effective_channel(real, params, ch, exact=True).h_eff
            H_det[b] = effective_channel(real, params, ch).h_eff
        Y = np.einsum("bij,bj->bi", H, x) + noise
    return bits, Y, H_det


def _detect_chunk(name, Y, H, im, params, opts, ch):
    """Returns detected bits (B, p), iterations (B,), flops (B,) and the
    first frame's diagnostics text (message passing only)."""
    B = Y.shape[0]
    N = im.N
    if name == "ml":
        x, _, _, cbits = _codebook(im)
        idx = ml_indices_batch(Y, H, x)
        return cbits[idx], np.zeros(B), np.full(B, ml_flops(N, x.shape[0])), None
    if name == "mmse":
        xt = mmse_estimate(Y, H, params.noise_var)
        pidx, sidx = mmse_decide_batch(xt, im)
        return bits_from_indices(im, pidx, sidx), np.zeros(B), np.full(B, mmse_flops(N)), None
    fn = dlmp_detect if name == "dlmp" else mp_detect
    out = np.empty((B, derive_bit_budget(im).p), dtype=np.int8)
    iters = np.empty(B)
    diag = None
    for b in range(B):
        res = fn(Y[b], H[b], im, params, opts)
        out[b] = res.bits
        iters[b] = res.iterations_used
        if b == 0:
            diag = format_diagnostics(res)
    P = ch.P
    per = dlmp_flops_per_iter(N, P, params.nt, im.mod_order, im.n) if name == "dlmp" else mp_flops_per_iter(
        N, P, params.nt, im.mod_order
    )
    return out, iters, iters * per, diag


def run_experiment(cfg: ExperimentConfig) -> list[BerRecord]:
    im = cfg.im_config()
    ch = cfg.channel_config()
    opts = cfg.detector_options()
    idx_mask = index_bit_mask(im)
    p = derive_bit_budget(im).p
    records: list[BerRecord] = []
    diag_lines: list[str] = []
    for si, snr in enumerate(cfg.snr_db):
        params = cfg.afdm_params(snr_to_n0(snr))
        tallies = {d: _Tally() for d in cfg.detectors}
        active = set(cfg.detectors)
        k = 0
        while active:
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, si, k]))
            count = min(cfg.chunk, cfg.trials - k * cfg.chunk)
            bits, Y, H = _chunk_frames(cfg, im, ch, params, rng, count)
            for name in cfg.detectors:
                if name not in active:
                    continue
                det, iters, flops, diag = _detect_chunk(name, Y, H, im, params, opts, ch)
                tallies[name].add(det != bits, idx_mask, iters, flops)
                if diag is not None and k == 0:
                    diag_lines.append(f"# detector={name} snr_db={snr!r}\n{diag}")
            k += 1
            for name in list(active):
                t = tallies[name]
                if t.errors >= cfg.min_errors or t.frames >= cfg.trials:
                    active.discard(name)
        for name in cfg.detectors:
            t = tallies[name]
            total = t.frames * p
            records.append(
                BerRecord(
                    detector=name,
                    snr_db=snr,
                    trials=t.frames,
                    total_bits=total,
                    bit_errors=t.errors,
                    ber=t.errors / total,
                    index_bit_errors=t.index_errors,
                    mod_bit_errors=t.errors - t.index_errors,
                    mean_iterations=t.iterations / t.frames,
                    flops_per_detection=t.flops / t.frames,
                    sq_errors=t.sq,
                )
            )
    if cfg.emit_bound:
        records.extend(bound_records(cfg))
    if cfg.diagnostics:
        FsPath(cfg.diagnostics).write_text("".join(diag_lines))
    return records


def bound_records(cfg: ExperimentConfig) -> list[BerRecord]:
    """Profile-averaged ABEP bound rows in the BER table layout."""
    N0 = np.array([snr_to_n0(s) for s in cfg.snr_db])
    bound = averaged_abep_bound(
        cfg.im_config(), cfg.channel_config(), cfg.afdm_params(1.0), N0, cfg.bound_profiles, seed=cfg.seed
    )
    return [BerRecord("abep_bound", s, 0, 0, 0, float(b), 0, 0, 0.0, 0.0) for s, b in zip(cfg.snr_db, bound)]


# --- delimited-text tables ---------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17e")
    return str(value)


def emit_results(records, path=None, sep: str = ",") -> str:
    """Write one header row then one row per record; returns the text.

    ``path=None`` only returns the text.  An existing file is overwritten.
    """
    lines = [sep.join(COLUMNS)]
    for r in records:
        lines.append(sep.join(_fmt(getattr(r, c)) for c in COLUMNS))
    text = "\n".join(lines) + "\n"
    if path is not None:
        FsPath(path).write_text(text)
    return text


def read_results(source, sep: str = ",") -> list[BerRecord]:
    """Parse text written by :func:`emit_results` (a path or the text)."""
    text = source
    if isinstance(source, FsPath) or (isinstance(source, str) and "\n" not in source):
        text = FsPath(source).read_text()
    rows = list(csv.reader(text.strip().splitlines(), delimiter=sep))
    header, body = rows[0], rows[1:]
    out = []
    for row in body:
        kw = {}
        for name, val in zip(header, row):
            if name == "detector":
                kw[name] = val
            elif name in _INT_COLS:
                kw[name] = int(val)
            else:
                kw[name] = float(val)
        out.append(BerRecord(**kw))
    return out


# --- command line ------------------------------------------------------------


def _snr_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    return tuple(float(t) for t in str(text).replace(" ", "").split(",") if t)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="afdm-im", description="Monte Carlo BER runs for CDD-AFDM with index modulation.")
    ap.add_argument("--config", help="key=value file; command-line flags take precedence")
    ap.add_argument("--scheme", choices=("I", "II", "none"))
    ap.add_argument("--n", type=int, help="carriers per group")
    ap.add_argument("--groups", type=int, help="groups per subblock (g)")
    ap.add_argument("--subblocks", type=int, help="subblocks (Scheme II)")
    ap.add_argument("--m-active", type=int, help="active carriers per group")
    ap.add_argument("--mod-order", type=int)
    ap.add_argument("--nt", type=int, help="transmit antennas")
    ap.add_argument("--paths", type=int, help="paths per antenna")
    ap.add_argument("--lmax", type=int)
    ap.add_argument("--alphamax", type=int)
    ap.add_argument("--doppler", choices=("integer", "fractional"))
    ap.add_argument("--k-alpha", type=int)
    ap.add_argument("--snr-db", type=_snr_list, help="comma-separated list")
    ap.add_argument("--trials", type=int, help="maximum frames per SNR point")
    ap.add_argument("--min-errors", type=int, help="stop a point after this many bit errors")
    ap.add_argument("--detector", action="append", choices=DETECTORS, help="repeatable")
    ap.add_argument("--damping", type=float)
    ap.add_argument("--max-iter", type=int)
    ap.add_argument("--conv-tol", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output table (stdout if omitted)")
    ap.add_argument("--emit-bound", action="store_const", const=True, default=None)
    ap.add_argument("--bound-profiles", type=int)
    ap.add_argument("--time-domain-check", action="store_const", const=True, default=None)
    ap.add_argument("--diagnostics", help="write message-passing diagnostics here")
    ap.add_argument("--chunk", type=int, help="frames per seeded chunk")
    return ap


_CONVERT = {
    "snr_db": _snr_list,
    "detectors": lambda t: tuple(s for s in str(t).replace(" ", "").split(",") if s),
    "emit_bound": _bool,
    "time_domain_check": _bool,
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; keys use the flag names with dashes or
    underscores, ``#`` starts a comment."""
    out = {}
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    for no, raw in enumerate(FsPath(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key == "detector":
            key = "detectors"
        if key not in types:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        try:
            if key in _CONVERT:
                out[key] = _CONVERT[key](val)
            elif types[key] in ("int", int):
                out[key] = int(val)
            elif types[key] in ("float", float):
                out[key] = float(val)
            else:
                out[key] = val
        except ValueError as exc:
            raise ConfigError(f"{path}:{no}: bad value for {key}: {val!r}") from exc
    return out


def config_from_args(argv=None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    for k, v in vars(args).items():
        if k == "config" or v is None:
            continue
        values["detectors" if k == "detector" else k] = v
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"afdm-im: configuration error: {exc}", file=sys.stderr)
        return 2
    if cfg.out is not None and not FsPath(cfg.out).resolve().parent.is_dir():
        print(f"afdm-im: output directory for {cfg.out} does not exist", file=sys.stderr)
        return 2
    records = run_experiment(cfg)
    try:
        text = emit_results(records, cfg.out)
    except OSError as exc:
        print(f"afdm-im: cannot write results: {exc}", file=sys.stderr)
        return 1
    if cfg.out is None:
        sys.stdout.write(text)
    return 0
