"""Acceptance suite.  Each test carries a ``criterion`` marker; the terminal
summary prints one PASS/FAIL line per criterion with the measured numbers.

The Monte Carlo criteria (5, 6, 8, 9, 11) take minutes each; deselect them
with ``-m "not slow"``.
"""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from afdm_im.analysis import diversity_order
from afdm_im.channel import (
    ChannelRealization,
    Path,
    design_params,
    effective_channel,
    full_diversity_ok,
    min_cyclic_delay,
    recommend_lambda1,
    sample_channel,
    subchannel_matrix,
    time_domain_propagate,
    transmit,
)
from afdm_im.core_types import AfdmParams, ChannelConfig, DetectorOptions, DopplerMode, ImConfig, Scheme
from afdm_im.detectors import flop_estimate, run_dlmp
from afdm_im.harness import ExperimentConfig, bound_records, run_experiment
from afdm_im.transform import daft, daft_matrix, idaft, remove_cpp

from conftest import crandn
from test_detectors import exact_group_marginals, random_frame


def detail(record_property, text):
    record_property("detail", text)


# --- 1. transform ---------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_transform_identity_and_unitarity(record_property):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for N in (4, 10, 16, 64, 128):
        p = AfdmParams(N, Fraction(1, 2 * N), Fraction(1, 4 * N * N))
        x = crandn(rng, N)
        back = daft(idaft(x, p), p).values
        A = daft_matrix(p)
        worst = max(
            worst,
            np.max(np.abs(back - x)),
            np.max(np.abs(A @ A.conj().T - np.eye(N))),
            abs(np.linalg.norm(idaft(x, p).values) - np.linalg.norm(x)),
        )
    dt = time.perf_counter() - t0
    detail(record_property, f"max error {worst:.2e}, {dt:.3f} s")
    assert worst <= 1e-10 and dt < 1.0


# --- 2. cross-model equivalence ----------------------------------------------------------


@pytest.mark.criterion(2)
def test_time_domain_matches_effective_channel(record_property):
    rng = np.random.default_rng(2)
    N = 16
    # (l_max + 1)(2 alpha_max + 1) nt <= N for each antenna count
    setups = {1: ChannelConfig(15, 2, 2), 2: ChannelConfig(6, 1, 1), 3: ChannelConfig(5, 0, 2)}
    t0 = time.perf_counter()
    worst = 0.0
    for nt, cfg in setups.items():
        assert full_diversity_ok(cfg, N, nt)
        p = design_params(cfg, N, nt)
        for _ in range(100):
            real = sample_channel(cfg, nt, rng)
            x = crandn(rng, N)
            r = time_domain_propagate(transmit(x, p, cfg.l_max), real, p)
            y = daft(remove_cpp(r, p), p).values
            hx = effective_channel(real, p, cfg).h_eff @ x
            worst = max(worst, np.linalg.norm(y - hx) / np.linalg.norm(hx))
    dt = time.perf_counter() - t0
    detail(record_property, f"max relative error {worst:.2e} over 300 channels, {dt:.2f} s")
    assert worst <= 1e-9 and dt < 10.0


# --- 3. support structure ------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_disjoint_component_supports(record_property):
    rng = np.random.default_rng(3)
    N = 32
    t0 = time.perf_counter()
    cases = 0
    bad = []
    for lmax, amax, nt in itertools.product(range(4), range(4), range(1, 5)):
        cfg = ChannelConfig((lmax + 1) * (2 * amax + 1), lmax, amax)
        if cfg.P * nt > N:
            continue
        p = design_params(cfg, N, nt)
        lam = recommend_lambda1(cfg, N)
        delta = min_cyclic_delay(cfg, N, lam)
        eff = effective_channel(sample_channel(cfg, nt, rng), p, cfg)
        masks = np.abs(eff.components) > 1e-12
        nnz = np.count_nonzero(np.abs(eff.h_eff) > 1e-12)
        ok = (
            p.lambda1 == lam
            and delta == lmax + 1
            and p.cyclic_delays == tuple(e * delta for e in range(nt))
            and masks.sum(0).max() == 1
            and nnz == N * nt * cfg.P
        )
        if not ok:
            bad.append((lmax, amax, nt))
        cases += 1
    dt = time.perf_counter() - t0
    detail(record_property, f"{cases} configurations, failures {bad}, {dt:.2f} s")
    assert not bad and dt < 5.0


# --- 4. worked example ----------------------------------------------------------------------


@pytest.mark.criterion(4)
def test_worked_example_matrices_and_rank(record_property):
    t0 = time.perf_counter()
    p = AfdmParams(4, Fraction(1, 8), cpp_len=1, nt=2, cyclic_delays=(0, 1))
    cfg = ChannelConfig(1, 0, 1)
    H0 = subchannel_matrix(Path(1, 0, 0), 0, p, cfg)
    H1 = subchannel_matrix(Path(1, 0, 1), 1, p, cfg)
    want1 = np.diag(np.exp(1j * np.pi * np.array([1, -1, -3, -5]) / 4))
    err = max(np.max(np.abs(H0 - np.eye(4))), np.max(np.abs(H1 - want1)))
    real = ChannelRealization(np.ones((2, 1), complex), np.zeros((2, 1), int), np.array([[0.0], [1.0]]))
    eff = effective_channel(real, p, cfg)
    rank = diversity_order(ImConfig(Scheme.I, 4, 1, 1, 2), eff, im_different_only=True)
    dt = time.perf_counter() - t0
    detail(record_property, f"entry error {err:.1e}, min rank {rank}, {dt:.2f} s")
    assert err <= 1e-12 and rank == 2 and dt < 5.0


# --- 5 and 6. ML against the union bound ------------------------------------------------------

ML_GRID = {1: (16.0, 18.0, 20.0, 22.0, 24.0, 26.0), 2: (12.0, 14.0, 16.0, 18.0, 20.0)}
ML_MIN_ERRORS = 300


def ml_config(nt):
    return ExperimentConfig(
        scheme="I", n=10, groups=1, m_active=1, mod_order=2, nt=nt, paths=3, lmax=0, alphamax=1,
        snr_db=ML_GRID[nt], trials=10**9, min_errors=ML_MIN_ERRORS, detectors=("ml",),
        seed=50 + nt, chunk=20000,
    )


@pytest.fixture(scope="module")
def ml_runs():
    out = {}
    for nt in (1, 2):
        cfg = ml_config(nt)
        sim = run_experiment(cfg)
        bound = bound_records(cfg)
        out[nt] = (
            np.array(cfg.snr_db),
            np.array([r.ber for r in sim]),
            np.array([b.ber for b in bound]),
            np.array([r.bit_errors for r in sim]),
        )
    return out


@pytest.mark.slow
@pytest.mark.criterion(5)
def test_ml_between_half_bound_and_bound(ml_runs, record_property):
    ok = True
    parts = []
    for nt, (snr, ber, bound, errs) in ml_runs.items():
        sel = bound <= 1e-3
        assert sel.any()
        assert np.all(errs >= 200)
        ratio = ber[sel] / bound[sel]
        ok &= bool(np.all((ratio <= 1.0) & (ratio >= 0.5)))
        parts.append(f"nt={nt} BER/bound " + ",".join(f"{s:.0f}dB:{r:.2f}" for s, r in zip(snr[sel], ratio)))
    detail(record_property, "; ".join(parts))
    assert ok


def last_two_decades_slope(snr_db, ber):
    keep = ber <= 100 * ber.min()
    return -np.polyfit(snr_db[keep] / 10, np.log10(ber[keep]), 1)[0]


@pytest.mark.slow
@pytest.mark.criterion(6)
def test_transmit_diversity_slope(ml_runs, record_property):
    s1 = last_two_decades_slope(*ml_runs[1][:2])
    s2 = last_two_decades_slope(*ml_runs[2][:2])
    detail(record_property, f"slopes nt=1 {s1:.2f}, nt=2 {s2:.2f}, ratio {s2 / s1:.2f}")
    assert s2 >= 1.5 * s1


# --- 7. exactness on trees -----------------------------------------------------------------------


@pytest.mark.criterion(7)
def test_dlmp_exact_on_diagonal_channels(record_property):
    rng = np.random.default_rng(7)
    setups = [(4, 1, 2), (4, 2, 4), (3, 2, 2), (5, 2, 2), (4, 3, 4)]
    opts = DetectorOptions(damping=1.0)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        n, m, M = setups[i % len(setups)]
        im = ImConfig(Scheme.I, n, m, 2, M)
        h = crandn(rng, im.N)
        N0 = 10 ** (-rng.uniform(-5, 15) / 10)
        _, x = random_frame(im, rng)
        y = h * x + crandn(rng, im.N) * np.sqrt(N0)
        s = run_dlmp(y, np.diag(h), im, N0, opts)
        worst = max(worst, np.max(np.abs(s.best_marginals - exact_group_marginals(y, h, im, N0))))
    dt = time.perf_counter() - t0
    detail(record_property, f"max marginal error {worst:.1e}, {dt:.1f} s")
    assert worst <= 1e-8 and dt < 30.0


# --- 8. detector ordering -----------------------------------------------------------------------

SEC6 = dict(n=4, groups=16, m_active=1, nt=4, paths=3, lmax=0, alphamax=1)


def snr_to_reach(snr, ber, target):
    """SNR at which log BER, linear in dB between grid points, hits target."""
    nl = -np.log10(ber)
    order = np.argsort(nl)
    return float(np.interp(-np.log10(target), nl[order], snr[order], left=np.nan, right=np.nan))


@pytest.mark.slow
@pytest.mark.criterion(8)
def test_detector_ordering(record_property):
    bits_per_frame = 64
    frames = -(-10**6 // bits_per_frame)
    base = ExperimentConfig(scheme="I", mod_order=4, **SEC6, snr_db=(12.0,), trials=frames, min_errors=10**9,
                            detectors=("dlmp", "mp", "mmse"), seed=8)
    rec = {r.detector: r for r in run_experiment(base)}
    d, m, e = rec["dlmp"], rec["mp"], rec["mmse"]
    sep1 = (m.ber - d.ber) / np.hypot(m.stderr(), d.stderr())
    sep2 = (e.ber - m.ber) / np.hypot(e.stderr(), m.stderr())
    sweep = ExperimentConfig(scheme="I", mod_order=4, **SEC6, snr_db=(12.0, 13.0, 14.0, 15.0, 16.0), trials=frames,
                             min_errors=2000, detectors=("mp",), seed=80)
    mp_curve = run_experiment(sweep)
    snr = np.array([r.snr_db for r in mp_curve])
    ber = np.array([r.ber for r in mp_curve])
    gap = snr_to_reach(snr, ber, d.ber) - 12.0
    detail(
        record_property,
        f"BER dlmp {d.ber:.3e} mp {m.ber:.3e} mmse {e.ber:.3e} over {d.total_bits} bits; "
        f"separations {sep1:.1f}, {sep2:.1f} SE; MP gap {gap:.2f} dB",
    )
    assert d.total_bits >= 10**6
    assert sep1 >= 3 and sep2 >= 3
    assert 0.5 <= gap <= 2.5


# --- 9. Scheme II against Scheme I ----------------------------------------------------------------

SCHEME_I = dict(scheme="I", n=4, groups=16, m_active=1, mod_order=2, nt=4, paths=3, lmax=0, alphamax=1)
SCHEME_II = dict(scheme="II", n=4, groups=2, subblocks=8, m_active=1, mod_order=4, nt=4, paths=3, lmax=0, alphamax=1)
SCHEME_GRID = (10.0, 11.0, 12.0, 13.0, 14.0)


@pytest.mark.slow
@pytest.mark.criterion(9)
def test_scheme_two_beats_scheme_one(record_property):
    curve = run_experiment(ExperimentConfig(**SCHEME_I, snr_db=SCHEME_GRID, trials=4000, min_errors=400, seed=9))
    snr = np.array([r.snr_db for r in curve])
    ber = np.array([r.ber for r in curve])
    target = snr[np.argmin(np.abs(np.log10(ber) - np.log10(1e-3)))]
    frames = 6000
    one = run_experiment(ExperimentConfig(**SCHEME_I, snr_db=(target,), trials=frames, min_errors=10**9, seed=90))[0]
    two = run_experiment(ExperimentConfig(**SCHEME_II, snr_db=(target,), trials=frames, min_errors=10**9, seed=91))[0]
    sep = (one.ber - two.ber) / np.hypot(one.stderr(), two.stderr())
    detail(
        record_property,
        f"at {target:.0f} dB: scheme I {one.ber:.3e}, scheme II {two.ber:.3e}, separation {sep:.1f} SE",
    )
    assert two.ber <= one.ber and sep >= 3


# --- 10. FLOP formulas ----------------------------------------------------------------------------


@pytest.mark.criterion(10)
def test_flop_formulas(record_property):
    t0 = time.perf_counter()
    # hand-evaluated per-iteration counts for (N, P, nt, M, n)
    table = [
        ((64, 3, 2, 2, 4), 41600, 40192, 4_247_552),
        ((64, 3, 4, 2, 4), 83072, 80512, 4_247_552),
        ((16, 2, 1, 4, 8), 6400, 5312, 68_864),
    ]
    got = []
    for (N, P, nt, M, n), dl, mp, mm in table:
        got.append(
            (flop_estimate("dlmp", N, P, nt, M, n), flop_estimate("mp", N, P, nt, M), flop_estimate("mmse", N))
            == (dl, mp, mm)
        )
    dt = time.perf_counter() - t0
    detail(record_property, f"{sum(got)}/3 parameter sets exact, {dt * 1e3:.1f} ms")
    assert all(got) and dt < 1.0


# --- 11. fractional Doppler ----------------------------------------------------------------------


@pytest.mark.criterion(11)
def test_fractional_residual_and_row_energy(record_property):
    rng = np.random.default_rng(11)
    N = 64
    cfg = ChannelConfig(3, 0, 1, DopplerMode.FRACTIONAL, 1)
    p = design_params(cfg, N, 4)
    worst_energy = 0.0
    monotone = True
    for _ in range(20):
        alpha = rng.uniform(-1, 1)
        full = subchannel_matrix(Path(1, 0, alpha), 0, p, cfg, exact=True)
        worst_energy = max(worst_energy, np.max(np.abs(np.sum(np.abs(full) ** 2, axis=1) - 1)))
        res = [
            np.linalg.norm(full - subchannel_matrix(Path(1, 0, alpha), 0, p, ChannelConfig(3, 0, 1, "fractional", k)))
            for k in range(6)
        ]
        monotone &= all(b <= a + 1e-12 for a, b in zip(res, res[1:]))
    detail(record_property, f"residual monotone {monotone}, row energy error {worst_energy:.1e}")
    assert monotone and worst_energy <= 1e-9


@pytest.mark.slow
@pytest.mark.criterion(11)
def test_fractional_window_ber(record_property):
    bers = {}
    for k in (1, 2):
        cfg = ExperimentConfig(scheme="I", mod_order=4, **SEC6, doppler="fractional", k_alpha=k, snr_db=(12.0,),
                               trials=3000, min_errors=600, seed=11)
        bers[k] = run_experiment(cfg)[0].ber
    ratio = bers[1] / bers[2]
    detail(record_property, f"DLMP BER k=1 {bers[1]:.3e}, k=2 {bers[2]:.3e}, ratio {ratio:.2f}")
    assert 0.5 <= ratio <= 2.0
