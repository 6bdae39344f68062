import math
import subprocess
import sys

import numpy as np
import pytest

from afdm_im.harness import (
    COLUMNS,
    BerRecord,
    ConfigError,
    ExperimentConfig,
    config_from_args,
    emit_results,
    main,
    read_results,
    run_experiment,
)

SMALL = dict(n=4, groups=2, m_active=1, mod_order=2, nt=2, paths=2, lmax=0, alphamax=1, chunk=16)


def small(**kw):
    return ExperimentConfig(**{**SMALL, **kw})


def test_infinite_snr_is_error_free():
    cfg = small(snr_db=(math.inf,), trials=48, detectors=("ml", "dlmp", "mp", "mmse"))
    recs = run_experiment(cfg)
    assert [r.detector for r in recs] == ["ml", "dlmp", "mp", "mmse"]
    assert all(r.bit_errors == 0 and r.ber == 0 and r.trials == 48 for r in recs)


def test_reproducible_and_consistent():
    cfg = small(snr_db=(0.0, 6.0), trials=64, detectors=("dlmp", "mmse"), seed=3)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a == b
    for r in a:
        assert r.index_bit_errors + r.mod_bit_errors == r.bit_errors <= r.total_bits
        assert r.ber == r.bit_errors / r.total_bits
    c = run_experiment(small(snr_db=(0.0, 6.0), trials=64, detectors=("dlmp", "mmse"), seed=4))
    assert c != a


def test_error_stopping():
    recs = run_experiment(small(snr_db=(0.0,), trials=10_000, min_errors=50, detectors=("mmse",)))
    r = recs[0]
    assert r.bit_errors >= 50 and r.trials < 10_000 and r.trials % 16 == 0


def test_ber_decreases_with_snr():
    recs = run_experiment(small(snr_db=(0.0, 5.0, 10.0, 15.0), trials=20_000, min_errors=200, detectors=("ml",), chunk=512))
    for lo, hi in zip(recs, recs[1:]):
        assert hi.ber <= lo.ber + 2 * math.hypot(lo.stderr(), hi.stderr())


def test_time_domain_path_matches_matrix_path():
    kw = dict(snr_db=(4.0,), trials=32, detectors=("mmse", "dlmp"))
    a = run_experiment(small(**kw))
    b = run_experiment(small(time_domain_check=True, **kw))
    assert [r.bit_errors for r in a] == [r.bit_errors for r in b]


def test_fractional_and_plain_runs():
    recs = run_experiment(small(doppler="fractional", k_alpha=1, n=5, snr_db=(10.0,), trials=16, detectors=("dlmp",)))
    assert recs[0].trials == 16
    recs = run_experiment(small(scheme="none", snr_db=(10.0,), trials=16, detectors=("mp",)))
    assert recs[0].total_bits == 16 * 8 and recs[0].index_bit_errors == 0


def test_bound_rows():
    recs = run_experiment(small(snr_db=(10.0, 20.0), trials=16, detectors=("ml",), emit_bound=True, bound_profiles=3))
    bound = [r for r in recs if r.detector == "abep_bound"]
    assert len(bound) == 2 and bound[0].ber > bound[1].ber > 0


def test_emit_empty_and_roundtrip(tmp_path):
    assert emit_results([]) == ",".join(COLUMNS) + "\n"
    recs = run_experiment(small(snr_db=(3.0, math.inf), trials=16, detectors=("mmse", "dlmp")))
    path = tmp_path / "out.csv"
    path.write_text("stale\n")
    text = emit_results(recs, path)
    assert path.read_text() == text
    assert read_results(path) == recs
    assert read_results(text) == recs
    row = text.splitlines()[1].split(",")
    assert row[1] == "3.00000000000000000e+00"


def test_config_validation():
    with pytest.raises(ConfigError):
        small(detectors=("zf",))
    with pytest.raises(ConfigError):
        small(paths=4)  # grid has 3 cells
    with pytest.raises(ConfigError):
        small(mod_order=3)
    with pytest.raises(ConfigError):
        ExperimentConfig(detectors=("ml",))  # 64-bit codebook


def test_config_file_and_flag_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(
        "# small run\nscheme = II\nn = 4\ngroups = 2\nsubblocks = 2\nmod-order = 4\nnt = 1\n"
        "detector = dlmp,mp\nsnr-db = 5,10\ntrials = 10\n"
    )
    cfg = config_from_args(["--config", str(cfg_file), "--trials", "20", "--detector", "mmse"])
    assert cfg.scheme == "II" and cfg.subblocks == 2 and cfg.snr_db == (5.0, 10.0)
    assert cfg.trials == 20 and cfg.detectors == ("mmse",)
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["--config", str(bad)]) == 2


def test_cli_end_to_end(tmp_path, capsys):
    out = tmp_path / "ber.csv"
    diag = tmp_path / "diag.txt"
    rc = main(
        ["--n", "4", "--groups", "2", "--nt", "1", "--paths", "2", "--mod-order", "2", "--snr-db", "8",
         "--trials", "8", "--detector", "dlmp", "--detector", "ml", "--emit-bound", "--out", str(out),
         "--diagnostics", str(diag)]
    )
    assert rc == 0
    recs = read_results(out)
    assert [r.detector for r in recs] == ["dlmp", "ml", "abep_bound"]
    assert diag.read_text().startswith("# detector=dlmp")
    assert main(["--n", "4", "--groups", "2", "--nt", "1", "--m-active", "9"]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["--out", str(tmp_path / "missing" / "x.csv"), "--trials", "1"]) == 2


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "afdm_im", "--n", "2", "--groups", "2", "--nt", "1", "--paths", "1",
         "--mod-order", "2", "--snr-db", "inf", "--trials", "4", "--detector", "mmse"],
        capture_output=True, text=True, check=True,
    )
    lines = r.stdout.splitlines()
    assert lines[0].startswith("detector,snr_db") and lines[1].startswith("mmse,inf,4,")
