import math

import numpy as np
import pytest

from fddmc import harness as H
from fddmc.params import SystemConfig, derive_all


@pytest.fixture(scope="module")
def setup(cfg):
    derived = derive_all(cfg)
    return cfg, derived, H.compute_thresholds(cfg, derived)


def test_trial_is_deterministic(setup):
    cfg, derived, th = setup
    a = H.run_trial(1, cfg, derived, th, H.trial_rng(5, 3), 3)
    b = H.run_trial(1, cfg, derived, th, H.trial_rng(5, 3), 3)
    assert a == b
    assert a.tdd_decision in (0, 1) and a.fdd_decision in (0, 1)
    assert a.c_i > 0


def test_backends_give_identical_trials(setup):
    from fddmc._core import available_backends

    cfg, derived, th = setup
    recs = {
        b: H.run_trial(0, cfg, derived, th, H.trial_rng(9, 0), 0, backend=b)
        for b in available_backends()
    }
    assert len(set(recs.values())) == 1


def test_odd_window_length_runs():
    r = H.monte_carlo_bep(SystemConfig(N=175), 100, master_seed=3)
    assert r.trials == 100
    assert 0 <= r.fdd_bep <= 0.5 and 0 <= r.tdd_bep <= 1


def test_high_snr_sanity():
    cfg = SystemConfig(N_m1=100 * SystemConfig().N_m1, gamma=0.0)
    derived = derive_all(cfg)
    th = H.compute_thresholds(cfg, derived)
    recs = [H.run_trial(1, cfg, derived, th, H.trial_rng(1, i), i) for i in range(100)]
    assert sum(r.tdd_decision for r in recs) == 100
    assert sum(r.fdd_decision for r in recs) == 100


def test_default_grid_unchanged(derived):
    assert H.receiver_grid(derived) == (12, (1e-2, 1e2))
    wide = derive_all(SystemConfig(N_m1=5e5))
    points, (lo, hi) = H.receiver_grid(wide)
    assert hi >= wide.c_m1 / wide.K_Dm and points > 12


def test_identical_symbols_give_coin_flip():
    cfg = SystemConfig(N_m0=SystemConfig().N_m1)
    report = H.monte_carlo_bep(cfg, 2000, master_seed=4)
    for lo, hi in (report.tdd_interval(), report.fdd_interval()):
        assert lo <= 0.5 <= hi
    assert report.analytic_tdd_bep == 0.5 == report.analytic_fdd_bep


def test_small_trial_count_rejected(cfg):
    with pytest.raises(ValueError):
        H.monte_carlo_bep(cfg, 50, 0)


@pytest.fixture(scope="module")
def default_report(cfg):
    return H.monte_carlo_bep(cfg, 1000, master_seed=2024)


def test_report_invariants(default_report):
    r = default_report
    for errors, bep, lo, hi in (
        (r.tdd_errors, r.tdd_bep, r.tdd_ci_low, r.tdd_ci_high),
        (r.fdd_errors, r.fdd_bep, r.fdd_ci_low, r.fdd_ci_high),
    ):
        assert bep == errors / r.trials and 0 <= bep <= 1
        assert lo <= bep <= hi
    assert r.trials == 1000 and r.master_seed == 2024


def test_fdd_beats_tdd_at_defaults(default_report):
    assert default_report.fdd_bep < default_report.tdd_bep


def test_thread_count_invariance(cfg):
    one = H.monte_carlo_bep(cfg, 120, master_seed=8, workers=1)
    three = H.monte_carlo_bep(cfg, 120, master_seed=8, workers=3)
    assert one == three


def test_wilson_interval():
    lo, hi = H.wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = H.wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)


@pytest.mark.slow
def test_analytic_fdd_coverage(cfg):
    covered = 0
    for seed in range(20):
        r = H.monte_carlo_bep(cfg, 1000, master_seed=1000 + seed)
        covered += r.fdd_ci_low <= r.analytic_fdd_bep <= r.fdd_ci_high
    assert covered >= 18


def test_interval_width_shrinks_with_trials(cfg):
    a = H.monte_carlo_bep(cfg, 250, master_seed=6)
    b = H.monte_carlo_bep(cfg, 1000, master_seed=6)
    width = lambda r: r.tdd_ci_high - r.tdd_ci_low
    assert width(b) / width(a) == pytest.approx(0.5, rel=0.3)
    assert max(a.tdd_ci_low, b.tdd_ci_low) <= min(a.tdd_ci_high, b.tdd_ci_high)


def test_sweep_parameter_mapping(cfg):
    assert H.apply_sweep_value(cfg, "gamma", 1.1).gamma == 1.1
    eta = H.apply_sweep_value(cfg, "eta", 8.0)
    assert eta.eta == pytest.approx(8.0) and eta.mu_ci_scale == 8.0
    assert derive_all(eta).mu_ci == pytest.approx(8.0 * cfg.gamma * derive_all(cfg).c_m1)
    assert H.apply_sweep_value(cfg, "N", 350).N == 350
    assert H.apply_sweep_value(cfg, "s1hz", 1e-22).S_1Hz == 1e-22
    assert H.apply_sweep_value(cfg, "bit_ratio", 0.5).N_m0 == 2500
    with pytest.raises(ValueError):
        H.apply_sweep_value(cfg, "N", 350.5)
    with pytest.raises(ValueError):
        H.apply_sweep_value(cfg, "temperature", 1.0)


def test_sweep_rejects_bad_values(cfg):
    with pytest.raises(ValueError):
        H.sweep("gamma", [0.1, 0.1], cfg, 100)
    with pytest.raises(ValueError):
        H.sweep("gamma", [], cfg, 100)
    with pytest.raises(ValueError):
        H.sweep("width", [1.0], cfg, 100)


def test_sweep_records_point_failures(cfg):
    result = H.sweep("eta", [1.0, 4.0], cfg, 100, master_seed=1)
    bad, good = result.points
    assert "singular" in bad.error
    assert bad.report is None or math.isnan(bad.report.analytic_fdd_bep)
    assert good.error == "" and good.report.trials == 100
    assert result.values == [1.0, 4.0]


def test_report_roundtrip(tmp_path, default_report):
    path = tmp_path / "r.csv"
    H.write_report(default_report, path)
    meta, rows = H.read_report(path)
    assert meta["master_seed"] == "2024" and meta["config_fingerprint"] == default_report.config_fingerprint
    assert H.report_from_row(rows[0]) == default_report


def test_sweep_file_schema(tmp_path, cfg):
    result = H.sweep("N", [350, 700], cfg, 100, master_seed=3)
    path = tmp_path / "s.csv"
    H.write_report(result, path)
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0].startswith("# ")
    meta, rows = H.read_report(path)
    assert meta["param"] == "N" and len(rows) == 2
    assert [r["value"] for r in rows] == [350.0, 700.0]
    for row, point in zip(rows, result.points):
        assert set(row) == set(H.REPORT_COLUMNS)
        assert H.report_from_row(row) == point.report


def test_empty_sweep_is_header_only(tmp_path):
    path = tmp_path / "e.csv"
    H.write_report(H.SweepResult("gamma"), path)
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert lines == [",".join(H.REPORT_COLUMNS)]
    assert H.read_report(path)[1] == []


def test_write_error_has_path(tmp_path, default_report):
    target = tmp_path / "missing" / "r.csv"
    with pytest.raises(OSError, match="missing"):
        H.write_report(default_report, target)
