import math

import numpy as np
import pytest

from glse_gamp.errors import InvalidConfig
from glse_gamp.simharness import (CSV_HEADER, ExperimentSpec, distortion,
                                  gen_channel, gen_symbols, rows_to_csv,
                                  run_sweep, run_trial)
from glse_gamp.thresholding import PrecoderConfig


def test_gen_channel_variance_and_determinism():
    h = gen_channel(1000, 1000, 0)
    var = np.mean(np.abs(h.entries) ** 2)
    assert abs(var - 1.0 / 1000) / (1.0 / 1000) < 0.01
    assert np.array_equal(h.entries, gen_channel(1000, 1000, 0).entries)
    assert not np.array_equal(h.entries, gen_channel(1000, 1000, 1).entries)


def test_gen_symbols_variance():
    s = gen_symbols(200_000, 0)
    assert abs(np.mean(np.abs(s) ** 2) - 1.0) < 0.01
    assert np.array_equal(s, gen_symbols(200_000, 0))


def test_distortion_trivial_cases():
    h = np.eye(2, dtype=complex)
    s = np.array([1.0 + 0.0j, -1.0j])
    assert distortion(h, s, s, 1.0) == 0.0
    assert np.isclose(distortion(h, np.zeros(2, complex), s, 4.0), 4.0)


def test_distortion_matches_rzf_identity():
    # dense check against the regularized inverse at a random instance
    h = gen_channel(4, 8, 3)
    s = gen_symbols(4, 4)
    lam = 0.3
    x = np.linalg.solve(h.entries.conj().T @ h.entries + lam * np.eye(8),
                        h.entries.conj().T @ s)
    res = h.entries @ x - s
    assert np.isclose(distortion(h, x, s, 1.0),
                      np.vdot(res, res).real / 4.0)


def test_run_trial_smoke():
    cfg = PrecoderConfig(rho=1.0, lam=0.3, mu=0.05)
    t = run_trial(8, 32, cfg, 1.0, 0, max_iter=50, tol=1e-10, p_avg=0.3)
    assert not t.diverged
    assert t.distortion > 0 and np.isfinite(t.distortion_db)
    assert 0 < t.avg_power and 0 < t.active_fraction <= 1.0
    assert t.papr_emp >= 1.0
    # same seed, same trial
    t2 = run_trial(8, 32, cfg, 1.0, 0, max_iter=50, tol=1e-10, p_avg=0.3)
    assert t2.distortion == t.distortion


def test_spec_validation():
    with pytest.raises(InvalidConfig):
        ExperimentSpec(n_antennas=0, inv_load_grid=[2.0], rho=1.0, p_avg=0.3)
    with pytest.raises(InvalidConfig):
        ExperimentSpec(n_antennas=8, inv_load_grid=[2.0], rho=1.0, p_avg=0.3,
                       mode="bogus")
    with pytest.raises(InvalidConfig):
        ExperimentSpec(n_antennas=8, inv_load_grid=[-1.0], rho=1.0, p_avg=0.3)
    with pytest.raises(InvalidConfig):
        ExperimentSpec(n_antennas=8, inv_load_grid=[2.0], rho=1.0, p_avg=0.3,
                       mode="papr")


def test_spec_grid_shapes():
    spec = ExperimentSpec(n_antennas=8, inv_load_grid=[2.0, 4.0], rho=1.0,
                          p_avg=0.3, eta_grid=[0.5, 1.0])
    assert len(spec.grid()) == 4
    spec = ExperimentSpec(n_antennas=8, inv_load_grid=[2.0], rho=1.0,
                          p_avg=0.5, mode="papr", papr_db_grid=[3.0, math.inf])
    assert spec.grid() == [(2.0, 1.0, 3.0), (2.0, 1.0, math.inf)]


def small_tas_spec(trials=3):
    return ExperimentSpec(n_antennas=16, inv_load_grid=[2.0, 4.0], rho=1.0,
                          p_avg=0.3, eta_grid=[0.5, 1.0], trials=trials,
                          seed=7, max_iter=20, tol=1e-8)


def test_run_sweep_deterministic_and_parallel_equal():
    rows_a = run_sweep(small_tas_spec())
    rows_b = run_sweep(small_tas_spec())
    rows_p = run_sweep(small_tas_spec(), workers=2)
    assert rows_to_csv(rows_a) == rows_to_csv(rows_b)
    assert rows_to_csv(rows_a) == rows_to_csv(rows_p)


def test_run_sweep_csv_header():
    text = rows_to_csv(run_sweep(small_tas_spec(trials=1)))
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert len(text.splitlines()) == 5


def test_run_sweep_keeps_infeasible_rows():
    # inv_load 5 at full selection sits past the feasibility pole
    spec = ExperimentSpec(n_antennas=20, inv_load_grid=[2.0, 5.0], rho=1.0,
                          p_avg=0.3, eta_grid=[1.0], trials=1, seed=0)
    rows = run_sweep(spec)
    assert len(rows) == 2
    bad = rows[1]
    assert bad["inv_load"] == 5.0
    assert bad["trials_ok"] == 0
    assert math.isnan(bad["lambda"]) and math.isnan(bad["D_mean"])


def test_run_sweep_papr_peak_and_zero_db():
    spec = ExperimentSpec(n_antennas=16, inv_load_grid=[2.0], rho=1.0,
                          p_avg=0.5, mode="papr",
                          papr_db_grid=[0.0, 3.0, math.inf],
                          trials=5, seed=3)
    rows = run_sweep(spec)
    assert len(rows) == 3
    zero_db, three_db, inf_db = rows
    # the constant-envelope point runs penalty-free with a pinned peak
    assert zero_db["lambda"] == 0.0 and zero_db["mu"] == 0.0
    assert zero_db["power_mean"] <= 0.5 + 1e-9
    # finite targets keep every per-trial peak under the bound
    p_max = 0.5 * 10 ** 0.3
    cfg = PrecoderConfig(rho=1.0, lam=three_db["lambda"],
                         mu=three_db["mu"], p_max=p_max)
    for seed in range(5):
        t = run_trial(8, 16, cfg, 1.0, seed, p_avg=0.5)
        assert t.papr_emp * t.avg_power <= p_max
    assert math.isinf(inf_db["papr_target_db"])
    # distortion improves as the peak constraint relaxes
    assert zero_db["D_mean"] > three_db["D_mean"] > inf_db["D_mean"]
