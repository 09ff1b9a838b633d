import numpy as np
import pytest

import glse_gamp.engine as engine
from glse_gamp.engine import (ChannelMatrix, ChannelOps, init_state, run,
                              sweep, time_sweep)
from glse_gamp.errors import Divergence, InvalidConfig
from glse_gamp.oracle import objective, solve_glse
from glse_gamp.simharness import gen_channel, gen_symbols
from glse_gamp.thresholding import PrecoderConfig


def test_channel_matrix_validation():
    with pytest.raises(InvalidConfig):
        ChannelMatrix(np.zeros(3))
    with pytest.raises(InvalidConfig):
        ChannelMatrix(np.full((2, 2), np.nan))
    h = ChannelMatrix(np.ones((2, 4)))
    assert h.alpha == 0.5


def test_init_state_rejects_unbounded_penalty():
    h = gen_channel(2, 4, 0)
    with pytest.raises(InvalidConfig):
        init_state(h, PrecoderConfig(rho=1.0, lam=0.0, mu=0.0))


def test_run_matches_ridge_solution():
    # mu = 0, no peak bound: the fixed point is the regularized inverse
    h = gen_channel(8, 16, 1)
    s = gen_symbols(8, 2)
    cfg = PrecoderConfig(rho=1.0, lam=0.4)
    x, diag = run(h, s, cfg, max_iter=100, tol=1e-12)
    expect = np.linalg.solve(
        h.entries.conj().T @ h.entries + cfg.lam * np.eye(16),
        h.entries.conj().T @ s,
    )
    assert np.allclose(x, expect, atol=1e-6)
    assert diag.converged
    assert len(diag.objective) == diag.iterations


def test_run_tracks_oracle_objective():
    h = gen_channel(4, 16, 3)
    s = gen_symbols(4, 4)
    cfg = PrecoderConfig(rho=1.0, lam=0.3, mu=0.05)
    x, _ = run(h, s, cfg, max_iter=200, tol=1e-10, damping=0.8)
    report = solve_glse(h.entries, s, cfg, tol=1e-9)
    gap = objective(h.entries, s, cfg, x) - report.objective
    assert gap / abs(report.objective) < 1e-3


def test_run_escapes_zero_start():
    # strong l1 weight: the first sweep keeps x = 0, but the run must not
    # declare convergence there
    h = gen_channel(8, 16, 5)
    s = gen_symbols(8, 6)
    cfg = PrecoderConfig(rho=1.0, lam=0.03, mu=0.4)
    x, diag = run(h, s, cfg, max_iter=20)
    assert np.linalg.norm(x) > 0
    assert diag.iterations > 1


def test_run_peak_bound_exact():
    h = gen_channel(8, 16, 7)
    s = gen_symbols(8, 8)
    cfg = PrecoderConfig(rho=1.0, lam=0.1, mu=0.0, p_max=0.15)
    x, _ = run(h, s, cfg, max_iter=20)
    assert np.max(np.abs(x) ** 2) <= cfg.p_max


def test_run_divergence_carries_trace(monkeypatch):
    monkeypatch.setattr(engine, "DIVERGENCE_LIMIT", 1e-12)
    h = gen_channel(4, 8, 9)
    s = gen_symbols(4, 10)
    cfg = PrecoderConfig(rho=1.0, lam=0.3, mu=0.0)
    with pytest.raises(Divergence) as exc:
        run(h, s, cfg, max_iter=20)
    assert exc.value.trace is not None
    assert exc.value.trace.diverged


def test_run_argument_validation():
    h = gen_channel(2, 4, 0)
    s = gen_symbols(2, 0)
    cfg = PrecoderConfig(rho=1.0, lam=0.3)
    with pytest.raises(InvalidConfig):
        run(h, s, cfg, max_iter=0)
    with pytest.raises(InvalidConfig):
        run(h, s, cfg, damping=1.5)


def test_sweep_objective_decreases_overall():
    h = gen_channel(8, 32, 11)
    s = gen_symbols(8, 12)
    cfg = PrecoderConfig(rho=1.0, lam=0.5, mu=0.0)
    _, diag = run(h, s, cfg, max_iter=30, tol=1e-12)
    assert diag.objective[-1] < diag.objective[0]


def test_diagnostics_csv_rows():
    h = gen_channel(4, 8, 13)
    s = gen_symbols(4, 14)
    cfg = PrecoderConfig(rho=1.0, lam=0.3)
    _, diag = run(h, s, cfg, max_iter=5, tol=0.0)
    rows = diag.csv_rows()
    assert len(rows) == 5
    assert rows[0][0] == 1 and len(rows[0]) == 4


def test_sweep_is_pure_given_ops():
    h = gen_channel(4, 8, 15)
    s = gen_symbols(4, 16)
    cfg = PrecoderConfig(rho=1.0, lam=0.2, mu=0.1)
    ops = ChannelOps(h.entries)
    s1, _ = sweep(init_state(h, cfg), h, s, cfg, ops=ops)
    s2, _ = sweep(init_state(h, cfg), h, s, cfg, ops=ops)
    assert np.array_equal(s1.x, s2.x)
    assert np.array_equal(s1.r_x, s2.r_x)


def test_time_sweep_returns_positive():
    assert time_sweep(16, 32, repeats=2, seed=0) > 0.0
