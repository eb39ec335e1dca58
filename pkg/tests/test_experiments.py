import csv
import io

import numpy as np
import pytest

from sparse_legendre.experiments import (
    WORKERS_ENV, PhaseDiagram, TrialConfig, default_workers, grid_values, phase_diagram,
    run_cell, run_trial, run_trials, solve_instance,
)
from sparse_legendre.orthopoly import OrthoBasis
from sparse_legendre.sampling import ConfigurationError, derive_seed


def test_zero_sparsity_always_succeeds():
    for method in ("BP", "CoSaMP", "IHT"):
        summary = run_trials(TrialConfig(30, 10, 0, method=method, n_trials=100), workers=1)
        assert summary.success_rate == 1.0
        assert summary.max_l2_error == 0.0


@pytest.mark.parametrize("kwargs", [
    dict(N=10, m=12, s=2), dict(N=10, m=5, s=6), dict(N=10, m=5, s=-1),
    dict(N=10, m=5, s=2, eps=0.1), dict(N=10, m=5, s=2, method="lasso"),
    dict(N=10, m=5, s=2, noise_std=-1.0), dict(N=10, m=5, s=2, n_trials=0),
])
def test_config_violations(kwargs):
    with pytest.raises(ConfigurationError):
        TrialConfig(**kwargs)


def test_method_names_normalized():
    assert TrialConfig(10, 5, 1, method="cosamp").method == "CoSaMP"
    assert TrialConfig(10, 5, 1, method="bpdn", eps=0.1).method == "BPDN"


def test_trial_seeds_are_derived():
    cfg = TrialConfig(20, 10, 2, base_seed=99, n_trials=5)
    summary = run_trials(cfg, workers=1)
    assert [t.seed for t in summary.trials] == [derive_seed(99, i) for i in range(5)]
    assert [t.index for t in summary.trials] == list(range(5))


def test_trial_independent_of_batching():
    cfg = TrialConfig(40, 16, 3, base_seed=3, n_trials=6)
    serial = run_trials(cfg, workers=1)
    parallel = run_trials(cfg, workers=3)
    assert serial.to_dict() == parallel.to_dict()
    assert run_trial(cfg, 4) == serial.trials[4]


def test_instance_streams():
    cfg = TrialConfig(40, 16, 3, noise_std=0.1, eps=0.1, method="BPDN")
    a = solve_instance(cfg, 5)
    b = solve_instance(cfg, 5)
    assert np.array_equal(a.truth, b.truth) and np.array_equal(a.estimate, b.estimate)
    assert np.count_nonzero(a.truth) == 3
    clean = solve_instance(TrialConfig(40, 16, 3), 5)
    # same seed gives the same samples and signal with or without noise
    assert np.array_equal(clean.truth, a.truth)
    assert np.array_equal(clean.system.samples.points, a.system.samples.points)


def test_summary_serializes():
    d = run_trials(TrialConfig(20, 10, 2, n_trials=3), workers=1).to_dict()
    assert d["config"]["basis"] == "legendre"
    assert len(d["trials"]) == 3 and 0 <= d["success_rate"] <= 1


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert default_workers() == 3
    monkeypatch.delenv(WORKERS_ENV)
    assert default_workers() >= 1


def test_grid_values():
    assert grid_values(8) == pytest.approx([0.7 * k / 8 for k in range(1, 9)])
    assert grid_values(2, 0.5) == [0.25, 0.5]


def test_cell_examples():
    assert run_cell(60, 0.1, 0.6, 25, 7) == 1.0
    assert run_cell(60, 0.7, 0.1, 25, 7) <= 0.1


def test_cell_rounding():
    # m/N = 0.01 of N=20 rounds to m=0 and is lifted to 1
    assert 0.0 <= run_cell(20, 0.01, 0.01, 2, 1) <= 1.0


def test_phase_diagram_structure_and_order_independence():
    pd = phase_diagram(20, 3, 3, 11, workers=1)
    values = grid_values(3)
    assert [(r[0], r[1]) for r in pd.grid] == [(a, b) for b in values for a in values]
    assert all(0.0 <= r[2] <= 1.0 and r[3] == 3 for r in pd.grid)
    shuffled = phase_diagram(20, 3, 3, 11, workers=1, order=[8, 2, 5, 0, 7, 1, 4, 6, 3])
    assert shuffled.grid == pd.grid
    pooled = phase_diagram(20, 3, 3, 11, workers=2)
    assert pooled.grid == pd.grid


def test_phase_diagram_csv():
    pd = phase_diagram(20, 2, 2, 5, workers=1)
    text = pd.to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["s_over_m", "m_over_n", "success_rate", "trials"]
    assert len(rows) == 5
    assert rows[1][:2] == ["0.350000", "0.350000"]
    assert all(len(v.split(".")[1]) == 6 for r in rows[1:] for v in r[:3])
    assert pd.to_dict()["grid"][0]["trials"] == 2


def test_phase_diagram_column():
    pd = PhaseDiagram(10, [(0.1, 0.5, 1.0, 4), (0.2, 0.5, 0.5, 4), (0.1, 0.7, 1.0, 4)], 0, 1e-4)
    assert [r[0] for r in pd.column(0.5)] == [0.1, 0.2]


def test_phase_diagram_steps_guard():
    with pytest.raises(ValueError):
        phase_diagram(20, 1, 2, 0)


def test_other_basis_runs():
    cfg = TrialConfig(30, 15, 2, basis=OrthoBasis.chebyshev(), n_trials=5)
    assert run_trials(cfg, workers=1).success_rate >= 0.8


def test_cosamp_close_to_bp():
    rates = {m: run_trials(TrialConfig(80, 20, 5, method=m, base_seed=0, n_trials=100),
                           workers=1).success_rate for m in ("BP", "CoSaMP")}
    assert abs(rates["CoSaMP"] - rates["BP"]) <= 0.15


def test_noisy_trials_bounded():
    cfg = TrialConfig(80, 20, 5, noise_std=0.025 ** 0.5, eps=0.16, method="BPDN", n_trials=20)
    summary = run_trials(cfg, workers=1)
    assert summary.mean_l2_error <= 1.6
    assert all(t.converged for t in summary.trials)
