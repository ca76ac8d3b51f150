"""Coupling-optimizer checks: closed-form constraint elimination, scaling
laws and determinism."""

import numpy as np
import pytest

from uscsim.circuit import CircuitSpec
from uscsim.constants import GHZ
from uscsim.modes import derive_parameters
from uscsim.optimize import (DEFAULT_BOUNDS, OptimizationProblem, _evaluate,
                             optimize_coupling, solve_junction_inductance,
                             solve_shunt_capacitance, sweep_cq)

W0_TARGET = 2.0 * GHZ
EC_TARGET = 0.3 * GHZ


def small_problem(**overrides):
    kwargs = dict(omega0_target=W0_TARGET, e_c_target=EC_TARGET,
                  c_0=0.1, c_q=85.0, restarts=1, n_sweep=2, seed=0)
    kwargs.update(overrides)
    return OptimizationProblem(**kwargs)


def test_shunt_capacitance_hits_charging_target(default_spec):
    c_s = solve_shunt_capacitance(default_spec, EC_TARGET)
    from dataclasses import replace
    tuned = replace(default_spec, c_s=c_s)
    e_c = derive_parameters(tuned, n_report=1)[3].e_c
    assert e_c == pytest.approx(EC_TARGET, rel=1e-10)


def test_junction_inductance_hits_frequency_target(default_spec):
    l_j = solve_junction_inductance(default_spec, W0_TARGET)
    from dataclasses import replace
    tuned = replace(default_spec, l_j=l_j)
    w0 = derive_parameters(tuned, n_report=1)[3].mode_freq[0]
    assert w0 == pytest.approx(W0_TARGET, rel=1e-10)


def test_fast_and_slow_paths_agree():
    problem = small_problem()
    for (n, c_j, c_e) in ((100, 30.0, 72.0), (200, 12.0, 40.0)):
        fast = _evaluate(problem, n, c_j, c_e, 26.0, fast=True)
        slow = _evaluate(problem, n, c_j, c_e, 26.0, fast=False)
        assert fast["objective"] == pytest.approx(slow["objective"],
                                                  rel=1e-8)
        assert slow["resid_w0"] < 1e-8
        assert slow["resid_ec"] < 1e-8


def test_reference_point_objective(default_spec):
    """Evaluating at the reference design's own coordinates reproduces the
    pipeline's coupling ratio."""
    params = derive_parameters(default_spec)[3]
    problem = OptimizationProblem(
        omega0_target=params.mode_freq[0], e_c_target=params.e_c,
        c_0=default_spec.c_0, c_q=default_spec.c_q,
        ej_over_ec=params.e_j / params.e_c, restarts=1, n_sweep=1, seed=0)
    ev = _evaluate(problem, default_spec.n_junctions, default_spec.c_j,
                   default_spec.c_e, default_spec.c_i)
    direct = params.coupling[0] / params.mode_freq[0]
    assert ev["objective"] == pytest.approx(direct, abs=0.02)
    assert ev["resid_w0"] < 1e-6 and ev["resid_ec"] < 1e-6


def test_decoupled_qubit_gives_zero():
    result = optimize_coupling(small_problem(c_q=0.0))
    assert result.objective == 0.0


def test_optimizer_deterministic_and_feasible():
    bounds = dict(DEFAULT_BOUNDS)
    bounds["n"] = (120, 160)
    a = optimize_coupling(small_problem(bounds=bounds))
    b = optimize_coupling(small_problem(bounds=bounds))
    assert a.feasible
    assert a.objective == b.objective
    assert a.best_spec == b.best_spec
    assert a.constraint_residuals["omega0"] < 1e-3
    assert a.constraint_residuals["e_c"] < 1e-3
    # audit trail records every simplex restart x junction count
    assert len(a.trace) == 2
    row = a.to_row()
    assert row["g0_over_w0"] == a.objective


def test_reference_cell_reaches_paper_level():
    bounds = dict(DEFAULT_BOUNDS)
    bounds["n"] = (100, 200)
    result = optimize_coupling(small_problem(restarts=2, n_sweep=2,
                                             bounds=bounds))
    assert result.feasible
    assert result.objective >= 0.55


def test_problem_validation():
    with pytest.raises(ValueError):
        small_problem(omega0_target=-1.0)
    with pytest.raises(ValueError):
        small_problem(restarts=0)
    bad = dict(DEFAULT_BOUNDS)
    del bad["c_j"]
    with pytest.raises(ValueError):
        small_problem(bounds=bad)


def test_sweep_grid_shape_and_smoothing():
    bounds = dict(DEFAULT_BOUNDS)
    bounds["n"] = (80, 120)
    problem = small_problem(bounds=bounds)
    grid = sweep_cq(problem, cq_values=[40.0, 85.0], c0_values=[0.1])
    obj = grid.objective_grid()
    assert obj.shape == (1, 2)
    assert np.all(np.isfinite(obj))
    assert np.all(np.diff(grid.smoothed, axis=1) >= 0.0)
    with pytest.raises(ValueError):
        sweep_cq(problem, cq_values=[], c0_values=[0.1])


def test_sweep_csv(tmp_path):
    bounds = dict(DEFAULT_BOUNDS)
    bounds["n"] = (80, 120)
    grid = sweep_cq(small_problem(bounds=bounds),
                    cq_values=[40.0, 85.0], c0_values=[0.1])
    path = tmp_path / "grid.csv"
    grid.to_csv(str(path))
    import csv
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert float(rows[1]["c_q_fF"]) == 85.0
    assert float(rows[0]["g0_over_w0"]) == pytest.approx(
        grid.objective_grid()[0, 0], rel=1e-6)
