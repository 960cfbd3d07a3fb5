import dataclasses

import numpy as np
import pytest

from wpbc import analytic
from wpbc.analytic import QuadSpec
from wpbc.geometry import Matern, Thomas
from wpbc.mc_engine import SimConfig
from wpbc.optimize import OptProblem, make_objective, maximize, maximize_1d, maximize_joint
from wpbc.power import ModelConfig

MATERN = ModelConfig(cluster=Matern(20.0))
QUAD = QuadSpec(outer_truncation_radius=20.0)


def test_problem_validation():
    with pytest.raises(ValueError):
        OptProblem(objective="bogus")
    with pytest.raises(ValueError):
        OptProblem(variable="theta")
    with pytest.raises(ValueError):
        OptProblem(D_bounds=(0.5, 0.2))
    with pytest.raises(ValueError):
        OptProblem(budget=2)


def test_capacity_duty_cycle_matches_grid_optimum():
    for beta in (0.6, 1.0, 0.9):
        cfg = MATERN.replace(beta=beta, duty_cycle=0.5)
        r = maximize_1d(OptProblem("capacity_approx", "D"), cfg)
        ref = analytic.optimal_duty_matern(cfg)
        assert r.arg == pytest.approx(ref.D_star, abs=1e-3)
        assert r.value == pytest.approx(analytic.capacity_approx(cfg.replace(duty_cycle=r.arg)))


def test_golden_section_finds_interior_maximum():
    # beta = 1 gives an interior optimum at D = 0.6
    cfg = MATERN.replace(beta=1.0, duty_cycle=0.5)
    r = maximize_1d(OptProblem("capacity_approx", "D", budget=80, xtol=1e-6), cfg)
    assert r.arg == pytest.approx(0.6, abs=1e-5)
    assert r.unimodal


def test_interval_shrinks_to_keep_product_below_one():
    cfg = MATERN.replace(beta=0.5, duty_cycle=1.0)
    r = maximize_1d(OptProblem("capacity_approx", "beta", beta_bounds=(0.05, 1.0)), cfg)
    assert r.arg * 1.0 < 1.0
    assert all(e.x < 1.0 for e in r.trace)


def test_constant_objective():
    cfg = ModelConfig(lambda_p=0.0, c_bar=0.0, cluster=Matern(2.0))
    r = maximize_1d(OptProblem("success_lower_bound", "D"), cfg, QUAD)
    assert r.value == 1.0
    assert 0.0 <= r.arg <= 1.0


def test_returned_value_is_fresh():
    cfg = ModelConfig()
    r = maximize_1d(OptProblem("success_lower_bound", "beta", budget=30), cfg, QUAD)
    again = analytic.success_lower_bound(cfg.replace(beta=r.arg), QUAD)
    assert r.value == float(again)


def test_non_unimodal_grid_is_reported(monkeypatch):
    from wpbc import optimize as opt

    def bumpy(problem, cfg, variable, ctx=None):
        return lambda x: opt.Evaluation(x, float(np.cos(4 * np.pi * x)), 0.0)

    monkeypatch.setattr(opt, "make_objective", bumpy)
    r = opt.maximize_1d(OptProblem("capacity_approx", "D"), MATERN)
    assert not r.unimodal
    assert r.value == 1.0
    assert r.arg in (0.0, 0.5, 1.0)
    assert len(r.trace) == 21


def test_joint_trace_is_monotone_and_converges():
    cfg = MATERN.replace(duty_cycle=0.5, beta=0.5)
    r = maximize_joint(OptProblem("capacity_approx", "joint", budget=400), cfg)
    vals = [t[2] for t in r.trace]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert r.converged
    assert r.value == pytest.approx(analytic.capacity_approx(cfg.replace(duty_cycle=r.D, beta=r.beta)))


def test_joint_budget_exhaustion_reports_best():
    r = maximize_joint(OptProblem("capacity_approx", "joint", budget=10), MATERN)
    assert not r.converged
    assert "budget" in r.message
    assert r.evaluations <= 10


def test_separable_objective_settles_after_one_sweep():
    # capacity with d0 >= a is lambda c D, independent of beta
    cfg = ModelConfig(cluster=Matern(2.0), duty_cycle=0.5, beta=0.5)
    r = maximize_joint(OptProblem("capacity_approx", "joint", budget=400), cfg)
    assert r.D == pytest.approx(1.0, abs=1e-3)
    assert len(r.trace) == 5      # start, one sweep that moves, one confirming sweep
    assert r.trace[2] == r.trace[-1]


def test_mc_objective_is_deterministic():
    sim = SimConfig(ModelConfig(), window_radius=10.0, trials=300, seed=4)
    p = OptProblem("mc_success", "D", D_bounds=(0.2, 0.6), budget=12)
    a = maximize_1d(p, sim.model, sim)
    b = maximize_1d(p, sim.model, sim)
    assert (a.arg, a.value) == (b.arg, b.value)
    f = make_objective(p, sim.model, "D", sim)
    assert f(a.arg).value == a.value


def test_mc_beta_uses_common_random_numbers():
    sim = SimConfig(ModelConfig(), window_radius=10.0, trials=300, seed=4)
    r = maximize(OptProblem("mc_capacity", "beta", budget=25), sim.model, sim)
    f = make_objective(OptProblem("mc_capacity", "beta"), sim.model, "beta", sim)
    assert f(r.arg).value == r.value
    with pytest.raises(TypeError):
        maximize_1d(OptProblem("mc_success", "beta"), sim.model, QUAD)
