import math

import numpy as np
import pytest
from scipy import integrate

from wpbc import analytic
from wpbc.analytic import (QuadSpec, QuadratureError, capacity_approx, charfun, charfun_inter,
                           charfun_intra, critical_s, feasible_region, inter_tail_bound,
                           optimal_duty_matern, power_outage, q_kernel, q_profile,
                           success_lower_bound, tx_power_ccdf)
from wpbc.geometry import Matern, Thomas, radial_cdf, radial_pdf
from wpbc.power import ModelConfig, distance_threshold, min_tx_power

DEF = ModelConfig()
LIGHT = ModelConfig(lambda_p=0.002, c_bar=1.0, theta=0.01)


def test_quadspec_validation():
    for bad in ({"rel_tol": 0}, {"abs_tol": -1}, {"max_subdivisions": 0},
                {"outer_truncation_radius": math.inf}):
        with pytest.raises(ValueError):
            QuadSpec(**bad)


# --- kernel -----------------------------------------------------------------

def _kernel_dblquad(s, w, cfg):
    K = s * cfg.beta * cfg.eta * cfg.g
    d0 = distance_threshold(cfg)

    def f(phi, r):
        x = np.array([r * math.cos(phi), r * math.sin(phi)])
        dist = np.hypot(*(x - w))
        return radial_pdf(cfg.cluster, r) * r / (1 + r**cfg.alpha1 * dist**cfg.alpha2 / K)

    val, _ = integrate.dblquad(f, 0, d0, 0, 2 * math.pi, epsabs=1e-10, epsrel=1e-8)
    return val


@pytest.mark.parametrize("cfg", [DEF, DEF.replace(cluster=Matern(5.0), alpha2=4.0)])
@pytest.mark.parametrize("s, w", [(1.0, (0.7, 0.2)), (79.9, (-3.0, 4.0)), (5.0, (20.0, 0.0))])
def test_kernel_matches_brute_force(cfg, s, w):
    ref = _kernel_dblquad(s, np.array(w), cfg)
    q = q_kernel(s, np.array(w) - np.array([0.0, 1.0]), [0.0, 1.0], cfg)
    assert float(q) == pytest.approx(ref, rel=2e-4, abs=1e-9)


def test_kernel_limits():
    assert q_kernel(0.0, [1, 0], [0, 1], DEF) == 0.0
    assert q_kernel(5.0, [1, 0], [0, 1], DEF.replace(beta=1e-12)) < 1e-6
    big = q_kernel(1e14, [1, 0], [0, 1], DEF)
    assert float(big) == pytest.approx(radial_cdf(DEF.cluster, distance_threshold(DEF)), rel=1e-6)
    with pytest.raises(ValueError):
        q_kernel(-1.0, [1, 0], [0, 1], DEF)


def test_kernel_rotation_invariant():
    y = np.array([2.0, -1.0])
    z0, z1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert q_kernel(10.0, y, z0, DEF) == pytest.approx(q_kernel(10.0, rot @ y, z1, DEF), rel=1e-12)


def test_kernel_nonconvergence_raises():
    with pytest.raises(QuadratureError) as info:
        q_kernel(79.9, [1, 0], [0, 1], DEF, QuadSpec(rel_tol=1e-14, abs_tol=1e-300,
                                                      max_subdivisions=1))
    assert info.value.error > 0


# --- Laplace functionals ----------------------------------------------------

def _polar_rule(n_r, n_phi, r_max):
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * r_max * (x + 1)
    wr = 0.5 * r_max * w
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    R, P = np.meshgrid(r, phi, indexing="ij")
    W = (wr * r)[:, None] * np.full(n_phi, 2 * np.pi / n_phi)[None, :]
    return R.ravel(), P.ravel(), W.ravel()


@pytest.mark.parametrize("direction", [0.0, math.pi / 2])
def test_intra_functional_matches_2d_integral(direction):
    s, cfg = 10.0, DEF
    mu = cfg.c_bar * cfg.duty_cycle
    z = cfg.d2d_distance * np.array([math.cos(direction), math.sin(direction)])
    r, phi, w = _polar_rule(60, 48, 12.5)
    y = np.column_stack((r * np.cos(phi), r * np.sin(phi)))
    q, _, _ = q_profile(s, np.hypot(*(z - y).T), cfg)
    brute = np.sum(w * radial_pdf(cfg.cluster, r) * np.exp(-mu * q))
    assert float(charfun_intra(s, cfg)) == pytest.approx(brute, rel=2e-4)


@pytest.mark.parametrize("direction", [0.0, math.pi / 2])
def test_inter_functional_matches_2d_integral(direction):
    s, cfg, R = 3.0, DEF, 12.0
    mu = cfg.c_bar * cfg.duty_cycle
    quad = QuadSpec(outer_truncation_radius=R)
    z = cfg.d2d_distance * np.array([math.cos(direction), math.sin(direction)])
    r, phi, w = _polar_rule(80, 64, R)
    b = np.column_stack((r * np.cos(phi), r * np.sin(phi)))
    q, _, _ = q_profile(s, np.hypot(*(z - b).T), cfg, quad)
    brute = math.exp(-cfg.lambda_p * np.sum(w * -np.expm1(-mu * q)))
    assert float(charfun_inter(s, cfg, quad)) == pytest.approx(brute, rel=1e-3)


@pytest.mark.parametrize("intra", [True, False])
def test_functionals_match_simulation_at_critical_s(intra):
    # small window keeps the inter-cluster value large enough for MC to resolve
    from wpbc.mc_engine import SimConfig, simulate
    s, R = 79.9, 5.0
    quad = QuadSpec(outer_truncation_radius=R)
    sim = SimConfig(DEF, window_radius=R, trials=20000, seed=1,
                    include_intra=intra, include_inter=not intra)
    est = simulate(sim, [s])["laplace"][0]
    exact = charfun_intra(s, DEF, quad) if intra else charfun_inter(s, DEF, quad)
    assert abs(est.value - float(exact)) < 3.0 * est.std_error


def test_functionals_trivial_cases():
    assert charfun_intra(0.0, DEF) == 1.0
    assert charfun_inter(0.0, DEF) == 1.0
    assert charfun_intra(5.0, DEF.replace(c_bar=0.0)) == 1.0
    assert charfun_inter(5.0, DEF.replace(lambda_p=0.0)) == 1.0


@pytest.mark.parametrize("cfg", [DEF, DEF.replace(cluster=Matern(10.0))])
def test_functionals_bounded_and_nonincreasing(cfg):
    quad = QuadSpec(outer_truncation_radius=30.0)
    prev_a = prev_b = 1.0
    for s in (0.5, 2.0, 10.0, 50.0):
        a = charfun_intra(s, cfg, quad)
        b = charfun_inter(s, cfg, quad)
        assert 0.0 <= a <= prev_a + a.error
        assert 0.0 <= b <= prev_b + b.error
        prev_a, prev_b = a, b


@pytest.mark.parametrize("s", [1.0, 79.9])
def test_halving_tolerance_stays_within_error_estimate(s):
    for fn in (charfun_intra, charfun_inter):
        coarse = fn(s, DEF, QuadSpec())
        fine = fn(s, DEF, QuadSpec(rel_tol=0.5e-4))
        assert abs(float(fine) - float(coarse)) < coarse.error


def test_truncation_tail_bound():
    assert inter_tail_bound(10.0, DEF) == math.inf
    cfg = DEF.replace(alpha2=4.0)
    near, far = QuadSpec(outer_truncation_radius=30.0), QuadSpec(outer_truncation_radius=60.0)
    bound = inter_tail_bound(2.0, cfg, near)
    assert 0.0 < bound < math.inf
    b_near = charfun_inter(2.0, cfg, near)
    b_far = charfun_inter(2.0, cfg, far)
    assert b_far <= b_near + b_near.error
    assert b_far >= b_near * math.exp(-bound) - b_near.error
    assert inter_tail_bound(0.0, cfg) == 0.0


# --- closed forms -----------------------------------------------------------

def test_power_outage_values():
    d0 = distance_threshold(DEF)
    assert power_outage(DEF) == pytest.approx(math.exp(-d0**2 / 8.0), rel=1e-12)
    assert power_outage(DEF) == pytest.approx(6.9e-8, rel=0.02)
    assert power_outage(DEF.replace(cluster=Matern(20.0))) == pytest.approx(0.67003, abs=1e-4)
    assert power_outage(DEF.replace(cluster=Matern(2.0))) == 0.0


@pytest.mark.parametrize("cluster", [Thomas(4.0), Matern(20.0), Matern(2.0)])
def test_ccdf_consistency_identity(cluster):
    cfg = DEF.replace(cluster=cluster)
    assert tx_power_ccdf(min_tx_power(cfg), cfg) == pytest.approx(1.0 - power_outage(cfg),
                                                                  rel=1e-10)


def test_ccdf_support_and_limits():
    cfg = DEF.replace(cluster=Matern(20.0))
    with pytest.raises(ValueError):
        tx_power_ccdf(0.5 * min_tx_power(cfg), cfg)
    small = DEF.replace(cluster=Matern(2.0))
    assert tx_power_ccdf(0.9 * cfg.beta * cfg.eta / 2.0**cfg.alpha1, small) == 1.0
    assert tx_power_ccdf(cfg.beta * cfg.eta / 2.0**cfg.alpha1, small) == pytest.approx(1.0)
    assert tx_power_ccdf(1e30, cfg) < 1e-15
    taus = min_tx_power(DEF) * np.array([1, 2, 5, 20, 100])
    vals = [tx_power_ccdf(t, DEF) for t in taus]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_success_bound_limits():
    for cfg in (DEF, DEF.replace(cluster=Matern(20.0))):
        p0 = power_outage(cfg)
        quad = QuadSpec(outer_truncation_radius=30.0)
        assert success_lower_bound(cfg, quad) <= 1.0 - p0
        assert float(success_lower_bound(cfg.replace(theta=1e-14), quad)) == pytest.approx(
            1.0 - p0, rel=1e-6)
        quiet = cfg.replace(lambda_p=0.0, c_bar=0.0)
        assert float(success_lower_bound(quiet, quad)) == pytest.approx(1.0 - p0)
    with pytest.raises(ValueError):
        success_lower_bound(DEF.replace(beta=0.0))
    assert critical_s(DEF) == pytest.approx(DEF.theta * 0.76 / (0.6 * DEF.P_c))


def test_capacity_approximation():
    m = DEF.replace(cluster=Matern(20.0))
    d0 = distance_threshold(m)
    printed = m.lambda_p * m.c_bar * m.duty_cycle / 400.0 * (
        m.eta * m.g * (1 - m.beta * m.duty_cycle) / m.P_c) ** (2 / m.alpha1)
    assert capacity_approx(m) == pytest.approx(printed, rel=1e-12)
    assert capacity_approx(m) == pytest.approx(0.0006 * d0**2, rel=1e-12)
    assert capacity_approx(m) == pytest.approx(0.0792, abs=2e-4)
    assert capacity_approx(m.replace(duty_cycle=0.0)) == 0.0
    small = m.replace(cluster=Matern(2.0))
    assert capacity_approx(small) == pytest.approx(0.2 * 3 * 0.4)


def test_capacity_continuous_across_matern_branch():
    base = DEF.replace(cluster=Matern(20.0))
    d0 = distance_threshold(base)
    left = capacity_approx(base.replace(cluster=Matern(d0 * (1 - 1e-9))))
    right = capacity_approx(base.replace(cluster=Matern(d0 * (1 + 1e-9))))
    assert left == pytest.approx(right, rel=1e-7)


# --- duty-cycle optimum -----------------------------------------------------

def _grid_argmax(alpha1, beta):
    D = np.arange(1, 10001) * 1e-4
    D = D[D * beta < 1]
    return D[np.argmax(D * (1 - beta * D) ** (2 / alpha1))]


def test_optimal_duty_cases():
    m = DEF.replace(cluster=Matern(20.0))
    r = optimal_duty_matern(m.replace(beta=1e-6))
    assert r.D_star == pytest.approx(1.0)
    r = optimal_duty_matern(m)
    assert r.D_star == pytest.approx(_grid_argmax(3.0, 0.6), abs=1e-4)
    assert r.candidate_min_form == pytest.approx(0.78947, abs=1e-5)
    assert r.candidate_stationary == 1.0
    assert r.confirmed == "stationary"
    r = optimal_duty_matern(m.replace(beta=1.0, duty_cycle=0.5))
    assert r.D_star == pytest.approx(0.6, abs=1e-4)
    assert r.confirmed == "both"
    with pytest.raises(ValueError):
        optimal_duty_matern(DEF)


# --- feasible region --------------------------------------------------------

def test_region_near_one_epsilon_accepts_everything_valid():
    quad = QuadSpec(outer_truncation_radius=20.0)
    reg = feasible_region(LIGHT, 0.5, 0.5, quad)
    assert reg.D_values.tolist() == [0.0, 0.5, 1.0]
    valid = (reg.beta_values[None, :] > 0) & (np.outer(reg.D_values, reg.beta_values) < 1)
    cmin = np.nanmin(reg.charfun[valid])
    reg = feasible_region(LIGHT, 1.0 - 0.5 * cmin, 0.5, quad)
    assert np.array_equal(reg.feasible, valid)
    assert not reg.failed.any()


def test_region_small_epsilon_dense_network_is_empty():
    reg = feasible_region(DEF.replace(lambda_p=2.0), 1e-6, 0.5, QuadSpec(outer_truncation_radius=20.0))
    interfering = reg.D_values[:, None] > 0
    assert not (reg.feasible & interfering).any()


def test_region_monotone_in_beta_within_rows():
    reg = feasible_region(LIGHT, 0.2, 0.25, QuadSpec(outer_truncation_radius=20.0))
    for i in range(reg.D_values.size):
        row = reg.feasible[i][reg.beta_values > 0]
        vals = reg.charfun[i][reg.beta_values > 0]
        ok = ~np.isnan(vals)
        assert np.all(np.diff(vals[ok]) >= -1e-9)
        # once feasible, stays feasible as beta grows
        first = np.argmax(row) if row.any() else row.size
        assert row[first:][ok[first:]].all()


def test_region_flags_quadrature_failures():
    reg = feasible_region(DEF, 0.5, 0.5, QuadSpec(rel_tol=1e-14, abs_tol=1e-300,
                                                 max_subdivisions=1, outer_truncation_radius=20.0))
    assert reg.failed.any()
    assert not (reg.feasible & reg.failed).any()
    with pytest.raises(ValueError):
        feasible_region(DEF, 1.0, 0.5)
    with pytest.raises(ValueError):
        feasible_region(DEF, 0.5, 0.6)
