"""Numerical evaluation of the analytic performance expressions.

Interference seen by the typical receiver splits into the typical cluster's
siblings (``intra``) and the other clusters (``inter``). Both Laplace
functionals reduce to one-dimensional integrals of the kernel

    Q(rho) = int_{|x| <= d0} f(x) / (1 + |x|^a1 |x - w|^a2 / (s beta eta g)) dx,

which depends on the beacon-to-receiver offset ``w`` only through
``rho = |w|``. ``Q`` itself is a radial integral of an angular integral; all
three levels use the batched adaptive Gauss-Kronrod rule in
:mod:`wpbc.quadrature`, and error estimates are propagated outward.

The inter-cluster integral runs over beacons in the disk of radius
``QuadSpec.outer_truncation_radius`` around the typical node, the same
region the Monte Carlo engine samples. For large ``rho``,
``Q(rho) ~ rho^(-2 a2 / a1)``, so the untruncated exponent is finite only
when ``a2 > a1`` (see :func:`inter_tail_bound`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sopt
from scipy.special import i0e

from .geometry import Matern, Thomas, radial_pdf, support_radius
from .mc_engine import DEFAULT_WINDOW_RADIUS
from .power import ModelConfig, distance_threshold, min_tx_power
from .quadrature import integrate_batch

__all__ = [
    "QuadSpec",
    "QuadValue",
    "QuadratureError",
    "FeasibleRegion",
    "DutyOptimum",
    "q_kernel",
    "q_profile",
    "charfun_intra",
    "charfun_inter",
    "charfun",
    "inter_tail_bound",
    "power_outage",
    "tx_power_ccdf",
    "critical_s",
    "success_lower_bound",
    "capacity_approx",
    "optimal_duty_matern",
    "feasible_region",
]


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances and truncation for the analytic integrals.

    ``abs_tol`` doubles as the tail mass at which Gaussian cluster offsets
    are truncated. ``outer_truncation_radius`` is the radius of the beacon
    disk for inter-cluster interference and should match the Monte Carlo
    window it is compared against.
    """

    rel_tol: float = 1e-4
    abs_tol: float = 1e-8
    max_subdivisions: int = 200
    outer_truncation_radius: float = DEFAULT_WINDOW_RADIUS

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.abs_tol >= 1:
            raise ValueError("abs_tol must be < 1")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be an integer >= 1")
        if not (math.isfinite(self.outer_truncation_radius) and self.outer_truncation_radius > 0):
            raise ValueError("outer_truncation_radius must be positive and finite")


class QuadValue(float):
    """A float carrying the absolute error estimate of the integral behind it."""

    error: float

    def __new__(cls, value: float, error: float = 0.0):
        obj = super().__new__(cls, value)
        obj.error = float(error)
        return obj

    def __repr__(self):
        return f"QuadValue({float(self)!r}, error={self.error!r})"


class QuadratureError(ArithmeticError):
    """Adaptive quadrature hit its subdivision limit before meeting tolerance."""

    def __init__(self, message: str, value: float, error: float):
        super().__init__(f"{message} (value={value:.6g}, error estimate={error:.3g})")
        self.value = value
        self.error = error


# ---------------------------------------------------------------------------
# kernel


def _check_s(s) -> float:
    s = float(s)
    if not s >= 0:
        raise ValueError(f"s must be >= 0, got {s}")
    return s


def _kernel_radius(cfg: ModelConfig, quad: QuadSpec) -> float:
    return min(distance_threshold(cfg), support_radius(cfg.cluster, quad.abs_tol))


def q_profile(s: float, rho, cfg: ModelConfig, quad: QuadSpec = QuadSpec()):
    """Kernel ``Q`` at beacon-to-receiver distances ``rho``.

    Returns
    -------
    value, error, converged : numpy.ndarray
        Arrays shaped like ``rho``; ``error`` includes the propagated error of
        the inner angular integrals.
    """
    s = _check_s(s)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    m = rho.size
    K = s * cfg.beta * cfg.eta * cfg.g
    if K == 0.0 or m == 0:
        z = np.zeros(m)
        return z, z.copy(), np.ones(m, bool)
    if np.isinf(K):
        mass = _kernel_mass(cfg, quad)
        return np.full(m, mass), np.zeros(m), np.ones(m, bool)
    a1, a2 = cfg.alpha1, cfg.alpha2
    rmax = _kernel_radius(cfg, quad)
    model = cfg.cluster
    inner_rel = 0.1 * quad.rel_tol
    inner_abs = 0.1 * quad.abs_tol

    def radial(r, owner):
        p = rho[owner]
        # angular integrand over phi in (0, pi); x at angle phi from w
        scale = r**a1 / K
        ell = (1.0 / scale) ** (1.0 / a2)
        with np.errstate(divide="ignore", invalid="ignore"):
            cphi = (r * r + p * p - ell * ell) / (2.0 * r * p)
        brk = np.where(np.abs(cphi) < 1.0, np.arccos(np.clip(cphi, -1.0, 1.0)), np.nan)

        def angular(phi, j):
            rj = r[j]
            pj = p[j]
            d2 = rj * rj + pj * pj - 2.0 * rj * pj * np.cos(phi)
            return 1.0 / (1.0 + scale[j] * np.maximum(d2, 0.0) ** (0.5 * a2))

        inner = integrate_batch(angular, np.zeros(r.size), np.full(r.size, np.pi),
                                breakpoints=brk[:, None], rel_tol=inner_rel,
                                abs_tol=inner_abs, max_subdivisions=quad.max_subdivisions)
        w = 2.0 * radial_pdf(model, r) * r
        return np.column_stack((w * inner.value, w * inner.error))

    # kinks where |x| passes rho and where the two path-loss terms balance
    with np.errstate(divide="ignore", over="ignore"):
        rstar = (K / rho**a2) ** (1.0 / a1)
    brk = np.column_stack((rho, rstar))
    res = integrate_batch(radial, np.zeros(m), np.full(m, rmax), breakpoints=brk,
                          rel_tol=quad.rel_tol, abs_tol=quad.abs_tol,
                          max_subdivisions=quad.max_subdivisions)
    return res.value[:, 0], res.error + res.value[:, 1], res.converged


def _kernel_mass(cfg: ModelConfig, quad: QuadSpec) -> float:
    from .geometry import radial_cdf
    return float(radial_cdf(cfg.cluster, _kernel_radius(cfg, quad)))


def q_kernel(s: float, y, z, cfg: ModelConfig, quad: QuadSpec = QuadSpec()) -> QuadValue:
    """Kernel for a beacon at ``y`` and receiver offset ``z``.

    The interfering node sits at ``x - y - z`` relative to the receiver, with
    ``x`` its offset from the beacon. Only ``|y + z|`` matters.

    Raises
    ------
    QuadratureError
        If the adaptive rule does not converge.
    """
    y = np.asarray(y, dtype=float).reshape(2)
    z = np.asarray(z, dtype=float).reshape(2)
    val, err, ok = q_profile(s, np.hypot(*(y + z)), cfg, quad)
    if not ok[0]:
        raise QuadratureError("kernel integral did not converge", float(val[0]), float(err[0]))
    return QuadValue(float(val[0]), float(err[0]))


# ---------------------------------------------------------------------------
# Laplace functionals


def _offset_density(cfg: ModelConfig, rho):
    """Density of ``|z + V|`` on ``rho > 0`` with ``|z| = d2d`` and ``V ~ f``."""
    d = cfg.d2d_distance
    model = cfg.cluster
    if isinstance(model, Thomas):
        s2 = model.sigma2
        return rho / s2 * np.exp(-((rho - d) ** 2) / (2.0 * s2)) * i0e(rho * d / s2)
    a = model.a
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (rho * rho + d * d - a * a) / (2.0 * rho * d)
    return 2.0 * rho * np.arccos(np.clip(c, -1.0, 1.0)) / (np.pi * a * a)


def _intra_limits(cfg: ModelConfig, quad: QuadSpec):
    d = cfg.d2d_distance
    model = cfg.cluster
    if isinstance(model, Matern):
        return max(0.0, d - model.a), d + model.a, [abs(d - model.a)]
    ext = support_radius(model, quad.abs_tol)
    return max(0.0, d - ext), d + ext, [d]


def _finish(value: float, error: float, ok: bool, what: str, strict: bool) -> QuadValue:
    if not ok and strict:
        raise QuadratureError(f"{what} did not converge", value, error)
    return QuadValue(value, error)


def _charfun_intra(s: float, cfg: ModelConfig, quad: QuadSpec):
    s = _check_s(s)
    mu = cfg.c_bar * cfg.duty_cycle
    if s == 0.0 or mu == 0.0:
        return 1.0, 0.0, True
    lo, hi, extra = _intra_limits(cfg, quad)
    rmax = _kernel_radius(cfg, quad)
    failed = []

    def integrand(rho, _owner):
        q, qerr, ok = q_profile(s, rho, cfg, quad)
        failed.append(not ok.all())
        e = np.exp(-mu * q)
        h = _offset_density(cfg, rho)
        return np.column_stack((e * h, mu * e * qerr * h))

    brk = np.array([extra + [rmax]])
    res = integrate_batch(integrand, [lo], [hi], breakpoints=brk, rel_tol=quad.rel_tol,
                          abs_tol=quad.abs_tol, max_subdivisions=quad.max_subdivisions)
    value = float(res.value[0, 0])
    err = float(res.error[0] + res.value[0, 1])
    return min(value, 1.0), err, bool(res.converged[0]) and not any(failed)


def _charfun_inter(s: float, cfg: ModelConfig, quad: QuadSpec):
    s = _check_s(s)
    mu = cfg.c_bar * cfg.duty_cycle
    lam = cfg.lambda_p
    if s == 0.0 or mu == 0.0 or lam == 0.0:
        return 1.0, 0.0, True
    R = quad.outer_truncation_radius
    d = cfg.d2d_distance
    rmax = _kernel_radius(cfg, quad)
    failed = []

    def integrand(rho, _owner):
        q, qerr, ok = q_profile(s, rho, cfg, quad)
        failed.append(not ok.all())
        # arc of the circle |b - z| = rho inside the beacon disk |b| <= R
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (rho * rho + d * d - R * R) / (2.0 * rho * d)
        arc = np.where(rho <= R - d, 2.0 * np.pi, 2.0 * np.arccos(np.clip(c, -1.0, 1.0)))
        g = -np.expm1(-mu * q)
        return np.column_stack((g * arc * rho, mu * np.exp(-mu * q) * qerr * arc * rho))

    lo, hi = max(0.0, d - R), R + d
    brk = np.array([[R - d, rmax, 2.0 * rmax]])
    res = integrate_batch(integrand, [lo], [hi], breakpoints=brk, rel_tol=quad.rel_tol,
                          abs_tol=quad.abs_tol, max_subdivisions=quad.max_subdivisions)
    J = float(res.value[0, 0])
    J_err = float(res.error[0] + res.value[0, 1])
    value = math.exp(-lam * J)
    return value, value * lam * J_err, bool(res.converged[0]) and not any(failed)


def charfun_intra(s: float, cfg: ModelConfig, quad: QuadSpec = QuadSpec()) -> QuadValue:
    """Laplace functional of the intra-cluster interference, ``E exp(-s I_a)``.

    Parameters
    ----------
    s : float
        Laplace variable in 1/W.
    cfg : ModelConfig
    quad : QuadSpec

    Returns
    -------
    QuadValue
        Value in [0, 1] with its error estimate in ``.error``.
    """
    return _finish(*_charfun_intra(s, cfg, quad), "intra-cluster functional", True)


def charfun_inter(s: float, cfg: ModelConfig, quad: QuadSpec = QuadSpec()) -> QuadValue:
    """Laplace functional of the inter-cluster interference, ``E exp(-s I_b)``.

    Beacons are restricted to the disk of radius
    ``quad.outer_truncation_radius`` centered at the typical node.
    """
    return _finish(*_charfun_inter(s, cfg, quad), "inter-cluster functional", True)


def charfun(s: float, cfg: ModelConfig, quad: QuadSpec = QuadSpec()) -> QuadValue:
    """Laplace functional of the total interference (product of both parts)."""
    a = charfun_intra(s, cfg, quad)
    b = charfun_inter(s, cfg, quad)
    return QuadValue(a * b, a.error * b + b.error * a)


def inter_tail_bound(s: float, cfg: ModelConfig, quad: QuadSpec = QuadSpec()) -> float:
    """Upper bound on the exponent mass dropped by truncating the beacon disk.

    The untruncated inter-cluster functional is at least
    ``charfun_inter(s) * exp(-bound)``. Uses ``1 - exp(-u) <= u`` and

        Q(rho) <= pi f_max a1 / (a1 - 2) (s beta eta g)^(2/a1) (rho - r_k)^(-2 a2/a1)

    for ``rho > r_k``, the kernel radius. The bound is infinite when
    ``a2 <= a1``: the far field then decays too slowly for the functional to
    be positive over the whole plane.
    """
    s = _check_s(s)
    mu = cfg.c_bar * cfg.duty_cycle
    if s == 0.0 or mu == 0.0 or cfg.lambda_p == 0.0:
        return 0.0
    a1, a2 = cfg.alpha1, cfg.alpha2
    p = 2.0 * a2 / a1
    if p <= 2.0:
        return math.inf
    rk = _kernel_radius(cfg, quad)
    R = quad.outer_truncation_radius - cfg.d2d_distance
    if R <= rk:
        return math.inf
    fmax = float(radial_pdf(cfg.cluster, 0.0))
    const = math.pi * fmax * a1 / (a1 - 2.0) * (s * cfg.beta * cfg.eta * cfg.g) ** (2.0 / a1)
    u = R - rk
    radial = u ** (2.0 - p) / (p - 2.0) + rk * u ** (1.0 - p) / (p - 1.0)
    return cfg.lambda_p * mu * const * 2.0 * math.pi * radial


# ---------------------------------------------------------------------------
# closed forms


def power_outage(cfg: ModelConfig) -> float:
    """Probability that a node is too far from its beacon to power its circuit."""
    d0 = distance_threshold(cfg)
    model = cfg.cluster
    if isinstance(model, Matern):
        return 1.0 - (d0 / model.a) ** 2 if d0 < model.a else 0.0
    return math.exp(-d0 * d0 / (2.0 * model.sigma2))


def tx_power_ccdf(tau: float, cfg: ModelConfig) -> float:
    """``Pr(P_t >= tau)`` for ``tau`` at or above the smallest non-zero power."""
    tau_min = min_tx_power(cfg)
    if not tau >= tau_min * (1.0 - 1e-12):
        raise ValueError(f"tau must be >= {tau_min:.6g} W (smallest non-zero power), got {tau}")
    r2 = (cfg.beta * cfg.eta * cfg.g / tau) ** (2.0 / cfg.alpha1)
    model = cfg.cluster
    if isinstance(model, Matern):
        return min(1.0, r2 / model.a**2)
    return -math.expm1(-r2 / (2.0 * model.sigma2))


def critical_s(cfg: ModelConfig) -> float:
    """Laplace variable at which the success bound is evaluated."""
    if cfg.beta <= 0:
        raise ValueError("beta must be > 0")
    return cfg.theta * (1.0 - cfg.beta * cfg.duty_cycle) / (cfg.beta * cfg.P_c)


def success_lower_bound(cfg: ModelConfig, quad: QuadSpec = QuadSpec()) -> QuadValue:
    """Lower bound on the success probability of the typical link.

    Evaluates the total Laplace functional at the SIR threshold scaled by the
    smallest non-zero transmit power, times the probability of having power.
    """
    if cfg.beta <= 0:
        raise ValueError("success bound needs beta > 0")
    c = charfun(critical_s(cfg), cfg, quad)
    scale = 1.0 - power_outage(cfg)
    return QuadValue(scale * c, scale * c.error)


def capacity_approx(cfg: ModelConfig) -> float:
    """Density of active links when interference is ignored, in links/m^2."""
    return cfg.lambda_p * cfg.c_bar * cfg.duty_cycle * (1.0 - power_outage(cfg))


# ---------------------------------------------------------------------------
# duty-cycle optimum


@dataclass(frozen=True)
class DutyOptimum:
    """Grid optimum of the Matern capacity over ``D`` and two closed-form candidates."""

    D_star: float
    C_star: float
    candidate_min_form: float       # min(1, a1 / (2 + a1 beta))
    candidate_stationary: float     # min(1, a1 / (beta (a1 + 2)))
    confirmed: str                  # "min_form", "stationary", "both" or "neither"


def optimal_duty_matern(cfg: ModelConfig, tol: float = 1e-3) -> DutyOptimum:
    """Maximize the Matern capacity approximation over ``D`` in (0, 1].

    A grid of step 1e-4 locates the best point, then a bounded scalar search
    refines it within the neighbouring cells. A candidate is confirmed when
    it lies within ``tol`` of the refined argmax.
    """
    if not isinstance(cfg.cluster, Matern):
        raise ValueError("optimal_duty_matern needs a Matern cluster model")
    grid = np.round(np.arange(1, 10001) * 1e-4, 10)
    if cfg.beta > 0:
        grid = grid[grid * cfg.beta < 1.0]

    def cap(D):
        return capacity_approx(cfg.replace(duty_cycle=float(D)))

    vals = np.array([cap(D) for D in grid])
    k = int(np.argmax(vals))
    D_best, C_best = float(grid[k]), float(vals[k])
    lo = float(grid[max(k - 1, 0)])
    hi = float(grid[min(k + 1, grid.size - 1)])
    if hi > lo:
        r = _sopt.minimize_scalar(lambda D: -cap(D), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-9})
        if -r.fun > C_best:
            D_best, C_best = float(r.x), float(-r.fun)
    a1, b = cfg.alpha1, cfg.beta
    c_min = min(1.0, a1 / (2.0 + a1 * b))
    c_stat = min(1.0, a1 / (b * (a1 + 2.0))) if b > 0 else 1.0
    hit_min = abs(c_min - D_best) <= tol
    hit_stat = abs(c_stat - D_best) <= tol
    confirmed = {(True, True): "both", (True, False): "min_form",
                 (False, True): "stationary", (False, False): "neither"}[(hit_min, hit_stat)]
    return DutyOptimum(D_best, C_best, c_min, c_stat, confirmed)


# ---------------------------------------------------------------------------
# feasible region


@dataclass(frozen=True)
class FeasibleRegion:
    """Cells ``(D_values[i], beta_values[j])`` where the total functional at the
    critical Laplace variable is at least ``1 - epsilon``.

    ``failed`` marks cells whose quadrature did not converge; those cells are
    reported infeasible. ``charfun`` is NaN on cells that were not evaluated
    (``beta = 0`` or ``beta * D >= 1``).
    """

    D_values: np.ndarray
    beta_values: np.ndarray
    feasible: np.ndarray
    charfun: np.ndarray
    failed: np.ndarray
    epsilon: float


def feasible_region(cfg: ModelConfig, epsilon: float, grid_step: float,
                    quad: QuadSpec = QuadSpec()) -> FeasibleRegion:
    """Evaluate the reliability region on a square grid over ``[0, 1]^2``."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < grid_step <= 0.5:
        raise ValueError(f"grid_step must lie in (0, 0.5], got {grid_step}")
    n = int(math.floor(1.0 / grid_step + 1e-9))
    axis = np.round(np.linspace(0.0, n * grid_step, n + 1), 12)
    shape = (axis.size, axis.size)
    feasible = np.zeros(shape, bool)
    failed = np.zeros(shape, bool)
    values = np.full(shape, np.nan)
    for i, D in enumerate(axis):
        for j, b in enumerate(axis):
            if b <= 0.0 or b * D >= 1.0:
                continue
            c = cfg.replace(duty_cycle=float(D), beta=float(b))
            s = critical_s(c)
            va, ea, oka = _charfun_intra(s, c, quad)
            vb, eb, okb = _charfun_inter(s, c, quad)
            values[i, j] = va * vb
            failed[i, j] = not (oka and okb)
            feasible[i, j] = (not failed[i, j]) and va * vb >= 1.0 - epsilon
    return FeasibleRegion(axis, axis.copy(), feasible, values, failed, float(epsilon))
