"""Maximization of coverage and capacity over duty cycle and reflection coefficient.

One-dimensional searches scan a coarse grid and refine the best bracket by
golden-section search. Monte Carlo objectives reuse one seed for every
evaluation, which makes them deterministic functions of the parameter.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import analytic
from .analytic import QuadSpec
from .mc_engine import SimConfig, estimate_capacity, estimate_success, sweep_beta
from .power import ModelConfig

__all__ = [
    "OBJECTIVES",
    "OptProblem",
    "Evaluation",
    "Result1D",
    "JointResult",
    "make_objective",
    "maximize_1d",
    "maximize_joint",
    "maximize",
]

OBJECTIVES = ("success_lower_bound", "capacity_approx", "mc_success", "mc_capacity")
_VARIABLES = ("D", "beta", "joint")
_GRID_STEP = 0.05
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptProblem:
    """What to maximize, over which variable, within which bounds.

    ``budget`` caps the number of objective evaluations (the coarse grid
    included). ``xtol`` is the bracket width at which golden-section search
    stops and ``joint_tol`` the coordinate change that ends coordinate ascent.
    """

    objective: str = "success_lower_bound"
    variable: str = "beta"
    D_bounds: tuple = (0.0, 1.0)
    beta_bounds: tuple = (0.05, 1.0)
    budget: int = 60
    xtol: float = 1e-4
    joint_tol: float = 1e-3

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.variable not in _VARIABLES:
            raise ValueError(f"variable must be one of {_VARIABLES}, got {self.variable!r}")
        for name in ("D_bounds", "beta_bounds"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError(f"{name} must be a sub-interval of [0, 1], got {(lo, hi)}")
        if self.budget < 3:
            raise ValueError(f"budget must be >= 3, got {self.budget}")

    @property
    def is_mc(self) -> bool:
        return self.objective.startswith("mc_")


@dataclass(frozen=True)
class Evaluation:
    x: float
    value: float
    noise: float = 0.0


@dataclass
class Result1D:
    arg: float
    value: float
    trace: list
    unimodal: bool = True
    message: str = ""

    @property
    def evaluations(self) -> int:
        return len(self.trace)


@dataclass
class JointResult:
    D: float
    beta: float
    value: float
    trace: list = field(default_factory=list)   # (D, beta, value) after each coordinate step
    converged: bool = False
    evaluations: int = 0
    message: str = ""


QuadOrSim = Union[QuadSpec, SimConfig, None]


def make_objective(problem: OptProblem, cfg: ModelConfig, variable: str,
                   quad_or_sim: QuadOrSim = None) -> Callable[[float], Evaluation]:
    """Objective as a function of ``variable`` with the other parameters of ``cfg`` fixed."""
    if problem.is_mc:
        if not isinstance(quad_or_sim, SimConfig):
            raise TypeError("Monte Carlo objectives need a SimConfig")
        sim = quad_or_sim
    else:
        quad = quad_or_sim if isinstance(quad_or_sim, QuadSpec) else QuadSpec()
    key = "duty_cycle" if variable == "D" else "beta"

    def f(x: float) -> Evaluation:
        c = cfg.replace(**{key: float(x)})
        if problem.objective == "success_lower_bound":
            v = analytic.success_lower_bound(c, quad)
            return Evaluation(float(x), float(v), v.error)
        if problem.objective == "capacity_approx":
            return Evaluation(float(x), analytic.capacity_approx(c), 0.0)
        run = dataclasses.replace(sim, model=c)
        est = estimate_success(run) if problem.objective == "mc_success" else estimate_capacity(run)
        return Evaluation(float(x), est.value, est.std_error)

    return f


def _batch_objective(problem, cfg, variable, quad_or_sim):
    """Evaluate many points at once where that is cheaper (MC over beta)."""
    if not (problem.is_mc and variable == "beta"):
        return None
    sim = quad_or_sim

    def many(xs):
        rows = sweep_beta(dataclasses.replace(sim, model=cfg), xs)
        out = []
        for r in rows:
            e = r["success"]
            scale = 1.0
            if problem.objective == "mc_capacity":
                scale = cfg.lambda_p * cfg.c_bar * cfg.duty_cycle
            out.append(Evaluation(r["beta"], scale * e.value, scale * e.std_error))
        return out

    return many


def _feasible_interval(lo: float, hi: float, other: float) -> tuple:
    # keep beta * D < 1 by shrinking the interval
    if other > 0 and hi * other >= 1.0:
        hi = min(hi, math.nextafter(1.0 / other, 0.0))
    if hi < lo:
        raise ValueError("no feasible point: beta * D >= 1 on the whole interval")
    return lo, hi


def _grid(lo: float, hi: float, budget: int) -> np.ndarray:
    n = int(math.floor((hi - lo) / _GRID_STEP + 1e-9)) + 1
    pts = np.round(lo + _GRID_STEP * np.arange(n), 12)
    pts = pts[pts < hi]
    pts = np.append(pts, hi)
    if pts.size > budget:
        pts = np.linspace(lo, hi, budget)
    return pts


def _separated_maxima(vals: np.ndarray, noise: np.ndarray) -> bool:
    """True when two grid peaks are separated by a dip larger than the noise."""
    n = vals.size
    peaks = [i for i in range(n)
             if (i == 0 or vals[i] >= vals[i - 1]) and (i == n - 1 or vals[i] >= vals[i + 1])]
    for a, b in zip(peaks, peaks[1:]):
        dip = int(np.argmin(vals[a:b + 1])) + a
        margin = noise[a] + noise[b] + 2.0 * noise[dip]
        if min(vals[a], vals[b]) - vals[dip] > margin:
            return True
    return False


def maximize_1d(problem: OptProblem, cfg: ModelConfig, quad_or_sim: QuadOrSim = None,
                variable: str | None = None) -> Result1D:
    """Maximize over ``D`` or ``beta`` with the other parameters fixed.

    Parameters
    ----------
    problem : OptProblem
        ``problem.variable`` must be ``"D"`` or ``"beta"`` unless ``variable``
        overrides it.
    cfg : ModelConfig
        Supplies every parameter not being optimized.
    quad_or_sim : QuadSpec or SimConfig
        Quadrature settings for analytic objectives, simulation settings
        (trials, seed, window) for Monte Carlo ones.

    Returns
    -------
    Result1D
        ``trace`` lists every evaluation in order. If the grid shows two
        peaks separated by more than the noise, ``unimodal`` is False and the
        best grid point is returned without refinement.
    """
    var = variable or problem.variable
    if var not in ("D", "beta"):
        raise ValueError("maximize_1d needs variable 'D' or 'beta'")
    if var == "D":
        lo, hi = _feasible_interval(*problem.D_bounds, cfg.beta)
    else:
        lo, hi = _feasible_interval(*problem.beta_bounds, cfg.duty_cycle)
    f = make_objective(problem, cfg, var, quad_or_sim)
    many = _batch_objective(problem, cfg, var, quad_or_sim)

    grid = _grid(lo, hi, problem.budget)
    trace = many(list(grid)) if many else [f(x) for x in grid]
    vals = np.array([e.value for e in trace])
    noise = np.array([e.noise for e in trace])
    k = int(np.argmax(vals))

    if _separated_maxima(vals, noise):
        return Result1D(float(grid[k]), float(vals[k]), trace, unimodal=False,
                        message="grid shows separated local maxima; returning best grid point")

    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, grid.size - 1)])
    best = trace[k]
    if b - a > problem.xtol and len(trace) + 2 <= problem.budget:
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        fc, fd = f(c), f(d)
        trace += [fc, fd]
        while b - a > problem.xtol and len(trace) < problem.budget:
            if fc.value >= fd.value:
                b, d, fd = d, c, fc
                c = b - _INVPHI * (b - a)
                fc = f(c)
                trace.append(fc)
            else:
                a, c, fc = c, d, fd
                d = a + _INVPHI * (b - a)
                fd = f(d)
                trace.append(fd)
        for e in trace[grid.size:]:
            if e.value > best.value:
                best = e
    msg = "" if b - a <= problem.xtol or grid.size == 1 else "budget exhausted before xtol"
    return Result1D(best.x, best.value, trace, True, msg)


def maximize_joint(problem: OptProblem, cfg: ModelConfig,
                   quad_or_sim: QuadOrSim = None) -> JointResult:
    """Coordinate ascent over ``(D, beta)``, starting from ``cfg``.

    Alternates :func:`maximize_1d` over ``D`` and ``beta``; a step is kept
    only if it does not lower the objective, so the trace is nondecreasing.
    Stops when a full sweep moves both coordinates by less than
    ``problem.joint_tol`` or the evaluation budget runs out.
    """
    if problem.variable != "joint":
        raise ValueError("maximize_joint needs variable 'joint'")
    D = float(np.clip(cfg.duty_cycle, *problem.D_bounds))
    beta = float(np.clip(cfg.beta, *problem.beta_bounds))
    cur = cfg.replace(duty_cycle=D, beta=beta)
    value = make_objective(problem, cur, "D", quad_or_sim)(D).value
    used = 1
    trace = [(D, beta, value)]
    while True:
        start = (D, beta)
        for var in ("D", "beta"):
            remaining = problem.budget - used
            if remaining < 3:
                return JointResult(D, beta, value, trace, False, used,
                                   "budget exhausted; returning best point so far")
            sub = OptProblem(problem.objective, var, problem.D_bounds, problem.beta_bounds,
                             min(remaining, 60), problem.xtol, problem.joint_tol)
            r = maximize_1d(sub, cur, quad_or_sim, var)
            used += r.evaluations
            if r.value >= value:
                value = r.value
                if var == "D":
                    D = r.arg
                else:
                    beta = r.arg
                cur = cur.replace(duty_cycle=D, beta=beta)
            trace.append((D, beta, value))
        if max(abs(D - start[0]), abs(beta - start[1])) < problem.joint_tol:
            return JointResult(D, beta, value, trace, True, used, "")


def maximize(problem: OptProblem, cfg: ModelConfig, quad_or_sim: QuadOrSim = None):
    """Dispatch to :func:`maximize_1d` or :func:`maximize_joint`."""
    if problem.variable == "joint":
        return maximize_joint(problem, cfg, quad_or_sim)
    return maximize_1d(problem, cfg, quad_or_sim)
