"""Palm-conditioned Monte Carlo for the clustered backscatter network.

The typical backscatter node sits at the origin; its beacon is at ``-V`` with
``V`` drawn from the cluster offset law, and its receiver lies at distance
``d2d_distance`` in a uniform direction. Interferers are the active siblings
in the typical cluster plus the active members of every other cluster whose
beacon falls in the disk window. A node is active with probability ``D``
(it picked the typical node's mini-slot), so every cluster contributes
Poisson(``c_bar * D``) interferers.

Trials are processed in chunks. Chunk ``c`` draws from a generator seeded by
``(seed, c)`` and the chunk length depends only on the model and window, so
estimates do not depend on how chunks are spread over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .geometry import Window, sample_offsets
from .power import ModelConfig, distance_threshold

__all__ = [
    "DEFAULT_WINDOW_RADIUS",
    "Scenario",
    "Estimate",
    "SimConfig",
    "sample_scenario",
    "interference_power",
    "estimate_success",
    "estimate_power_outage",
    "estimate_capacity",
    "estimate_laplace",
    "simulate",
    "sweep_beta",
    "chunk_trials",
]

DEFAULT_WINDOW_RADIUS = 100.0

# Node budget per chunk; keeps peak memory around 200 MB.
_CHUNK_NODES = 1_000_000


@dataclass(frozen=True)
class SimConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    window_radius: float = DEFAULT_WINDOW_RADIUS
    trials: int = 100_000
    seed: int = 0
    workers: int = 1
    include_intra: bool = True
    include_inter: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.window_radius) and self.window_radius > self.model.d2d_distance):
            raise ValueError(
                f"window_radius must be finite and exceed d2d_distance "
                f"({self.model.d2d_distance}), got {self.window_radius}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ValueError(f"workers must be a positive integer, got {self.workers}")

    @property
    def window(self) -> Window:
        return Window(self.window_radius)


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    trials: int
    seed: int


@dataclass
class Scenario:
    """One network realization seen from the typical node at the origin.

    ``interferers`` is an ``(k, 2)`` array of locations and ``pb_distance``
    holds each interferer's distance to its own beacon. ``intra`` flags the
    siblings from the typical cluster.
    """

    typical_node: np.ndarray
    typical_pb: np.ndarray
    receiver: np.ndarray
    interferers: np.ndarray
    pb_distance: np.ndarray
    intra: np.ndarray
    window: Window


def chunk_trials(sim: SimConfig) -> int:
    """Number of trials per chunk; a function of model and window only."""
    m = sim.model
    beacons = m.lambda_p * math.pi * sim.window_radius**2 if sim.include_inter else 0.0
    nodes = m.c_bar * m.duty_cycle * (1.0 + beacons)
    return int(min(4096, max(1, _CHUNK_NODES // (1.0 + beacons + nodes))))


@dataclass
class _Batch:
    """Raw draws for ``n`` trials.

    Intra-cluster siblings of trial ``t`` are the ``k0[t]`` consecutive rows
    of ``off0``, placed around ``pb0[t]``. Inter-cluster nodes of trial ``t``
    are the ``k1[t]`` consecutive rows of ``off1``; node ``j`` belongs to
    beacon ``floor(pick[j] * nb[t])`` of the trial's ``nb[t]`` beacons.
    Given the beacon count, this uniform assignment of a Poisson total gives
    i.i.d. Poisson cluster sizes.
    """

    pb0: np.ndarray
    receiver: np.ndarray
    k0: np.ndarray
    off0: np.ndarray
    nb: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    k1: np.ndarray
    pick: np.ndarray
    off1: np.ndarray


def _draw_batch(sim: SimConfig, rng: np.random.Generator, n: int) -> _Batch:
    # Draw order and draw counts do not depend on beta, so beta sweeps with a
    # common seed see identical node layouts.
    m = sim.model
    cluster = m.cluster
    mean_active = m.c_bar * m.duty_cycle

    pb0 = -sample_offsets(cluster, rng, n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    receiver = m.d2d_distance * np.column_stack((np.cos(phi), np.sin(phi)))

    if sim.include_intra:
        k0 = rng.poisson(mean_active, n)
    else:
        k0 = np.zeros(n, dtype=np.int64)
    off0 = sample_offsets(cluster, rng, int(k0.sum()))

    if sim.include_inter and m.lambda_p > 0:
        # beacons: PPP on the bounding square restricted to the disk
        r_win = sim.window_radius
        ns = rng.poisson(m.lambda_p * 4.0 * r_win**2, n)
        sq = rng.uniform(-r_win, r_win, (int(ns.sum()), 2))
        inside = sq[:, 0] ** 2 + sq[:, 1] ** 2 <= r_win**2
        nb = _segment_count(inside, ns)
        bx = sq[inside, 0]
        by = sq[inside, 1]
        k1 = rng.poisson(mean_active * nb)
        pick = rng.random(int(k1.sum()))
        off1 = sample_offsets(cluster, rng, pick.size)
    else:
        nb = np.zeros(n, dtype=np.int64)
        k1 = np.zeros(n, dtype=np.int64)
        bx = by = pick = np.zeros(0)
        off1 = np.zeros((0, 2))
    return _Batch(pb0, receiver, k0, off0, nb, bx, by, k1, pick, off1)


def _segment_count(mask: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Number of true entries in each consecutive segment of ``mask``."""
    ends = np.cumsum(lengths)
    csum = np.concatenate(([0], np.cumsum(mask, dtype=np.int64)))
    return csum[ends] - csum[ends - lengths]


@numba.njit(cache=True)
def _inv_pow(d2, alpha):
    if alpha == 3.0:
        return 1.0 / (d2 * math.sqrt(d2))
    if alpha == 4.0:
        return 1.0 / (d2 * d2)
    return d2 ** (-0.5 * alpha)


@numba.njit(cache=True)
def _interference_kernel(pb0, receiver, k0, off0, f0, nb, bx, by, k1, pick, off1, f1,
                         alpha1, alpha2, eta_g, betas, d0sq):
    """Interference at each trial's receiver for every ``beta`` in ``betas``.

    ``d0sq[b]`` is the squared distance threshold under ``betas[b]``.
    """
    n = pb0.shape[0]
    nbeta = betas.shape[0]
    out = np.zeros((nbeta, n))
    d0max = d0sq.max()
    j0 = 0
    j1 = 0
    first = 0
    for t in range(n):
        zx = receiver[t, 0]
        zy = receiver[t, 1]
        for _ in range(k0[t]):
            ox = off0[j0, 0]
            oy = off0[j0, 1]
            d2 = ox * ox + oy * oy
            if d2 <= d0max:
                dx = pb0[t, 0] + ox - zx
                dy = pb0[t, 1] + oy - zy
                w = eta_g * f0[j0] * _inv_pow(d2, alpha1) * _inv_pow(dx * dx + dy * dy, alpha2)
                for b in range(nbeta):
                    if d2 <= d0sq[b]:
                        out[b, t] += betas[b] * w
            j0 += 1
        nbt = nb[t]
        for _ in range(k1[t]):
            ox = off1[j1, 0]
            oy = off1[j1, 1]
            d2 = ox * ox + oy * oy
            if d2 <= d0max:
                i = int(pick[j1] * nbt)
                if i >= nbt:
                    i = nbt - 1
                i += first
                dx = bx[i] + ox - zx
                dy = by[i] + oy - zy
                w = eta_g * f1[j1] * _inv_pow(d2, alpha1) * _inv_pow(dx * dx + dy * dy, alpha2)
                for b in range(nbeta):
                    if d2 <= d0sq[b]:
                        out[b, t] += betas[b] * w
            j1 += 1
        first += nbt
    return out


def _batch_interference(batch: _Batch, m: ModelConfig, f0, f1, betas) -> np.ndarray:
    betas = np.asarray(betas, dtype=float)
    d0sq = np.array([distance_threshold(m.replace(beta=b)) ** 2 for b in betas])
    return _interference_kernel(
        batch.pb0, batch.receiver, batch.k0, batch.off0, f0, batch.nb, batch.bx, batch.by,
        batch.k1, batch.pick, batch.off1, f1,
        float(m.alpha1), float(m.alpha2), m.eta * m.g, betas, d0sq)


def _typical_power(pb0: np.ndarray, m: ModelConfig) -> np.ndarray:
    d2 = pb0[:, 0] ** 2 + pb0[:, 1] ** 2
    d0 = distance_threshold(m)
    out = np.zeros(len(d2))
    on = d2 <= d0 * d0
    out[on] = m.beta * m.eta * m.g * d2[on] ** (-0.5 * m.alpha1)
    return out


def sample_scenario(sim: SimConfig, rng: np.random.Generator) -> Scenario:
    b = _draw_batch(sim, rng, 1)
    loc0 = b.pb0[0] + b.off0
    nb = int(b.nb[0])
    idx = np.minimum((b.pick * nb).astype(np.int64), max(nb - 1, 0))
    loc1 = np.column_stack((b.bx[idx], b.by[idx])) + b.off1 if b.pick.size else b.off1
    off = np.concatenate((b.off0, b.off1))
    return Scenario(
        typical_node=np.zeros(2),
        typical_pb=b.pb0[0],
        receiver=b.receiver[0],
        interferers=np.concatenate((loc0, loc1)),
        pb_distance=np.hypot(off[:, 0], off[:, 1]),
        intra=np.concatenate((np.ones(len(loc0), bool), np.zeros(len(loc1), bool))),
        window=sim.window,
    )


def interference_power(scenario: Scenario, cfg: ModelConfig, rng: np.random.Generator,
                       fading: np.ndarray | None = None) -> float:
    """Interference at the receiver of ``scenario``.

    Rayleigh fading powers are drawn from ``rng`` unless ``fading`` pins them.
    """
    loc = np.asarray(scenario.interferers, dtype=float).reshape(-1, 2)
    if fading is None:
        fading = rng.exponential(size=len(loc))
    pb_distance = np.asarray(scenario.pb_distance, dtype=float)
    if np.any(pb_distance <= 0):
        raise ValueError("interferer distance to its beacon must be > 0")
    on = pb_distance <= distance_threshold(cfg)
    dist = np.hypot(*(loc[on] - np.asarray(scenario.receiver, dtype=float)).T)
    power = cfg.beta * cfg.eta * cfg.g * pb_distance[on] ** (-cfg.alpha1)
    return float(np.sum(power * np.asarray(fading, dtype=float)[on] * dist ** (-cfg.alpha2)))


# ---------------------------------------------------------------------------
# estimators

def _chunk_stats(sim: SimConfig, chunk: int, n: int, s_values: tuple,
                 betas: tuple) -> np.ndarray:
    """Per-chunk sums; rows are statistics, columns are (scale, sum, sum of squares).

    Sums are taken of ``x / scale`` with ``scale`` the row maximum, so tiny
    Laplace samples do not underflow when squared.

    For each beta in ``betas``: the success indicator, then ``exp(-s I)`` for
    each ``s``. The last row is the power-outage indicator at the model's beta.
    """
    m = sim.model
    rng = np.random.default_rng(np.random.SeedSequence([sim.seed, chunk]))
    batch = _draw_batch(sim, rng, n)
    h0 = rng.exponential(size=n)
    f0 = rng.exponential(size=len(batch.off0))
    f1 = rng.exponential(size=len(batch.off1))
    interference = _batch_interference(batch, m, f0, f1, betas)

    rows = []
    for b, beta in enumerate(betas):
        mb = m.replace(beta=beta)
        pt = _typical_power(batch.pb0, mb)
        rows.append(((pt > 0) & (pt * h0 >= mb.theta * interference[b])).astype(float))
        for s in s_values:
            rows.append(np.exp(-s * interference[b]))
    d0 = distance_threshold(m)
    rows.append((batch.pb0[:, 0] ** 2 + batch.pb0[:, 1] ** 2 > d0 * d0).astype(float))
    x = np.asarray(rows)
    scale = x.max(axis=1)
    y = x / np.where(scale > 0, scale, 1.0)[:, None]
    return np.column_stack((scale, y.sum(axis=1), (y * y).sum(axis=1)))


def _chunk_task(args):
    return _chunk_stats(*args)


def _estimate(total: float, total_sq: float, sim: SimConfig, scale: float = 1.0) -> Estimate:
    """Mean and standard error from sums of ``x / scale`` and its square."""
    n = sim.trials
    mean = total / n
    if n > 1:
        var = max(0.0, (total_sq - n * mean * mean) / (n - 1))
        se = math.sqrt(var / n)
    else:
        se = 0.0
    return Estimate(scale * mean, scale * se, n, sim.seed)


def _combine(parts: np.ndarray, sim: SimConfig, row: int) -> Estimate:
    scales = parts[:, row, 0]
    top = float(scales.max())
    if top == 0.0:
        return Estimate(0.0, 0.0, sim.trials, sim.seed)
    ratio = scales / top
    # chunk order is fixed, and fsum makes the totals independent of grouping
    total = math.fsum(parts[:, row, 1] * ratio)
    total_sq = math.fsum(parts[:, row, 2] * ratio * ratio)
    return _estimate(total, total_sq, sim, top)


def _run_chunks(sim: SimConfig, s_values: tuple, betas: tuple) -> list[Estimate]:
    size = chunk_trials(sim)
    tasks = []
    done = 0
    chunk = 0
    while done < sim.trials:
        n = min(size, sim.trials - done)
        tasks.append((sim, chunk, n, s_values, betas))
        done += n
        chunk += 1
    if sim.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=sim.workers) as pool:
            parts = list(pool.map(_chunk_task, tasks))
    else:
        parts = [_chunk_task(t) for t in tasks]
    stacked = np.stack(parts)
    return [_combine(stacked, sim, row) for row in range(stacked.shape[1])]


def _check_s(s_values) -> tuple:
    out = tuple(float(s) for s in s_values)
    for s in out:
        if not s >= 0:
            raise ValueError(f"Laplace argument must be >= 0, got {s}")
    return out


def _laplace_list(s_values, ests, sim):
    return [Estimate(1.0, 0.0, sim.trials, sim.seed) if s == 0 else e
            for s, e in zip(s_values, ests)]


def simulate(sim: SimConfig, s_values: Sequence[float] = ()) -> dict:
    """Run all trials once and return every estimator built on them.

    Returns a dict with keys ``"success"``, ``"outage"`` and ``"laplace"``
    (a list aligned with ``s_values``), each entry an :class:`Estimate`.
    """
    s_values = _check_s(s_values)
    ests = _run_chunks(sim, s_values, (sim.model.beta,))
    return {"success": ests[0], "outage": ests[-1],
            "laplace": _laplace_list(s_values, ests[1:-1], sim)}


def sweep_beta(sim: SimConfig, betas: Sequence[float],
               s_values: Sequence[float] = ()) -> list[dict]:
    """Success and Laplace estimates for several reflection coefficients.

    All values share one set of node layouts and fading draws (common random
    numbers), so the estimates are a deterministic, coupled function of beta.
    Returns one dict per beta with keys ``"beta"``, ``"success"``, ``"laplace"``.
    """
    s_values = _check_s(s_values)
    betas = tuple(float(b) for b in betas)
    for b in betas:
        sim.model.replace(beta=b)  # validates the range and beta * D < 1
    ests = _run_chunks(sim, s_values, betas)
    width = 1 + len(s_values)
    out = []
    for i, b in enumerate(betas):
        row = ests[i * width:(i + 1) * width]
        out.append({"beta": b, "success": row[0],
                    "laplace": _laplace_list(s_values, row[1:], sim)})
    return out


def estimate_success(sim: SimConfig) -> Estimate:
    return simulate(sim)["success"]


def estimate_power_outage(sim: SimConfig) -> Estimate:
    """Fraction of trials whose typical node is beyond the distance threshold.

    Only the typical beacon is needed, so interferers are not generated; the
    beacon draws coincide with those of :func:`simulate` for the same seed.
    """
    m = sim.model
    d0 = distance_threshold(m)
    size = chunk_trials(sim)
    total = 0
    done = 0
    chunk = 0
    while done < sim.trials:
        n = min(size, sim.trials - done)
        rng = np.random.default_rng(np.random.SeedSequence([sim.seed, chunk]))
        v = sample_offsets(m.cluster, rng, n)
        total += int(np.count_nonzero(v[:, 0] ** 2 + v[:, 1] ** 2 > d0 * d0))
        done += n
        chunk += 1
    return _estimate(float(total), float(total), sim)


def estimate_capacity(sim: SimConfig) -> Estimate:
    """Density of reliable active links, ``lambda_p * c_bar * D * P_s``."""
    m = sim.model
    ps = estimate_success(sim)
    scale = m.lambda_p * m.c_bar * m.duty_cycle
    return Estimate(scale * ps.value, scale * ps.std_error, ps.trials, ps.seed)


def estimate_laplace(sim: SimConfig, s):
    """Monte Carlo ``E[exp(-s I)]``.

    ``s`` may be a scalar or a sequence; a sequence reuses one set of trials
    for all values and returns a list of estimates.
    """
    scalar = np.ndim(s) == 0
    res = simulate(sim, [s] if scalar else list(s))["laplace"]
    return res[0] if scalar else res
