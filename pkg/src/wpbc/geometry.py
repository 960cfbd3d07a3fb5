"""Point-process sampling for the power-beacon / backscatter-node network.

Points are stored as ``(n, 2)`` float arrays of planar coordinates in meters.
Every sampler takes an explicit :class:`numpy.random.Generator` so results
are a pure function of the arguments and the generator state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Matern",
    "Thomas",
    "ClusterModel",
    "Window",
    "sample_ppp",
    "sample_offset",
    "sample_offsets",
    "sample_cluster",
    "thin",
    "radial_cdf",
    "radial_pdf",
    "support_radius",
]


@dataclass(frozen=True)
class Matern:
    """Daughter points uniform on a disk of radius ``a``."""

    a: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"Matern radius must be positive and finite, got {self.a}")


@dataclass(frozen=True)
class Thomas:
    """Daughter points with circular Gaussian offsets of per-axis variance ``sigma2``."""

    sigma2: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"Thomas variance must be positive and finite, got {self.sigma2}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


ClusterModel = Union[Matern, Thomas]


@dataclass(frozen=True)
class Window:
    """Disk of given radius centered at the origin."""

    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"window radius must be positive and finite, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2


def _check_model(model) -> None:
    if not isinstance(model, (Matern, Thomas)):
        raise TypeError(f"expected Matern or Thomas cluster model, got {type(model).__name__}")


def _polar_to_xy(r: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def sample_ppp(density: float, window: Window, rng: np.random.Generator) -> np.ndarray:
    """Sample a homogeneous Poisson point process on a disk window.

    Parameters
    ----------
    density : float
        Intensity in points per square meter.
    window : Window
        Disk centered at the origin.
    rng : numpy.random.Generator

    Returns
    -------
    numpy.ndarray
        ``(n, 2)`` array with ``n ~ Poisson(density * area)``, points i.i.d.
        uniform on the disk.
    """
    if not math.isfinite(density) or density < 0:
        raise ValueError(f"density must be finite and non-negative, got {density}")
    n = int(rng.poisson(density * window.area))
    # 1 - U lies in (0, 1], so no point sits exactly on the origin
    r = window.radius * np.sqrt(1.0 - rng.random(n))
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return _polar_to_xy(r, phi)


def sample_offsets(model: ClusterModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized :func:`sample_offset`; returns a ``(size, 2)`` array.

    Offsets of exactly zero length are redrawn (the path-loss model is
    singular there).
    """
    _check_model(model)
    if isinstance(model, Matern):
        r = model.a * np.sqrt(1.0 - rng.random(size))
        phi = rng.uniform(0.0, 2.0 * np.pi, size)
        return _polar_to_xy(r, phi)
    out = rng.normal(0.0, model.sigma, (size, 2))
    while True:
        # cheap screen on x first; a zero offset needs both coordinates zero
        cand = np.flatnonzero(out[:, 0] == 0.0)
        zero = cand[out[cand, 1] == 0.0]
        if zero.size == 0:
            return out
        out[zero] = rng.normal(0.0, model.sigma, (zero.size, 2))


def sample_offset(model: ClusterModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one daughter offset relative to its parent, as a length-2 array."""
    return sample_offsets(model, rng, 1)[0]


def sample_cluster(center, model: ClusterModel, mean_size: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Poisson(mean_size) daughter points around ``center``."""
    if not math.isfinite(mean_size) or mean_size < 0:
        raise ValueError(f"mean cluster size must be finite and non-negative, got {mean_size}")
    n = int(rng.poisson(mean_size))
    return np.asarray(center, dtype=float) + sample_offsets(model, rng, n)


def thin(points: np.ndarray, keep_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Independent thinning; survivors keep their original order."""
    if not 0.0 <= keep_prob <= 1.0:
        raise ValueError(f"keep probability must lie in [0, 1], got {keep_prob}")
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    keep = rng.random(len(points)) < keep_prob
    return points[keep]


def radial_cdf(model: ClusterModel, r):
    """Probability that an offset has length at most ``r``."""
    _check_model(model)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise ValueError("radius must be non-negative")
    if isinstance(model, Matern):
        out = np.minimum((r_arr / model.a) ** 2, 1.0)
    else:
        out = -np.expm1(-(r_arr**2) / (2.0 * model.sigma2))
    return float(out) if out.ndim == 0 else out


def radial_pdf(model: ClusterModel, r):
    """Planar density f(x) of the offset, as a function of ``r = |x|``.

    Integrates to one against ``2 pi r dr``.
    """
    _check_model(model)
    r_arr = np.asarray(r, dtype=float)
    if isinstance(model, Matern):
        out = np.where(r_arr <= model.a, 1.0 / (np.pi * model.a**2), 0.0)
    else:
        out = np.exp(-(r_arr**2) / (2.0 * model.sigma2)) / (2.0 * np.pi * model.sigma2)
    return float(out) if out.ndim == 0 else out


def support_radius(model: ClusterModel, tail_mass: float) -> float:
    """Radius beyond which the offset law carries at most ``tail_mass``."""
    _check_model(model)
    if isinstance(model, Matern):
        return model.a
    return model.sigma * math.sqrt(2.0 * math.log(1.0 / tail_mass))
