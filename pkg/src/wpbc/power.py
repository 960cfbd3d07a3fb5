"""Wireless power transfer link budget and circuit-power gating."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import ClusterModel, Matern, Thomas

__all__ = [
    "ModelConfig",
    "TxPower",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "receive_power",
    "distance_threshold",
    "min_tx_power",
    "gated_power",
    "gated_powers",
]


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class ModelConfig:
    """Scalar parameters of the clustered backscatter network.

    Powers are in watts, densities in points per square meter, ``theta`` is
    the linear SIR threshold. Defaults reproduce the reference simulation
    setting (40 dBm beacons, 7 dBm circuit power, -5 dB threshold, Thomas
    clusters with variance 4).
    """

    lambda_p: float = 0.2
    c_bar: float = 3.0
    duty_cycle: float = 0.4
    beta: float = 0.6
    eta: float = 10.0
    g: float = 1.0
    P_c: float = field(default_factory=lambda: dbm_to_watts(7.0))
    alpha1: float = 3.0
    alpha2: float = 3.0
    theta: float = field(default_factory=lambda: db_to_linear(-5.0))
    d2d_distance: float = 1.0
    cluster: ClusterModel = field(default_factory=lambda: Thomas(4.0))

    def __post_init__(self):
        for name in ("lambda_p", "c_bar", "duty_cycle", "beta", "eta", "g", "P_c",
                     "alpha1", "alpha2", "theta", "d2d_distance"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
        if self.lambda_p < 0:
            raise ValueError(f"lambda_p must be >= 0, got {self.lambda_p}")
        if self.c_bar < 0:
            raise ValueError(f"c_bar must be >= 0, got {self.c_bar}")
        if not 0.0 <= self.duty_cycle <= 1.0:
            raise ValueError(f"duty_cycle must lie in [0, 1], got {self.duty_cycle}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.beta * self.duty_cycle >= 1.0:
            raise ValueError(
                f"beta * duty_cycle must be < 1, got {self.beta} * {self.duty_cycle}")
        for name in ("eta", "g", "P_c", "theta", "d2d_distance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("alpha1", "alpha2"):
            if getattr(self, name) <= 2:
                raise ValueError(f"{name} must be > 2, got {getattr(self, name)}")
        if not isinstance(self.cluster, (Matern, Thomas)):
            raise ValueError(f"cluster must be Matern or Thomas, got {self.cluster!r}")

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if isinstance(self.cluster, Matern):
            out["cluster"] = {"model": "matern", "a": self.cluster.a}
        else:
            out["cluster"] = {"model": "thomas", "sigma2": self.cluster.sigma2}
        return out


class TxPower(NamedTuple):
    value: float
    is_outage: bool


def receive_power(cfg: ModelConfig, dist):
    """Power received from the serving beacon at distance ``dist``."""
    d = np.asarray(dist, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance to the power beacon must be > 0")
    out = cfg.eta * cfg.g * d ** (-cfg.alpha1)
    return float(out) if out.ndim == 0 else out


def distance_threshold(cfg: ModelConfig) -> float:
    """Largest beacon distance at which the circuit-power constraint holds."""
    return (cfg.eta * cfg.g * (1.0 - cfg.beta * cfg.duty_cycle) / cfg.P_c) ** (1.0 / cfg.alpha1)


def min_tx_power(cfg: ModelConfig) -> float:
    """Smallest non-zero transmit power, reached at the distance threshold."""
    return cfg.beta * cfg.P_c / (1.0 - cfg.beta * cfg.duty_cycle)


def gated_power(cfg: ModelConfig, dist_to_pb: float) -> TxPower:
    value = float(gated_powers(cfg, np.asarray([dist_to_pb], dtype=float))[0])
    return TxPower(value, bool(dist_to_pb > distance_threshold(cfg)))


def gated_powers(cfg: ModelConfig, dist_to_pb: np.ndarray, d0: float | None = None) -> np.ndarray:
    """Backscattered power per node; zero for nodes beyond the threshold.

    The boundary ``dist == d0`` transmits.
    """
    dist_to_pb = np.asarray(dist_to_pb, dtype=float)
    if np.any(dist_to_pb <= 0):
        raise ValueError("distance to the power beacon must be > 0")
    if d0 is None:
        d0 = distance_threshold(cfg)
    out = np.zeros_like(dist_to_pb)
    on = dist_to_pb <= d0
    out[on] = cfg.beta * cfg.eta * cfg.g * dist_to_pb[on] ** (-cfg.alpha1)
    return out
