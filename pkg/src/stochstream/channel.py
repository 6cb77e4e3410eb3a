"""Wireless link: power conversion, fading gain draws and Shannon capacity.

Rayleigh gains use a counter-based mapping so that draw ``t`` for a seed is
fixed regardless of how many other draws were taken: the ``t``-th 64-bit
output of ``numpy.random.Philox(key=seed)`` is turned into a uniform
``u = (raw >> 11) * 2**-53`` and then into ``-mean_gain * log1p(-u)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DETERMINISTIC = "deterministic"
RAYLEIGH = "rayleigh"
_OUTPUTS_PER_BLOCK = 4  # Philox4x64 yields four words per counter increment


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


@dataclass(frozen=True)
class ChannelModel:
    kind: str = RAYLEIGH
    fixed_gain: float = 1.0
    mean_gain: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (DETERMINISTIC, RAYLEIGH):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.kind == DETERMINISTIC and self.fixed_gain < 0:
            raise ValueError("fixed_gain must be >= 0")
        if self.kind == RAYLEIGH and not self.mean_gain > 0:
            raise ValueError("mean_gain must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class LinkBudget:
    bandwidth_hz: float = 1e6
    tx_power_dbm: float = 5.0
    noise_mw: float = 1.0

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth_hz must be > 0")
        if not self.noise_mw > 0:
            raise ValueError("noise_mw must be > 0")

    @property
    def tx_power_mw(self) -> float:
        return dbm_to_mw(self.tx_power_dbm)


def _exp_from_raw(raw: np.ndarray, mean: float) -> np.ndarray:
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return -mean * np.log1p(-u)


def sample_gains(model: ChannelModel, start: int, count: int) -> np.ndarray:
    """Gains for times ``start .. start+count-1`` (vectorized ``sample_gain``)."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be >= 0")
    if model.kind == DETERMINISTIC:
        return np.full(count, float(model.fixed_gain))
    bitgen = np.random.Philox(key=model.seed)
    block, lane = divmod(start, _OUTPUTS_PER_BLOCK)
    bitgen.advance(block)
    raw = bitgen.random_raw(lane + count)[lane:]
    return _exp_from_raw(raw, model.mean_gain)


def sample_gain(model: ChannelModel, t: int) -> float:
    """Channel power gain at unit time ``t``; same (seed, t) gives same value."""
    return float(sample_gains(model, t, 1)[0])


def capacity(budget: LinkBudget, gain: float) -> float:
    """Bits the link can carry in one unit time."""
    if gain < 0:
        raise ValueError("gain must be >= 0")
    return budget.bandwidth_hz * math.log2(1.0 + budget.tx_power_mw * gain / budget.noise_mw)


def capacities(budget: LinkBudget, gains: np.ndarray) -> np.ndarray:
    gains = np.asarray(gains, dtype=float)
    if np.any(gains < 0):
        raise ValueError("gain must be >= 0")
    return budget.bandwidth_hz * np.log2(1.0 + budget.tx_power_mw * gains / budget.noise_mw)
