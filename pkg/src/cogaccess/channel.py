"""Rayleigh block-fading link model.

A packet of ``b`` bits sent over ``tx`` seconds on a ``W`` Hz channel needs a
spectral efficiency ``R = b / (W tx)``. It is decoded when the instantaneous
capacity ``log2(1 + P |g|^2 / N0)`` exceeds ``R``; with ``|g|^2`` exponential
of mean ``sigma`` this happens with probability ``exp(-N0 (2^R - 1) / (sigma P))``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

INFINITE_RATE = math.inf

# Relative slack when flooring T / tau, so that tau = 0.1 * T gives 10 and not 9.
_FLOOR_RTOL = 1e-9


class Link(enum.Enum):
    PRIMARY = "p"
    SECONDARY = "s"


@dataclass(frozen=True)
class SystemParams:
    """Physical and slot constants shared by every model in the package."""

    noise_density: float
    power_primary: float
    power_secondary: float
    bandwidth_hz: float
    slot_seconds: float
    sensing_quantum_seconds: float
    packet_bits: float
    var_primary_link: float = 1.0
    var_secondary_link: float = 1.0

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")
        if self.sensing_quantum_seconds > self.slot_seconds * (1 + _FLOOR_RTOL):
            raise ValueError(
                "sensing_quantum_seconds must not exceed slot_seconds "
                f"({self.sensing_quantum_seconds} > {self.slot_seconds})"
            )

    @property
    def num_instants(self) -> int:
        return num_instants(self)

    def power(self, link: Link) -> float:
        return self.power_primary if link is Link.PRIMARY else self.power_secondary

    def variance(self, link: Link) -> float:
        return self.var_primary_link if link is Link.PRIMARY else self.var_secondary_link

    def secondary_tx_seconds(self, k: int) -> float:
        """Transmission time left to the SU when it accesses at instant ``k * tau``."""
        tx = self.slot_seconds - k * self.sensing_quantum_seconds
        # k*tau can land a few ulps past T; treat that as zero airtime
        if tx <= self.slot_seconds * _FLOOR_RTOL:
            return 0.0
        return tx


def default_params() -> SystemParams:
    """Parameter set used for the throughput-vs-arrival-rate figures."""
    slot = 0.4e-3
    return SystemParams(
        noise_density=1e-11,
        power_primary=3e-12,
        power_secondary=9e-10,
        bandwidth_hz=10e6,
        slot_seconds=slot,
        sensing_quantum_seconds=0.1 * slot,
        packet_bits=1000,
        var_primary_link=1.0,
        var_secondary_link=1.0,
    )


def num_instants(params: SystemParams) -> int:
    """Number of sensing instants per slot, ``floor(T / tau)``."""
    return int(math.floor(params.slot_seconds / params.sensing_quantum_seconds * (1 + _FLOOR_RTOL)))


def spectral_efficiency(params: SystemParams, tx_seconds: float) -> float:
    """Required rate in bits/s/Hz; ``INFINITE_RATE`` when there is no airtime."""
    if tx_seconds < 0:
        raise ValueError(f"tx_seconds must be non-negative, got {tx_seconds}")
    if tx_seconds == 0:
        return INFINITE_RATE
    return params.packet_bits / (params.bandwidth_hz * tx_seconds)


def success_probability(params: SystemParams, link: Link, tx_seconds: float) -> float:
    """Probability that ``link`` is not in outage when transmitting for ``tx_seconds``."""
    rate = spectral_efficiency(params, tx_seconds)
    if rate == INFINITE_RATE:
        return 0.0
    snr_threshold = params.noise_density * (2.0**rate - 1.0) / params.power(link)
    return math.exp(-snr_threshold / params.variance(link))


def draw_success(
    rng: np.random.Generator,
    params: SystemParams,
    link: Link,
    tx_seconds,
    size: int | None = None,
):
    """Realize one (or ``size``) fading draws and report whether decoding succeeds.

    ``tx_seconds`` may be an array, in which case one draw is made per element.
    Zero airtime never succeeds.
    """
    tx = np.asarray(tx_seconds, dtype=float)
    if np.any(tx < 0):
        raise ValueError("tx_seconds must be non-negative")
    shape = tx.shape if size is None else size
    gain = rng.exponential(params.variance(link), size=shape)
    with np.errstate(divide="ignore"):
        rate = np.where(tx > 0, params.packet_bits / (params.bandwidth_hz * np.where(tx > 0, tx, 1.0)), np.inf)
    capacity = np.log2(1.0 + params.power(link) * gain / params.noise_density)
    ok = capacity > rate
    if size is None and ok.ndim == 0:
        return bool(ok)
    return ok
