"""Path loss, RSRP, Rayleigh block fading and Shannon rates per (BS, MT) link.

Macro and pico tiers sit on separate carriers, so a link only sees
interference from the other BSs of its own tier. Every BS transmits in
every slot (full buffer), which keeps the SINR independent of scheduling:
the whole (slots, N, M) rate tensor can be drawn before the slot loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import BaseStation, MobileTerminal, NetworkTopology, Tier

MIN_DISTANCE_KM = 0.010

# (intercept dB, slope dB/decade), d in km
PATH_LOSS_MODELS = {
    Tier.MACRO: (128.1, 37.6),
    Tier.PICO: (140.7, 36.7),
}


@dataclass(frozen=True)
class RadioConfig:
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    slot_duration: float = 1e-3
    min_sinr_floor: float = 0.0
    bandwidth_hz: float = 5e6

    def noise_power_dbm(self, bandwidth_hz: float | None = None) -> float:
        bw = self.bandwidth_hz if bandwidth_hz is None else bandwidth_hz
        return self.noise_density_dbm_hz + 10.0 * math.log10(bw) + self.noise_figure_db


@dataclass(frozen=True)
class LinkState:
    path_loss: float
    rsrp: float
    fading_gain: float
    achievable_rate: float


def _tier(tier) -> Tier:
    return tier if isinstance(tier, Tier) else Tier(tier)


def path_loss_db(tier, distance_km):
    """Table path loss; ``distance_km`` may be a scalar or an array."""
    a, b = PATH_LOSS_MODELS[_tier(tier)]
    d = np.maximum(np.asarray(distance_km, dtype=float), MIN_DISTANCE_KM)
    pl = a + b * np.log10(d)
    return float(pl) if pl.ndim == 0 else pl


def distance_km(bs: BaseStation, mt: MobileTerminal) -> float:
    return math.dist(bs.position, mt.position) / 1000.0


def rsrp_dbm(bs: BaseStation, mt: MobileTerminal) -> float:
    """Long-term received power (no fading), used only for association."""
    return bs.tx_power - path_loss_db(bs.tier, distance_km(bs, mt))


def rsrp_matrix(topology: NetworkTopology) -> np.ndarray:
    """RSRP in dBm, shape (N, M), row = BS, column = MT."""
    bs_xy = topology.bs_positions()
    mt_xy = topology.mt_positions()
    d = np.linalg.norm(bs_xy[:, None, :] - mt_xy[None, :, :], axis=2) / 1000.0
    out = np.empty_like(d)
    for k, bs in enumerate(topology.base_stations):
        out[k] = bs.tx_power - path_loss_db(bs.tier, d[k])
    return out


def dbm_to_mw(x):
    return np.power(10.0, np.asarray(x, dtype=float) / 10.0)


def draw_fading(rng: np.random.Generator, size=None):
    """Unit-mean exponential power gain (Rayleigh envelope)."""
    return rng.exponential(1.0, size=size)


def link_stream(seed: int, bs_id: int, mt_id: int) -> np.random.Generator:
    """Independent fading stream for one (BS, MT) link."""
    return np.random.default_rng(np.random.SeedSequence([seed, bs_id, mt_id]))


def draw_fading_tensor(seed: int, num_bs: int, num_mts: int, slots: int) -> np.ndarray:
    """Fading gains, shape (slots, N, M), one stream per link."""
    g = np.empty((slots, num_bs, num_mts))
    for k in range(num_bs):
        for j in range(num_mts):
            g[:, k, j] = draw_fading(link_stream(seed, k, j), slots)
    return g


def shannon_rate(sinr, config: RadioConfig, bandwidth_hz: float | None = None):
    """Bits per slot over the full band."""
    bw = config.bandwidth_hz if bandwidth_hz is None else bandwidth_hz
    sinr = np.maximum(sinr, config.min_sinr_floor)
    return config.slot_duration * bw * np.log2(1.0 + sinr)


def sinr_tensor(rx_mw: np.ndarray, fading: np.ndarray, same_tier: np.ndarray, noise_mw: float) -> np.ndarray:
    """SINR per slot and link.

    rx_mw: (N, M) mean received power; fading: (S, N, M);
    same_tier: (N, N) boolean co-channel map; the diagonal is ignored.
    """
    faded = fading * rx_mw
    interferers = same_tier & ~np.eye(len(same_tier), dtype=bool)
    interference = np.matmul(interferers.astype(float), faded)
    return faded / (noise_mw + interference)


def link_rates(topology: NetworkTopology, config: RadioConfig, slots: int, seed: int) -> np.ndarray:
    """Achievable rate in bits/slot for every link and slot, shape (S, N, M)."""
    rx_mw = dbm_to_mw(rsrp_matrix(topology))
    tiers = np.array([b.tier is Tier.MACRO for b in topology.base_stations])
    same_tier = tiers[:, None] == tiers[None, :]
    fading = draw_fading_tensor(seed, topology.num_bs, topology.num_mts, slots)
    sinr = sinr_tensor(rx_mw, fading, same_tier, float(dbm_to_mw(config.noise_power_dbm())))
    return shannon_rate(sinr, config)


def achievable_rate(bs: BaseStation, mt: MobileTerminal, slot: int, topology: NetworkTopology,
                    config: RadioConfig, seed: int) -> float:
    """Rate of a single link in one slot (slot counted from 0).

    Scalar route kept for inspection and cross-checks; the engine uses
    ``link_rates``, which evaluates every link at once.
    """
    noise = float(dbm_to_mw(config.noise_power_dbm(bs.bandwidth)))

    def faded_power(b: BaseStation) -> float:
        g = draw_fading(link_stream(seed, b.id, mt.id), slot + 1)[slot]
        return float(dbm_to_mw(rsrp_dbm(b, mt))) * g

    signal = faded_power(bs)
    interference = sum(
        faded_power(b) for b in topology.base_stations if b.tier is bs.tier and b.id != bs.id
    )
    return float(shannon_rate(signal / (noise + interference), config, bs.bandwidth))


def link_state(bs: BaseStation, mt: MobileTerminal, slot: int, topology: NetworkTopology,
               config: RadioConfig, seed: int) -> LinkState:
    pl = path_loss_db(bs.tier, distance_km(bs, mt))
    g = float(draw_fading(link_stream(seed, bs.id, mt.id), slot + 1)[slot])
    return LinkState(pl, bs.tx_power - pl, g, achievable_rate(bs, mt, slot, topology, config, seed))
