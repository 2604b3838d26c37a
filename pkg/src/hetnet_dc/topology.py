"""BS layouts and MT drops for the four two-tier deployment scenarios.

Three macro sites sit on the vertices of an equilateral triangle (side =
ISD), each with three picos. Scenarios 1-2 use fixed, non-overlapping pico
positions; 3-4 draw pico centres at random (overlap allowed). Scenarios 1
and 3 use the hotspot MT drop, 2 and 4 the uniform drop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

MACRO_TX_POWER_DBM = 46.0
PICO_TX_POWER_DBM = 30.0
MACRO_HEIGHT_M = 32.0
PICO_HEIGHT_M = 10.0
BANDWIDTH_HZ = 5e6

PICO_RING_RADIUS_M = 160.0
PICO_RING_ANGLES_DEG = (30.0, 150.0, 270.0)

FIXED_PICO_SCENARIOS = (1, 2)
HOTSPOT_SCENARIOS = (1, 3)


class Tier(str, Enum):
    MACRO = "macro"
    PICO = "pico"


@dataclass(frozen=True)
class BaseStation:
    id: int
    tier: Tier
    position: tuple[float, float]
    tx_power: float
    antenna_height: float
    bandwidth: float = BANDWIDTH_HZ

    @property
    def is_macro(self) -> bool:
        return self.tier is Tier.MACRO


@dataclass(frozen=True)
class MobileTerminal:
    id: int
    position: tuple[float, float]
    hotspot_flag: bool


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: int
    num_mts: int
    seed: int = 0
    macro_isd: float = 500.0
    pico_radius: float = 80.0
    picos_per_macro: int = 3
    num_macros: int = 3

    def validate(self) -> None:
        if self.scenario_id not in (1, 2, 3, 4):
            raise ValueError(f"scenario_id must be 1-4, got {self.scenario_id}")
        if self.num_mts < 1:
            raise ValueError("num_mts must be >= 1")
        if not 1 <= self.num_macros <= 3:
            raise ValueError("num_macros must be between 1 and 3")
        if self.picos_per_macro < 0:
            raise ValueError("picos_per_macro must be >= 0")
        if self.macro_isd <= 0 or self.pico_radius <= 0:
            raise ValueError("macro_isd and pico_radius must be positive")
        if self.pico_radius >= macro_coverage_radius(self):
            raise ValueError(
                f"pico_radius {self.pico_radius} m must be below the macro "
                f"coverage radius {macro_coverage_radius(self)} m"
            )
        if self.scenario_id in FIXED_PICO_SCENARIOS:
            if self.picos_per_macro > len(PICO_RING_ANGLES_DEG):
                raise ValueError("fixed pico layout supports at most 3 picos per macro")
            ring = _ring_radius(self)
            if ring + self.pico_radius > macro_coverage_radius(self):
                raise ValueError("fixed pico ring does not fit inside the macro disc")
        if self.scenario_id in HOTSPOT_SCENARIOS and self.picos_per_macro == 0:
            raise ValueError("hotspot drop needs at least one pico")


@dataclass
class NetworkTopology:
    spec: ScenarioSpec
    base_stations: list[BaseStation]
    mobiles: list[MobileTerminal]
    coverage_radius: float = field(default=0.0)

    @property
    def num_bs(self) -> int:
        return len(self.base_stations)

    @property
    def num_mts(self) -> int:
        return len(self.mobiles)

    @property
    def macros(self) -> list[BaseStation]:
        return [b for b in self.base_stations if b.is_macro]

    @property
    def picos(self) -> list[BaseStation]:
        return [b for b in self.base_stations if not b.is_macro]

    def bs_positions(self) -> np.ndarray:
        return np.array([b.position for b in self.base_stations], dtype=float)

    def mt_positions(self) -> np.ndarray:
        return np.array([m.position for m in self.mobiles], dtype=float).reshape(-1, 2)

    def is_macro(self) -> np.ndarray:
        return np.array([b.is_macro for b in self.base_stations], dtype=bool)


def macro_coverage_radius(spec: ScenarioSpec) -> float:
    """Radius of the disc around each macro site used for MT drops."""
    return spec.macro_isd / 2.0


def _ring_radius(spec: ScenarioSpec) -> float:
    # 160 m at the default 500 m ISD; scaled with the ISD otherwise
    return PICO_RING_RADIUS_M * spec.macro_isd / 500.0


def macro_sites(spec: ScenarioSpec) -> np.ndarray:
    # triangle centred on the origin, circumradius = side / sqrt(3)
    r = spec.macro_isd / math.sqrt(3.0)
    angles = np.deg2rad([90.0, 210.0, 330.0])[: spec.num_macros]
    return np.column_stack((r * np.cos(angles), r * np.sin(angles)))


def _uniform_in_disc(rng: np.random.Generator, centre, radius: float) -> np.ndarray:
    rho = radius * math.sqrt(rng.random())
    phi = 2.0 * math.pi * rng.random()
    return np.array([centre[0] + rho * math.cos(phi), centre[1] + rho * math.sin(phi)])


def _cover_count(point: np.ndarray, centres: np.ndarray, radius: float) -> int:
    if len(centres) == 0:
        return 0
    d2 = np.sum((centres - point) ** 2, axis=1)
    return int(np.count_nonzero(d2 <= radius * radius))


def _uniform_in_union(rng: np.random.Generator, centres: np.ndarray, radius: float) -> np.ndarray:
    # pick a disc, draw in it, keep with prob 1/(#discs covering the point):
    # exact uniform sampling over a union of equal discs
    while True:
        c = centres[rng.integers(len(centres))]
        p = _uniform_in_disc(rng, c, radius)
        k = _cover_count(p, centres, radius)
        if k == 1 or rng.random() * k < 1.0:
            return p


def _pico_centres(spec: ScenarioSpec, sites: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    centres = []
    if spec.scenario_id in FIXED_PICO_SCENARIOS:
        ring = _ring_radius(spec)
        angles = np.deg2rad(PICO_RING_ANGLES_DEG[: spec.picos_per_macro])
        for site in sites:
            for a in angles:
                centres.append(site + ring * np.array([math.cos(a), math.sin(a)]))
    else:
        inner = macro_coverage_radius(spec) - spec.pico_radius
        for site in sites:
            for _ in range(spec.picos_per_macro):
                centres.append(_uniform_in_disc(rng, site, inner))
    return np.array(centres, dtype=float).reshape(-1, 2)


def generate_topology(spec: ScenarioSpec) -> NetworkTopology:
    """Draw one scenario drop; identical specs give identical coordinates."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    cover = macro_coverage_radius(spec)
    sites = macro_sites(spec)
    picos = _pico_centres(spec, sites, rng)

    bss = [
        BaseStation(i, Tier.MACRO, (float(x), float(y)), MACRO_TX_POWER_DBM, MACRO_HEIGHT_M)
        for i, (x, y) in enumerate(sites)
    ]
    bss += [
        BaseStation(len(sites) + i, Tier.PICO, (float(x), float(y)), PICO_TX_POWER_DBM, PICO_HEIGHT_M)
        for i, (x, y) in enumerate(picos)
    ]

    points = []
    m = spec.num_mts
    if spec.scenario_id in HOTSPOT_SCENARIOS:
        n_hot = math.ceil(2 * m / 3)
        for _ in range(n_hot):
            points.append(_uniform_in_union(rng, picos, spec.pico_radius))
        for _ in range(m - n_hot):
            while True:
                p = _uniform_in_union(rng, sites, cover)
                if _cover_count(p, picos, spec.pico_radius) == 0:
                    break
            points.append(p)
    else:
        for _ in range(m):
            points.append(_uniform_in_union(rng, sites, cover))

    mts = [
        MobileTerminal(i, (float(p[0]), float(p[1])), _cover_count(p, picos, spec.pico_radius) > 0)
        for i, p in enumerate(points)
    ]
    return NetworkTopology(spec, bss, mts, cover)
