"""Run configuration shared by the evaluator, CLI, and device."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .protocol import DEFAULT_TEMPERATURE_K, VESSEL_VOLUME_UL


@dataclass
class ZoneSpec:
    """Temperature zone: column range [col_start, col_end) and holding temp."""
    kind: str  # cold | warm | hot
    col_start: int
    col_end: int
    temperature_k: float


@dataclass
class DeviceConfig:
    width: int = 16
    height: int = 8
    droplet_unit_ul: float = 1.0
    tick_budget: int = 10_000
    hold_quantum_s: float = 1.0
    seed: int = 0
    # zone temperature boundaries (Celsius): cold <= 10 < warm <= 30 < hot
    cold_max_c: float = 10.0
    warm_max_c: float = 30.0
    cold_temp_c: float = 4.0
    warm_temp_c: float = 20.0
    hot_temp_c: float = 37.0
    zones: Optional[list] = None  # list[ZoneSpec]

    def __post_init__(self):
        if self.width < 8 or self.height < 4:
            raise ValueError("device must be at least 8x4 pads")
        if self.zones is None:
            # staging, mixing and splitting all happen in the cold region, so
            # it gets half the grid by default; warm and hot share the rest
            half = self.width // 2
            rest = self.width - half
            self.zones = [
                ZoneSpec("cold", 0, half, self.cold_temp_c + 273.15),
                ZoneSpec("warm", half, half + rest // 2,
                         self.warm_temp_c + 273.15),
                ZoneSpec("hot", half + rest // 2, self.width,
                         self.hot_temp_c + 273.15),
            ]

    def zone_for_temperature(self, temp_k: float) -> ZoneSpec:
        c = temp_k - 273.15
        if c <= self.cold_max_c:
            kind = "cold"
        elif c <= self.warm_max_c:
            kind = "warm"
        else:
            kind = "hot"
        for z in self.zones:
            if z.kind == kind:
                return z
        raise ValueError(f"no configured zone for temperature {c:.1f} C")

    def zone(self, kind: str) -> ZoneSpec:
        for z in self.zones:
            if z.kind == kind:
                return z
        raise ValueError(f"no {kind} zone configured")


@dataclass
class RunConfig:
    lna: bool = False
    rtol: float = 1e-6
    atol: float = 1e-8
    n_points: int = 1000
    recursion_limit: int = 10_000
    emission_limit: int = 1_000_000
    vessel_volume_ul: float = VESSEL_VOLUME_UL
    vessel_temperature_k: float = DEFAULT_TEMPERATURE_K
    binomial_split: bool = False
    device_enabled: bool = False
    device: DeviceConfig = field(default_factory=DeviceConfig)
    check_only: bool = False  # equilibrate stubbed to identity (dry pass)
