"""Analytic feasibility numbers for the aerial overlay link.

Three closed-form quantities: the terrestrial distance with path loss equal
to the vertical aerial link, the one-way propagation latency, and the
elevation-limited footprint radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class LinkBudgetParams:
    haps_altitude_m: float = 20_000.0
    haps_pathloss_exponent: float = 2.0
    terrestrial_pathloss_exponent: float = 4.0
    min_elevation_deg: float = 30.0
    propagation_speed_mps: float = 2.998e8

    def __post_init__(self):
        if self.haps_altitude_m <= 0:
            raise ConfigurationError(f"altitude must be > 0, got {self.haps_altitude_m}")
        if self.haps_pathloss_exponent < 1 or self.terrestrial_pathloss_exponent < 1:
            raise ConfigurationError("path-loss exponents must be >= 1")
        if not 0 < self.min_elevation_deg < 90:
            raise ConfigurationError(
                f"elevation must be in (0, 90) degrees, got {self.min_elevation_deg}"
            )
        if self.propagation_speed_mps <= 0:
            raise ConfigurationError("propagation speed must be > 0")


def parity_distance(params: LinkBudgetParams) -> float:
    """Terrestrial link distance whose path loss matches the vertical aerial link.

    With exponents n_t (ground) and n_h (aerial), solves
    d**n_t == altitude**n_h, i.e. d = altitude**(n_h / n_t), in meters.
    """
    return params.haps_altitude_m ** (
        params.haps_pathloss_exponent / params.terrestrial_pathloss_exponent
    )


def propagation_latency(params: LinkBudgetParams) -> float:
    """One-way propagation delay of the vertical (nadir) path, in milliseconds."""
    return params.haps_altitude_m / params.propagation_speed_mps * 1000.0


def footprint_radius(params: LinkBudgetParams) -> float:
    """Footprint radius at the minimum elevation angle: altitude / tan(elevation)."""
    return params.haps_altitude_m / math.tan(math.radians(params.min_elevation_deg))
