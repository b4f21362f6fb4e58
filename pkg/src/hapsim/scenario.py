"""World model: simulation area, cell-site grid, coverage and proximity tests.

All geometry is flat 2-D in meters. Terrestrial sites sit on a cell-centered
uniform grid; the aerial overlay site, when present, covers the whole area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError

# Default seed for the shipped scenario; documented in the README.
DEFAULT_SEED = 11

# Active users demanding service per slot in the default scenario, out of the
# 14,000-strong population. Calibrated so the baseline grid runs at ~73%
# utilization (see experiments.calibrate_load; rederive with `hapsim calibrate`).
CALIBRATED_ACTIVE_USERS = 1640


class SiteKind(str, Enum):
    TERRESTRIAL_INITIAL = "terrestrial_initial"
    TERRESTRIAL_ADDED = "terrestrial_added"
    HAPS = "haps"


class Position(NamedTuple):
    x_m: float
    y_m: float


@dataclass(frozen=True)
class MobilityParams:
    """Random-waypoint parameters.

    The default speed puts every leg within a single one-minute slot, so
    active users relocate to a fresh uniform spot each slot (the fast limit
    of waypoint motion). Slow walkers instead pile up mid-area over time --
    the classic waypoint center bias, ~3x density in the central cells --
    which is not the regime the reference network figures describe;
    pedestrian motion stays available via config.

    ``confine_to_coverage`` keeps active users inside the serviceable
    footprint of the initial grid (dead-zone pockets between cells are
    never occupied); disable it for textbook waypoint motion over the
    whole rectangle.
    """

    speed_min_mps: float = 200.0
    speed_max_mps: float = 200.0
    pause_prob: float = 0.2
    confine_to_coverage: bool = True

    def __post_init__(self):
        if not 0.0 <= self.speed_min_mps <= self.speed_max_mps:
            raise ConfigurationError(
                f"need 0 <= speed_min <= speed_max, got [{self.speed_min_mps}, {self.speed_max_mps}]"
            )
        if not 0.0 <= self.pause_prob <= 1.0:
            raise ConfigurationError(f"pause_prob must be in [0, 1], got {self.pause_prob}")


@dataclass(frozen=True)
class Scenario:
    """Full parameterization of one experiment."""

    area_width_m: float = 8000.0
    area_height_m: float = 8000.0
    bs_rows: int = 6
    bs_cols: int = 6
    bs_coverage_radius_m: float = 700.0
    bs_capacity_mbps: float = 1000.0
    haps_capacity_mbps: float = 0.0
    num_users: int = 14000
    active_user_count: int = CALIBRATED_ACTIVE_USERS
    ts_duration_s: float = 60.0
    num_ts: int = 1440
    demand_sigma_mbps: float = 20.0
    mobility: MobilityParams = field(default_factory=MobilityParams)
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.area_width_m <= 0 or self.area_height_m <= 0:
            raise ConfigurationError(
                f"area must have positive dimensions, got {self.area_width_m} x {self.area_height_m}"
            )
        if self.bs_rows < 1 or self.bs_cols < 1:
            raise ConfigurationError(f"grid needs at least one site, got {self.bs_rows} x {self.bs_cols}")
        if self.bs_coverage_radius_m < 0:
            raise ConfigurationError(f"coverage radius must be >= 0, got {self.bs_coverage_radius_m}")
        if self.bs_capacity_mbps < 0 or self.haps_capacity_mbps < 0:
            raise ConfigurationError("capacities must be >= 0")
        if self.num_users < 0:
            raise ConfigurationError(f"num_users must be >= 0, got {self.num_users}")
        if not 0 <= self.active_user_count <= self.num_users:
            raise ConfigurationError(
                f"active_user_count must be in [0, num_users], got {self.active_user_count} of {self.num_users}"
            )
        if self.ts_duration_s <= 0:
            raise ConfigurationError(f"slot duration must be > 0, got {self.ts_duration_s}")
        if self.num_ts < 1:
            raise ConfigurationError(f"need at least one slot, got {self.num_ts}")
        if self.demand_sigma_mbps < 0:
            raise ConfigurationError(f"demand sigma must be >= 0, got {self.demand_sigma_mbps}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.mobility.confine_to_coverage and self.bs_coverage_radius_m <= 0:
            raise ConfigurationError("coverage confinement needs a positive coverage radius")

    def with_(self, **overrides) -> "Scenario":
        return replace(self, **overrides)


def default_scenario(**overrides) -> Scenario:
    """The shipped 8x8 km urban scenario (36 one-Gbps cells, 1440 one-minute slots)."""
    return Scenario(**overrides)


@dataclass(frozen=True)
class CellSite:
    """A serving node: an initial grid cell, an added cell, or the aerial overlay."""

    id: int
    position: Position
    kind: SiteKind
    coverage_radius_m: float
    capacity_mbps: float

    def __post_init__(self):
        if self.capacity_mbps < 0:
            raise ConfigurationError(f"site {self.id}: capacity must be >= 0")
        if self.coverage_radius_m < 0:
            raise ConfigurationError(f"site {self.id}: coverage radius must be >= 0")


def grid_spacing(scenario: Scenario) -> tuple[float, float]:
    return scenario.area_width_m / scenario.bs_cols, scenario.area_height_m / scenario.bs_rows


def place_initial_grid(scenario: Scenario) -> list[CellSite]:
    """Cell-centered uniform grid of ``bs_rows`` x ``bs_cols`` terrestrial sites.

    Site (i, j) has id i*bs_cols + j and sits at the center of its grid cell.
    Placement is deterministic and independent of the scenario seed.
    """
    sx, sy = grid_spacing(scenario)
    sites = []
    for i in range(scenario.bs_rows):
        for j in range(scenario.bs_cols):
            sites.append(
                CellSite(
                    id=i * scenario.bs_cols + j,
                    position=Position((j + 0.5) * sx, (i + 0.5) * sy),
                    kind=SiteKind.TERRESTRIAL_INITIAL,
                    coverage_radius_m=scenario.bs_coverage_radius_m,
                    capacity_mbps=scenario.bs_capacity_mbps,
                )
            )
    return sites


def make_haps_site(scenario: Scenario, site_id: int) -> CellSite:
    """Overlay site above the area center; its footprint exceeds any urban area."""
    return CellSite(
        id=site_id,
        position=Position(scenario.area_width_m / 2.0, scenario.area_height_m / 2.0),
        kind=SiteKind.HAPS,
        coverage_radius_m=math.inf,
        capacity_mbps=scenario.haps_capacity_mbps,
    )


def in_coverage(site: CellSite, p: Position) -> bool:
    """True iff ``p`` lies within the site's footprint (boundary inclusive).

    The aerial overlay covers every point of the area, modeled as an
    unbounded footprint (validated separately by the link-budget module).
    """
    dx = p[0] - site.position.x_m
    dy = p[1] - site.position.y_m
    return dx * dx + dy * dy <= site.coverage_radius_m * site.coverage_radius_m


def nearest_site(sites: list[CellSite], p: Position) -> CellSite:
    """The terrestrial site closest to ``p``; distance ties go to the lowest id.

    The overlay is never a nearest-site candidate; rejected users reach it
    only through the association engine's overlay pass.
    """
    terrestrial = sorted(
        (s for s in sites if s.kind != SiteKind.HAPS), key=lambda s: s.id
    )
    if not terrestrial:
        raise ConfigurationError("no terrestrial sites to associate with")
    best = None
    best_d2 = math.inf
    for s in terrestrial:
        dx = p[0] - s.position.x_m
        dy = p[1] - s.position.y_m
        d2 = dx * dx + dy * dy
        if d2 < best_d2:
            best, best_d2 = s, d2
    return best


def validate_sites(sites: list[CellSite], scenario: Scenario) -> None:
    """Reject duplicate ids and terrestrial sites outside the area."""
    seen = set()
    for s in sites:
        if s.id in seen:
            raise ConfigurationError(f"duplicate site id {s.id}")
        seen.add(s.id)
        if s.kind != SiteKind.HAPS:
            x, y = s.position
            if not (0 <= x <= scenario.area_width_m and 0 <= y <= scenario.area_height_m):
                raise ConfigurationError(f"terrestrial site {s.id} lies outside the area")


# -- vectorized footprint geometry (used by mobility confinement) -------------

def nearest_center_sqdist(scenario: Scenario, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Squared distance from each point to its nearest initial-grid center.

    For points inside the area the nearest center is the center of the grid
    cell containing the point, so this is O(1) per point.
    """
    sx, sy = grid_spacing(scenario)
    j = np.clip((x // sx).astype(np.int64), 0, scenario.bs_cols - 1)
    i = np.clip((y // sy).astype(np.int64), 0, scenario.bs_rows - 1)
    cx = (j + 0.5) * sx
    cy = (i + 0.5) * sy
    return (x - cx) ** 2 + (y - cy) ** 2


def in_footprint(scenario: Scenario, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Boolean mask: points within the initial grid's serviceable footprint."""
    r = scenario.bs_coverage_radius_m
    return nearest_center_sqdist(scenario, x, y) <= r * r


def project_into_footprint(
    scenario: Scenario, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Pull points outside the footprint radially onto the nearest cell's rim.

    The rim target sits a hair inside the radius so the projected point
    stays in coverage after rounding. The result is clamped to the area
    rectangle; for rim points of boundary cells the clamp keeps them inside
    both the rectangle and the disc.
    """
    sx, sy = grid_spacing(scenario)
    r = scenario.bs_coverage_radius_m * (1.0 - 1e-12)
    j = np.clip((x // sx).astype(np.int64), 0, scenario.bs_cols - 1)
    i = np.clip((y // sy).astype(np.int64), 0, scenario.bs_rows - 1)
    cx = (j + 0.5) * sx
    cy = (i + 0.5) * sy
    dx = x - cx
    dy = y - cy
    d = np.hypot(dx, dy)
    out = d > r
    scale = np.ones_like(d)
    scale[out] = r / d[out]
    px = cx + dx * scale
    py = cy + dy * scale
    np.clip(px, 0.0, scenario.area_width_m, out=px)
    np.clip(py, 0.0, scenario.area_height_m, out=py)
    return px, py
