"""Per-slot association: nearest-cell admission under coverage and capacity.

Users contend for their nearest terrestrial cell in a seeded random order;
a cell rejects users outside its footprint and users whose demand exceeds
its residual capacity. Rejected users are logged as demand points and, when
an aerial overlay is deployed, offered to it in a second seeded pass.
Admission is all-or-nothing: demands are never split across sites.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigurationError
from .mobility import Assignment, UserStates, init_users, sample_demands, step_mobility
from .rng import SimulationStreams, make_streams
from .scenario import (
    CellSite,
    Position,
    Scenario,
    SiteKind,
    make_haps_site,
    validate_sites,
)

REASON_COVERAGE = "coverage"
REASON_CAPACITY = "capacity"

_REASON_BY_STATUS = {
    int(Assignment.REJECTED_COVERAGE): REASON_COVERAGE,
    int(Assignment.REJECTED_CAPACITY): REASON_CAPACITY,
}


class DemandPoint(NamedTuple):
    """One rejected (position, demand) sample; input to densification planning."""

    ts_index: int
    position: Position
    demand_mbps: float
    reason: str


def _admit_loop(order, site_idx, covered, demand, residual, status):
    # Sequential contention in `order`; a user that does not fit is skipped
    # without consuming capacity. Kept branch-for-branch identical to the
    # brute-force reference used in tests.
    for k in range(order.shape[0]):
        u = order[k]
        if not covered[u]:
            status[u] = 2  # Assignment.REJECTED_COVERAGE
        else:
            s = site_idx[u]
            if residual[s] >= demand[u]:
                residual[s] -= demand[u]
                status[u] = 1  # Assignment.SERVED
            else:
                status[u] = 3  # Assignment.REJECTED_CAPACITY


try:  # pragma: no cover - exercised implicitly everywhere
    from numba import njit

    _admit_in_order = njit(cache=True)(_admit_loop)
except ImportError:  # pragma: no cover
    _admit_in_order = _admit_loop


def admit_in_order(
    order: np.ndarray,
    site_idx: np.ndarray,
    covered: np.ndarray,
    demand: np.ndarray,
    residual: np.ndarray,
) -> np.ndarray:
    """Run the admission scan for an explicit contention order.

    ``residual`` (per-site remaining capacity) is updated in place; the
    returned array holds one :class:`Assignment` code per user.
    """
    n = order.shape[0]
    status = np.zeros(n, dtype=np.int8)
    _admit_in_order(
        np.ascontiguousarray(order, dtype=np.int64),
        np.ascontiguousarray(site_idx, dtype=np.int64),
        np.ascontiguousarray(covered, dtype=np.bool_),
        np.ascontiguousarray(demand, dtype=np.float64),
        residual,
        status,
    )
    return status


@dataclass
class TimeSlotResult:
    """Served/rejected accounting for one slot.

    Per-site arrays are aligned with ``site_ids``. ``rej_*`` arrays describe
    users still unserved after the overlay pass (their count is
    ``dropped_user_count``); zero-demand entries are kept there for user
    accounting but excluded from :meth:`rejected_points`.
    """

    ts_index: int
    site_ids: np.ndarray
    served_demand_mbps: np.ndarray
    served_user_count: np.ndarray
    rejected_coverage_count: np.ndarray
    rejected_capacity_count: np.ndarray
    rej_user_ids: np.ndarray
    rej_x: np.ndarray
    rej_y: np.ndarray
    rej_demand: np.ndarray
    rej_status: np.ndarray
    haps_served_demand_mbps: float = 0.0
    haps_served_user_count: int = 0
    haps_user_ids: np.ndarray | None = None

    @property
    def dropped_user_count(self) -> int:
        return int(self.rej_user_ids.shape[0])

    @property
    def total_served_user_count(self) -> int:
        return int(self.served_user_count.sum()) + self.haps_served_user_count

    @property
    def active_user_count(self) -> int:
        return self.total_served_user_count + self.dropped_user_count

    @property
    def total_served_demand_mbps(self) -> float:
        return float(self.served_demand_mbps.sum()) + self.haps_served_demand_mbps

    def rejected_points(self) -> list[DemandPoint]:
        return [
            DemandPoint(
                ts_index=self.ts_index,
                position=Position(float(self.rej_x[k]), float(self.rej_y[k])),
                demand_mbps=float(self.rej_demand[k]),
                reason=_REASON_BY_STATUS[int(self.rej_status[k])],
            )
            for k in range(self.rej_user_ids.shape[0])
            if self.rej_demand[k] > 0.0
        ]


class _SiteArrays(NamedTuple):
    """Terrestrial sites flattened for vector math, ordered by ascending id."""

    ids: np.ndarray
    x: np.ndarray
    y: np.ndarray
    radius_sq: np.ndarray
    capacity: np.ndarray

    @classmethod
    def build(cls, sites: list[CellSite]) -> "_SiteArrays":
        terrestrial = sorted((s for s in sites if s.kind != SiteKind.HAPS), key=lambda s: s.id)
        if not terrestrial:
            raise ConfigurationError("at least one terrestrial site is required")
        return cls(
            ids=np.array([s.id for s in terrestrial], dtype=np.int64),
            x=np.array([s.position.x_m for s in terrestrial]),
            y=np.array([s.position.y_m for s in terrestrial]),
            radius_sq=np.array([s.coverage_radius_m**2 for s in terrestrial]),
            capacity=np.array([s.capacity_mbps for s in terrestrial], dtype=np.float64),
        )


def _associate_with_arrays(
    users: UserStates, arrays: _SiteArrays, ts_index: int, rng: np.random.Generator
) -> TimeSlotResult:
    n = len(users)
    n_sites = arrays.ids.shape[0]
    d2 = (users.x[:, None] - arrays.x[None, :]) ** 2 + (users.y[:, None] - arrays.y[None, :]) ** 2
    site_idx = np.argmin(d2, axis=1)
    nearest_d2 = np.take_along_axis(d2, site_idx[:, None], axis=1)[:, 0]
    covered = nearest_d2 <= arrays.radius_sq[site_idx]

    order = rng.permutation(n)
    residual = arrays.capacity.copy()
    status = admit_in_order(order, site_idx, covered, users.demand_mbps, residual)

    users.status = status
    users.serving_site = np.where(
        status == Assignment.SERVED, arrays.ids[site_idx], np.int64(-1)
    )

    served = status == Assignment.SERVED
    rej_cov = status == Assignment.REJECTED_COVERAGE
    rej_cap = status == Assignment.REJECTED_CAPACITY
    rejected = rej_cov | rej_cap

    # Per-site served demand comes from the residuals so it matches the
    # sequential admission arithmetic exactly (never exceeds capacity).
    served_demand = arrays.capacity - residual
    rej_idx = np.flatnonzero(rejected)
    return TimeSlotResult(
        ts_index=ts_index,
        site_ids=arrays.ids.copy(),
        served_demand_mbps=served_demand,
        served_user_count=np.bincount(site_idx[served], minlength=n_sites),
        rejected_coverage_count=np.bincount(site_idx[rej_cov], minlength=n_sites),
        rejected_capacity_count=np.bincount(site_idx[rej_cap], minlength=n_sites),
        rej_user_ids=rej_idx,
        rej_x=users.x[rej_idx].copy(),
        rej_y=users.y[rej_idx].copy(),
        rej_demand=users.demand_mbps[rej_idx].copy(),
        rej_status=status[rej_idx].copy(),
        haps_user_ids=np.empty(0, dtype=np.int64),
    )


def associate_slot(
    users: UserStates,
    sites: list[CellSite],
    scenario: Scenario,
    rng: np.random.Generator,
    ts_index: int = 0,
) -> TimeSlotResult:
    """Assign every user to its nearest terrestrial cell for one slot.

    Users are processed in a random permutation drawn from ``rng``; each is
    admitted at its nearest site unless out of coverage or not fitting the
    site's residual capacity. A demand exceeding every capacity is not an
    error, just a rejection.
    """
    del scenario  # geometry travels with the sites; kept for interface parity
    return _associate_with_arrays(users, _SiteArrays.build(sites), ts_index, rng)


def haps_overlay(
    result: TimeSlotResult,
    haps: CellSite,
    rng: np.random.Generator,
    users: UserStates | None = None,
) -> TimeSlotResult:
    """Offer the slot's rejected users to the overlay in a seeded random order.

    Every rejected user (either reason) is eligible: the overlay footprint
    spans the whole area. A user is admitted while residual overlay capacity
    covers its demand, otherwise it stays dropped. Admitted users move out of
    the rejected log into the overlay tallies.
    """
    if haps.kind != SiteKind.HAPS:
        raise ConfigurationError(f"site {haps.id} is not an overlay site")
    k = result.rej_user_ids.shape[0]
    order = rng.permutation(k)
    if k == 0:
        return result

    residual = np.array([haps.capacity_mbps], dtype=np.float64)
    status = admit_in_order(
        order,
        np.zeros(k, dtype=np.int64),
        np.ones(k, dtype=np.bool_),
        result.rej_demand,
        residual,
    )
    admitted = status == Assignment.SERVED
    left = ~admitted

    admitted_ids = result.rej_user_ids[admitted]
    if users is not None and admitted_ids.size:
        users.status[admitted_ids] = Assignment.SERVED_BY_HAPS

    return TimeSlotResult(
        ts_index=result.ts_index,
        site_ids=result.site_ids,
        served_demand_mbps=result.served_demand_mbps,
        served_user_count=result.served_user_count,
        rejected_coverage_count=result.rejected_coverage_count,
        rejected_capacity_count=result.rejected_capacity_count,
        rej_user_ids=result.rej_user_ids[left],
        rej_x=result.rej_x[left],
        rej_y=result.rej_y[left],
        rej_demand=result.rej_demand[left],
        rej_status=result.rej_status[left],
        haps_served_demand_mbps=result.haps_served_demand_mbps
        + float(haps.capacity_mbps - residual[0]),
        haps_served_user_count=result.haps_served_user_count + int(admitted.sum()),
        haps_user_ids=np.concatenate([result.haps_user_ids, admitted_ids])
        if result.haps_user_ids is not None
        else admitted_ids,
    )


def run_simulation(
    scenario: Scenario,
    sites: list[CellSite],
    trajectory_sink: Callable[[int, UserStates], None] | None = None,
) -> list[TimeSlotResult]:
    """Simulate ``num_ts`` slots: move users, sample demands, associate, overlay.

    ``sites`` holds the terrestrial network (initial grid plus any added
    cells); the overlay is deployed automatically when the scenario's
    ``haps_capacity_mbps`` is positive, or when a HAPS-kind site is passed
    explicitly. Deterministic per (scenario, seed).
    """
    validate_sites(sites, scenario)
    arrays = _SiteArrays.build(sites)

    haps = next((s for s in sites if s.kind == SiteKind.HAPS), None)
    if haps is None and scenario.haps_capacity_mbps > 0:
        haps = make_haps_site(scenario, site_id=int(arrays.ids.max()) + 1)

    streams = make_streams(scenario.seed)
    users = init_users(scenario, streams)
    results: list[TimeSlotResult] = []
    for ts in range(scenario.num_ts):
        step_mobility(users, scenario, streams)
        sample_demands(users, scenario.demand_sigma_mbps, streams.demands)
        if trajectory_sink is not None:
            trajectory_sink(ts, users)
        result = _associate_with_arrays(users, arrays, ts, streams.admission)
        if haps is not None:
            result = haps_overlay(result, haps, streams.overlay, users)
        results.append(result)
    return results


def collect_rejected_points(results: list[TimeSlotResult]) -> list[DemandPoint]:
    """All demand points still unserved after every slot's overlay pass."""
    points: list[DemandPoint] = []
    for r in results:
        points.extend(r.rejected_points())
    return points


def write_slot_results_csv(results: list[TimeSlotResult], path) -> None:
    """Per-(slot, site) accounting rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "ts",
                "site_id",
                "served_demand_mbps",
                "served_users",
                "rejected_coverage_count",
                "rejected_capacity_count",
                "haps_served_demand_mbps",
            ]
        )
        for r in results:
            for k in range(r.site_ids.shape[0]):
                w.writerow(
                    [
                        r.ts_index,
                        int(r.site_ids[k]),
                        repr(float(r.served_demand_mbps[k])),
                        int(r.served_user_count[k]),
                        int(r.rejected_coverage_count[k]),
                        int(r.rejected_capacity_count[k]),
                        repr(float(r.haps_served_demand_mbps)),
                    ]
                )


def write_rejected_points_csv(results: list[TimeSlotResult], path) -> None:
    """Rejected demand-point log (input of the densification planner)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ts", "x_m", "y_m", "demand_mbps", "reason"])
        for r in results:
            for p in r.rejected_points():
                w.writerow(
                    [p.ts_index, repr(p.position.x_m), repr(p.position.y_m),
                     repr(p.demand_mbps), p.reason]
                )


def make_trajectory_writer(fh) -> Callable[[int, UserStates], None]:
    """CSV sink for per-slot user positions and demands."""
    writer = csv.writer(fh)
    writer.writerow(["ts", "user_id", "x_m", "y_m", "demand_mbps"])

    def sink(ts: int, users: UserStates) -> None:
        for u in range(len(users)):
            writer.writerow(
                [ts, u, repr(float(users.x[u])), repr(float(users.y[u])),
                 repr(float(users.demand_mbps[u]))]
            )

    return sink
