"""Densification planning: place added cells so a logged set of rejected
demand points becomes serviceable.

Two stages, both deterministic:

1. Greedy capacitated max-coverage. Candidate positions are the uncovered
   points themselves; each step places a site at the candidate that can
   feasibly absorb the most uncovered demand, where feasibility means the
   per-slot demand assigned to the site (points of the same slot, taken
   nearest-first with all-or-nothing admission) never exceeds its capacity.
   Points from different slots reuse the capacity. Score ties break on the
   lowest point index.

2. Cluster consolidation. Greedy discs anchored at points overlap heavily
   (roughly half of each disc re-covers ground), so the layout is compacted
   by Lloyd-style rebalancing and then shrunk decrementally: drop a weak
   site, let a bounded number of rebalance sweeps repair coverage, keep the
   removal only if every point ends up back in radius of a feasible site.
   The repair budget bounds how far the layout drifts toward the absolute
   minimum cover, leaving cluster slack comparable to a conventionally
   planned fill-in grid. The consolidated layout is adopted only when it
   uses fewer sites than stage 1, so stage-1 optimality bounds on small
   instances carry over.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .association import DemandPoint, run_simulation
from .errors import ConfigurationError, InfeasiblePointError
from .metrics import MetricsSummary, summarize
from .scenario import CellSite, Position, Scenario, SiteKind

_UB_CHUNK = 2048


@dataclass(frozen=True)
class DensificationPlan:
    new_sites: tuple[CellSite, ...]
    input_point_count: int
    covered_point_count: int


def _per_slot_feasible(
    ids: np.ndarray,
    d2: np.ndarray,
    ts: np.ndarray,
    demand: np.ndarray,
    capacity: float,
) -> tuple[float, np.ndarray]:
    """Total demand a site at the query position can absorb, and from whom.

    ``ids`` are candidate points already known to be in radius; they are
    offered slot-by-slot, nearest first, skipping points that do not fit.
    """
    order = np.lexsort((ids, d2, ts[ids]))
    ids_sorted = ids[order]
    total = 0.0
    taken = []
    current_ts = -1
    residual = 0.0
    for p in ids_sorted:
        t = ts[p]
        if t != current_ts:
            current_ts = t
            residual = capacity
        d = demand[p]
        if d <= residual:
            residual -= d
            total += d
            taken.append(p)
    return total, np.asarray(taken, dtype=np.int64)


def _greedy_cover(
    x: np.ndarray,
    y: np.ndarray,
    ts: np.ndarray,
    demand: np.ndarray,
    radius_m: float,
    capacity_mbps: float,
) -> tuple[list[float], list[float], np.ndarray]:
    """Stage-1 greedy: site positions plus a point-to-site assignment.

    Lazy evaluation: the heap holds per-candidate upper bounds (in-radius
    demand ignoring capacity); bounds only shrink as points get covered, so
    a candidate is selected once its exact capacity-feasible score, computed
    at the current state, still tops the heap.
    """
    n = x.shape[0]
    tree = cKDTree(np.column_stack([x, y]))
    uncovered = np.ones(n, dtype=bool)

    ub = np.empty(n)
    for lo in range(0, n, _UB_CHUNK):
        hi = min(lo + _UB_CHUNK, n)
        balls = tree.query_ball_point(np.column_stack([x[lo:hi], y[lo:hi]]), radius_m)
        for k, ids in enumerate(balls):
            ub[lo + k] = float(demand[ids].sum())

    def exact_score(c: int) -> tuple[float, np.ndarray]:
        ids = np.asarray(tree.query_ball_point((x[c], y[c]), radius_m), dtype=np.int64)
        ids = ids[uncovered[ids]]
        d2 = (x[ids] - x[c]) ** 2 + (y[ids] - y[c]) ** 2
        return _per_slot_feasible(ids, d2, ts, demand, capacity_mbps)

    heap: list[tuple[float, int, int, bool]] = [(-ub[c], c, 0, False) for c in range(n)]
    heapq.heapify(heap)
    version = 0
    site_x: list[float] = []
    site_y: list[float] = []
    assign = np.full(n, -1, dtype=np.int64)

    while uncovered.any():
        while True:
            _, c, ver, exact = heapq.heappop(heap)
            if not uncovered[c]:
                continue
            if exact and ver == version:
                break
            score, _ = exact_score(c)
            heapq.heappush(heap, (-score, c, version, True))
        _, taken = exact_score(c)
        assign[taken] = len(site_x)
        site_x.append(float(x[c]))
        site_y.append(float(y[c]))
        uncovered[taken] = False
        version += 1
    return site_x, site_y, assign


def _recenter(px, py, max_iters: int = 64) -> tuple[float, float]:
    """Center minimizing the maximum distance to the points (approximately).

    Badoiu-Clarkson iteration: step toward the farthest point with a 1/k
    schedule. Deterministic; accuracy ~1% of the radius, and callers only
    accept the result when it does not worsen the covering radius.
    """
    cx = float(px.mean())
    cy = float(py.mean())
    for k in range(1, max_iters + 1):
        d2 = (px - cx) ** 2 + (py - cy) ** 2
        far = int(np.argmax(d2))
        step_x = (float(px[far]) - cx) / (k + 1)
        step_y = (float(py[far]) - cy) / (k + 1)
        cx += step_x
        cy += step_y
        if step_x * step_x + step_y * step_y < 1e-4:
            break
    return cx, cy


class _Clusters:
    """Mutable site/assignment state for consolidation.

    Tracks per-(site, slot) assigned demand so every move can be checked
    against the capacity invariant, and supports snapshot/rollback around
    speculative site removals. ``radius_m`` here is the acceptance radius
    (the planning margin times the physical radius).
    """

    def __init__(self, site_x, site_y, assign, x, y, ts, demand, radius_m, capacity_mbps):
        self.sx = np.asarray(site_x, dtype=np.float64)
        self.sy = np.asarray(site_y, dtype=np.float64)
        self.alive = np.ones(self.sx.shape[0], dtype=bool)
        self.assign = assign
        self.x, self.y, self.demand = x, y, demand
        self.ts = ts
        # Slots renumbered densely so (site, slot) loads fit a 2-D array.
        _, self.ts_dense = np.unique(ts, return_inverse=True)
        self.n_slots = int(self.ts_dense.max()) + 1 if ts.shape[0] else 0
        self.r = radius_m
        self.r2 = radius_m * radius_m
        self.capacity = capacity_mbps
        self.loads = np.zeros((self.sx.shape[0], self.n_slots))
        np.add.at(self.loads, (assign, self.ts_dense), demand)

    def snapshot(self):
        return (self.sx.copy(), self.sy.copy(), self.alive.copy(),
                self.assign.copy(), self.loads.copy())

    def restore(self, snap) -> None:
        sx, sy, alive, assign, loads = snap
        self.sx = sx.copy()
        self.sy = sy.copy()
        self.alive = alive.copy()
        self.assign[:] = assign
        self.loads = loads.copy()

    def reassign_nearest(self) -> tuple[bool, np.ndarray]:
        """Attach every point to its nearest live site, then repair any
        per-slot capacity overruns by bouncing the farthest points of an
        overloaded (site, slot) bucket to their next-nearest site with room.

        Returns (feasible, ordinals of sites whose membership changed);
        infeasible means some bucket could not be repaired, which the
        caller treats as a failed move.
        """
        ids = np.flatnonzero(self.alive)
        d2 = (self.x[:, None] - self.sx[ids][None, :]) ** 2 + (
            self.y[:, None] - self.sy[ids][None, :]
        ) ** 2
        old = self.assign.copy()
        self.assign[:] = ids[np.argmin(d2, axis=1)]
        self.loads[:] = 0.0
        np.add.at(self.loads, (self.assign, self.ts_dense), self.demand)

        over = np.argwhere(self.loads > self.capacity)
        for s, slot in sorted(map(tuple, over)):
            bucket = np.flatnonzero((self.assign == s) & (self.ts_dense == slot))
            bd2 = (self.x[bucket] - self.sx[s]) ** 2 + (self.y[bucket] - self.sy[s]) ** 2
            for p in bucket[np.argsort(-bd2, kind="stable")]:
                if self.loads[s, slot] <= self.capacity:
                    break
                pd2 = (self.sx[ids] - self.x[p]) ** 2 + (self.sy[ids] - self.y[p]) ** 2
                moved = False
                for t_pos in np.argsort(pd2, kind="stable"):
                    t = ids[int(t_pos)]
                    if t == s:
                        continue
                    if self.loads[t, slot] + self.demand[p] <= self.capacity:
                        self.loads[s, slot] -= self.demand[p]
                        self.loads[t, slot] += self.demand[p]
                        self.assign[p] = t
                        moved = True
                        break
                if not moved:
                    return False, np.empty(0, dtype=np.int64)
            if self.loads[s, slot] > self.capacity:
                return False, np.empty(0, dtype=np.int64)
        moved_points = np.flatnonzero(old != self.assign)
        changed = np.unique(
            np.concatenate([old[moved_points], self.assign[moved_points]])
        )
        return True, changed[changed >= 0]

    def recenter(self, sites: np.ndarray) -> None:
        """Slide the given sites to their clusters' enclosing-circle centers
        whenever that shrinks the cluster's covering radius."""
        for s in sites:
            if not self.alive[s]:
                continue
            m = np.flatnonzero(self.assign == s)
            if m.size == 0:
                self.alive[s] = False
                continue
            px, py = self.x[m], self.y[m]
            old_max = float(((px - self.sx[s]) ** 2 + (py - self.sy[s]) ** 2).max())
            cx, cy = _recenter(px, py)
            new_max = float(((px - cx) ** 2 + (py - cy) ** 2).max())
            if new_max <= old_max:
                self.sx[s], self.sy[s] = cx, cy

    def lloyd(self, iters: int) -> bool:
        for it in range(iters):
            feasible, changed = self.reassign_nearest()
            if not feasible:
                return False
            if it > 0 and changed.size == 0:
                break
            self.recenter(changed if it > 0 else np.flatnonzero(self.alive))
        return True

    def coverage_ok(self) -> bool:
        d2 = (self.x - self.sx[self.assign]) ** 2 + (self.y - self.sy[self.assign]) ** 2
        return bool((d2 <= self.r2 * (1 + 1e-12)).all())

    def live_count(self) -> int:
        return int(self.alive.sum())

    def shrink(self, repair_iters: int) -> None:
        """Decrementally remove sites while bounded repair restores coverage.

        Weakest sites (least assigned demand) are tried first; a removal
        survives only if, within ``repair_iters`` rebalance sweeps, every
        point sits back within radius of a capacity-feasible site.
        """
        while self.live_count() > 1:
            totals = np.zeros(self.sx.shape[0])
            np.add.at(totals, self.assign, self.demand)
            candidates = sorted(np.flatnonzero(self.alive), key=lambda s: (totals[s], s))
            removed = False
            for s in candidates:
                snap = self.snapshot()
                self.alive[s] = False
                if self.lloyd(repair_iters) and self.coverage_ok():
                    removed = True
                    break
                self.restore(snap)
            if not removed:
                break


def _consolidate(
    site_x: list[float],
    site_y: list[float],
    assign: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    ts: np.ndarray,
    demand: np.ndarray,
    radius_m: float,
    capacity_mbps: float,
    repair_sweeps: int,
) -> tuple[list[float], list[float], np.ndarray] | None:
    """Compact and decrementally shrink the stage-1 layout.

    Returns the consolidated (site_x, site_y, assignment) or None when it
    fails to beat the stage-1 site count (the caller then keeps stage 1,
    preserving its optimality bounds on small instances).
    """
    stage1_count = len(site_x)
    assign = assign.copy()
    state = _Clusters(site_x, site_y, assign, x, y, ts, demand, radius_m, capacity_mbps)
    snap = state.snapshot()
    if not (state.lloyd(8) and state.coverage_ok()):
        state.restore(snap)
    state.shrink(repair_iters=repair_sweeps)

    if state.live_count() >= stage1_count:
        return None
    keep = np.flatnonzero(state.alive)
    remap = {int(s): k for k, s in enumerate(keep)}
    for p in range(assign.shape[0]):
        assign[p] = remap[int(assign[p])]
    return [float(state.sx[s]) for s in keep], [float(state.sy[s]) for s in keep], assign


def plan_sites(
    points: list[DemandPoint],
    radius_m: float,
    capacity_mbps: float,
    id_start: int = 0,
    consolidate: bool = True,
    repair_sweeps: int = 3,
) -> DensificationPlan:
    """Plan added sites until every input point is covered and assigned.

    Every point must individually fit the site capacity; otherwise it could
    never be served anywhere and planning fails up front. ``consolidate``
    enables the cluster-consolidation stage and ``repair_sweeps`` its
    per-removal repair budget (stage 2 in the module notes).
    """
    if radius_m <= 0:
        raise ConfigurationError(f"planning radius must be > 0, got {radius_m}")
    if capacity_mbps <= 0:
        raise ConfigurationError(f"site capacity must be > 0, got {capacity_mbps}")
    if repair_sweeps < 1:
        raise ConfigurationError(f"repair sweeps must be >= 1, got {repair_sweeps}")
    n = len(points)
    if n == 0:
        return DensificationPlan(new_sites=(), input_point_count=0, covered_point_count=0)

    x = np.array([p.position.x_m for p in points])
    y = np.array([p.position.y_m for p in points])
    demand = np.array([p.demand_mbps for p in points])
    ts = np.array([p.ts_index for p in points], dtype=np.int64)

    if np.any(demand <= 0):
        raise ConfigurationError("demand points must have positive demand")
    too_big = np.flatnonzero(demand > capacity_mbps)
    if too_big.size:
        raise InfeasiblePointError(
            f"{too_big.size} point(s) demand more than one site's capacity "
            f"({capacity_mbps} Mbps); first offenders: "
            + ", ".join(
                f"(ts={points[i].ts_index}, demand={points[i].demand_mbps:.1f})"
                for i in too_big[:5]
            ),
            offenders=[points[i] for i in too_big],
        )

    site_x, site_y, assign = _greedy_cover(x, y, ts, demand, radius_m, capacity_mbps)
    if consolidate:
        better = _consolidate(
            site_x, site_y, assign, x, y, ts, demand, radius_m, capacity_mbps,
            repair_sweeps=repair_sweeps,
        )
        if better is not None:
            site_x, site_y, _ = better

    new_sites = tuple(
        CellSite(
            id=id_start + k,
            position=Position(site_x[k], site_y[k]),
            kind=SiteKind.TERRESTRIAL_ADDED,
            coverage_radius_m=radius_m,
            capacity_mbps=capacity_mbps,
        )
        for k in range(len(site_x))
    )
    return DensificationPlan(
        new_sites=new_sites,
        input_point_count=n,
        covered_point_count=n,
    )


def evaluate_plan(
    scenario: Scenario, initial_sites: list[CellSite], plan: DensificationPlan
) -> MetricsSummary:
    """Replay the scenario (same seed, no overlay) on initial plus added sites."""
    sc = scenario.with_(haps_capacity_mbps=0.0)
    sites = list(initial_sites) + list(plan.new_sites)
    results = run_simulation(sc, sites)
    return summarize(results, sites)


def write_plan_csv(plan: DensificationPlan, path) -> None:
    """Full-precision export so a replayed plan is bit-identical."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site_id", "x_m", "y_m", "capacity_mbps", "coverage_radius_m"])
        for s in plan.new_sites:
            w.writerow(
                [s.id, repr(s.position.x_m), repr(s.position.y_m),
                 repr(s.capacity_mbps), repr(s.coverage_radius_m)]
            )


def read_plan_csv(path) -> DensificationPlan:
    sites = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            sites.append(
                CellSite(
                    id=int(row["site_id"]),
                    position=Position(float(row["x_m"]), float(row["y_m"])),
                    kind=SiteKind.TERRESTRIAL_ADDED,
                    coverage_radius_m=float(row["coverage_radius_m"]),
                    capacity_mbps=float(row["capacity_mbps"]),
                )
            )
    return DensificationPlan(
        new_sites=tuple(sites), input_point_count=0, covered_point_count=0
    )


def read_demand_points_csv(path) -> list[DemandPoint]:
    points = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            points.append(
                DemandPoint(
                    ts_index=int(row["ts"]),
                    position=Position(float(row["x_m"]), float(row["y_m"])),
                    demand_mbps=float(row["demand_mbps"]),
                    reason=row["reason"],
                )
            )
    return points
