"""Random-waypoint mobility and per-slot half-normal throughput demands.

User state is kept as a struct of numpy arrays; positions and demands are
frozen within a slot and evolve between slots. All randomness comes from the
named streams in :mod:`hapsim.rng`, so trajectories are bit-reproducible per
(scenario, seed) and identical across network variants sharing a seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ConfigurationError
from .rng import SimulationStreams
from .scenario import Scenario, in_footprint, project_into_footprint

# Rounds of rejection sampling before giving up on a degenerate footprint.
_MAX_DRAW_ROUNDS = 10_000


class Assignment(IntEnum):
    """Per-slot outcome for one user."""

    DROPPED = 0
    SERVED = 1
    REJECTED_COVERAGE = 2
    REJECTED_CAPACITY = 3
    SERVED_BY_HAPS = 4


@dataclass
class UserStates:
    """State of all active users (struct of arrays, index = user id)."""

    x: np.ndarray
    y: np.ndarray
    waypoint_x: np.ndarray
    waypoint_y: np.ndarray
    speed: np.ndarray
    paused: np.ndarray            # bool: stationary this slot (pause on arrival)
    demand_mbps: np.ndarray
    status: np.ndarray            # Assignment codes, int8
    serving_site: np.ndarray      # site id, -1 when not served terrestrially

    def __len__(self) -> int:
        return self.x.shape[0]

    @classmethod
    def from_positions(cls, xs, ys, demands=None, speeds=None) -> "UserStates":
        """Build explicit user states (mainly for tests and small experiments)."""
        x = np.asarray(xs, dtype=np.float64).copy()
        y = np.asarray(ys, dtype=np.float64).copy()
        if x.shape != y.shape:
            raise ValueError("xs and ys must have the same length")
        n = x.shape[0]
        demand = (
            np.zeros(n) if demands is None else np.asarray(demands, dtype=np.float64).copy()
        )
        speed = np.ones(n) if speeds is None else np.asarray(speeds, dtype=np.float64).copy()
        return cls(
            x=x,
            y=y,
            waypoint_x=x.copy(),
            waypoint_y=y.copy(),
            speed=speed,
            paused=np.zeros(n, dtype=bool),
            demand_mbps=demand,
            status=np.full(n, Assignment.DROPPED, dtype=np.int8),
            serving_site=np.full(n, -1, dtype=np.int64),
        )


def _draw_positions(scenario: Scenario, rng: np.random.Generator, n: int):
    """n i.i.d. uniform points; restricted to the serviceable footprint when
    confinement is on (rejection sampling keeps the law uniform there)."""
    w, h = scenario.area_width_m, scenario.area_height_m
    pts = rng.random((n, 2))
    x = pts[:, 0] * w
    y = pts[:, 1] * h
    if not scenario.mobility.confine_to_coverage:
        return x, y
    for _ in range(_MAX_DRAW_ROUNDS):
        bad = ~in_footprint(scenario, x, y)
        k = int(bad.sum())
        if k == 0:
            return x, y
        pts = rng.random((k, 2))
        x[bad] = pts[:, 0] * w
        y[bad] = pts[:, 1] * h
    raise ConfigurationError(
        "could not draw positions inside the serviceable footprint; "
        "is the coverage radius far too small for the grid?"
    )


def init_users(scenario: Scenario, streams: SimulationStreams) -> UserStates:
    """Fresh users: uniform positions, fresh waypoints and speeds, zero demand."""
    n = scenario.active_user_count
    x, y = _draw_positions(scenario, streams.positions, n)
    wx, wy = _draw_positions(scenario, streams.waypoints, n)
    speed = streams.speeds.uniform(
        scenario.mobility.speed_min_mps, scenario.mobility.speed_max_mps, n
    )
    return UserStates(
        x=x,
        y=y,
        waypoint_x=wx,
        waypoint_y=wy,
        speed=speed,
        paused=np.zeros(n, dtype=bool),
        demand_mbps=np.zeros(n),
        status=np.full(n, Assignment.DROPPED, dtype=np.int8),
        serving_site=np.full(n, -1, dtype=np.int64),
    )


def step_mobility(users: UserStates, scenario: Scenario, streams: SimulationStreams) -> UserStates:
    """Advance every user by one slot of waypoint motion (in place).

    Non-paused users move toward their waypoint by speed x slot duration,
    clamped at the waypoint. On arrival a user pauses for the next slot with
    probability ``pause_prob``, otherwise immediately draws a new waypoint
    and speed. Users that spent this slot paused draw their next leg at the
    end of it. With coverage confinement on, a leg that strays out of the
    serviceable footprint is cut short: the user is snapped onto the rim and
    treated as having arrived.
    """
    n = len(users)
    if n == 0:
        return users
    mob = scenario.mobility
    was_paused = users.paused.copy()
    moving = ~was_paused

    dx = users.waypoint_x - users.x
    dy = users.waypoint_y - users.y
    dist = np.hypot(dx, dy)
    step = users.speed * scenario.ts_duration_s

    arrive = moving & (dist <= step)
    advance = moving & ~arrive
    if advance.any():
        f = step[advance] / dist[advance]
        users.x[advance] += dx[advance] * f
        users.y[advance] += dy[advance] * f
    users.x[arrive] = users.waypoint_x[arrive]
    users.y[arrive] = users.waypoint_y[arrive]

    if mob.confine_to_coverage and advance.any():
        strayed = advance & ~in_footprint(scenario, users.x, users.y)
        if strayed.any():
            px, py = project_into_footprint(scenario, users.x[strayed], users.y[strayed])
            users.x[strayed] = px
            users.y[strayed] = py
            arrive |= strayed

    arrive_idx = np.flatnonzero(arrive)
    pausing = np.zeros(n, dtype=bool)
    if arrive_idx.size:
        u = streams.pauses.random(arrive_idx.size)
        pausing[arrive_idx[u < mob.pause_prob]] = True

    users.paused[was_paused] = False
    users.paused[pausing] = True

    redraw = np.flatnonzero((arrive & ~pausing) | was_paused)
    if redraw.size:
        wx, wy = _draw_positions(scenario, streams.waypoints, redraw.size)
        users.waypoint_x[redraw] = wx
        users.waypoint_y[redraw] = wy
        users.speed[redraw] = streams.speeds.uniform(
            mob.speed_min_mps, mob.speed_max_mps, redraw.size
        )
    return users


def sigma_for_mean(mean_mbps: float) -> float:
    """Scale of the half-normal whose mean equals ``mean_mbps``.

    A |N(0, sigma^2)| draw has mean sigma*sqrt(2/pi), so sigma = mean*sqrt(pi/2).
    """
    if mean_mbps < 0:
        raise ValueError(f"mean demand must be >= 0, got {mean_mbps}")
    return mean_mbps * math.sqrt(math.pi / 2.0)


def half_normal_mean(sigma_mbps: float) -> float:
    return sigma_mbps * math.sqrt(2.0 / math.pi)


def sample_demands(
    users: UserStates, sigma_mbps: float, stream: np.random.Generator
) -> UserStates:
    """Draw each user's slot demand as |N(0, sigma^2)|, i.i.d. per user per slot."""
    if sigma_mbps < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma_mbps}")
    users.demand_mbps = np.abs(stream.normal(0.0, 1.0, len(users))) * sigma_mbps
    return users
