"""Named, independently seeded random streams.

Each stochastic concern of a simulation run draws from its own generator,
all derived from the scenario seed. Changing how one concern consumes
randomness (e.g. more waypoint redraws) never perturbs the draws seen by
the others, and the terrestrial admission order stays identical across
network variants that share a seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STREAM_NAMES = (
    "positions",   # initial user placement
    "waypoints",   # waypoint redraws
    "speeds",      # per-leg travel speeds
    "pauses",      # pause-on-arrival decisions
    "demands",     # per-slot throughput demands
    "admission",   # per-slot terrestrial contention order
    "overlay",     # per-slot aerial-overlay contention order
)


@dataclass
class SimulationStreams:
    positions: np.random.Generator
    waypoints: np.random.Generator
    speeds: np.random.Generator
    pauses: np.random.Generator
    demands: np.random.Generator
    admission: np.random.Generator
    overlay: np.random.Generator


def make_streams(seed: int) -> SimulationStreams:
    """Derive one independent generator per concern from a 64-bit seed."""
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(STREAM_NAMES))
    return SimulationStreams(
        **{name: np.random.default_rng(child) for name, child in zip(STREAM_NAMES, children)}
    )
