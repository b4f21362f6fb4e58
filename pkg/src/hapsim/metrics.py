"""Headline metrics: proportion of users served, capacity utilization
(plain and with idle-site switch-off), and network power.

Power is modeled as proportional to deployed RAN capacity; the default
coefficient of 3.7 kW per Gbps is back-derived from the reference network
sizes (85 Gbps -> 314.5 kW, 38 Gbps -> 140.6 kW) and can be overridden.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import MetricsError
from .scenario import CellSite, SiteKind

POWER_COEFFICIENT_KW_PER_GBPS = 3.7


@dataclass(frozen=True)
class MetricsSummary:
    proportion_served: float
    utilization: float
    utilization_switchoff: float
    power_kw: float
    total_capacity_mbps: float
    # Power with idle sites switched off (mean busy capacity x coefficient).
    # Reported for completeness; no reference value pins it.
    power_switchoff_kw: float


def proportion_served(results) -> float:
    """Mean over slots of (terrestrially + overlay served users) / active users."""
    if not results:
        raise MetricsError("proportion_served needs at least one slot result")
    fractions = []
    for r in results:
        active = r.active_user_count
        fractions.append(1.0 if active == 0 else r.total_served_user_count / active)
    return float(np.mean(fractions))


def capacity_utilization(results, deployed_capacity_mbps: float) -> float:
    """Mean over slots of served demand / total deployed capacity."""
    if not results:
        raise MetricsError("capacity_utilization needs at least one slot result")
    if deployed_capacity_mbps <= 0:
        raise MetricsError("utilization is undefined for zero deployed capacity")
    served = [r.total_served_demand_mbps for r in results]
    return float(np.mean(served) / deployed_capacity_mbps)


def capacity_utilization_switchoff(results, sites: list[CellSite]) -> float:
    """Utilization counting, per slot, only sites that served at least one user.

    A slot in which nothing is served contributes a ratio of 0.
    """
    if not results:
        raise MetricsError("capacity_utilization_switchoff needs at least one slot result")
    cap_by_id = {s.id: s.capacity_mbps for s in sites if s.kind != SiteKind.HAPS}
    haps_cap = sum(s.capacity_mbps for s in sites if s.kind == SiteKind.HAPS)
    ratios = []
    for r in results:
        caps = np.array([cap_by_id.get(int(i), 0.0) for i in r.site_ids])
        busy = r.served_user_count > 0
        denom = float(caps[busy].sum())
        if r.haps_served_user_count > 0:
            denom += haps_cap
        ratios.append(0.0 if denom == 0 else r.total_served_demand_mbps / denom)
    return float(np.mean(ratios))


def mean_busy_capacity_mbps(results, sites: list[CellSite]) -> float:
    """Average over slots of the capacity of sites serving at least one user."""
    cap_by_id = {s.id: s.capacity_mbps for s in sites if s.kind != SiteKind.HAPS}
    haps_cap = sum(s.capacity_mbps for s in sites if s.kind == SiteKind.HAPS)
    total = 0.0
    for r in results:
        caps = np.array([cap_by_id.get(int(i), 0.0) for i in r.site_ids])
        total += float(caps[r.served_user_count > 0].sum())
        if r.haps_served_user_count > 0:
            total += haps_cap
    return total / len(results)


def network_power_kw(
    deployed_capacity_mbps: float,
    coefficient_kw_per_gbps: float = POWER_COEFFICIENT_KW_PER_GBPS,
) -> float:
    """Power draw of the deployed network, linear in capacity."""
    if deployed_capacity_mbps < 0:
        raise MetricsError("deployed capacity must be >= 0")
    return coefficient_kw_per_gbps * deployed_capacity_mbps / 1000.0


def summarize(
    results,
    sites: list[CellSite],
    deployed_capacity_mbps: float | None = None,
    coefficient_kw_per_gbps: float = POWER_COEFFICIENT_KW_PER_GBPS,
) -> MetricsSummary:
    """All headline metrics for one run against one deployed network."""
    if deployed_capacity_mbps is None:
        deployed_capacity_mbps = float(sum(s.capacity_mbps for s in sites))
    return MetricsSummary(
        proportion_served=proportion_served(results),
        utilization=capacity_utilization(results, deployed_capacity_mbps),
        utilization_switchoff=capacity_utilization_switchoff(results, sites),
        power_kw=network_power_kw(deployed_capacity_mbps, coefficient_kw_per_gbps),
        total_capacity_mbps=deployed_capacity_mbps,
        power_switchoff_kw=network_power_kw(
            mean_busy_capacity_mbps(results, sites), coefficient_kw_per_gbps
        ),
    )


def summary_text(summary: MetricsSummary, title: str = "network") -> str:
    """Aligned human-readable rendition of one summary."""
    rows = [
        ("Available Capacity", f"{summary.total_capacity_mbps / 1000.0:.1f} Gbps"),
        ("Proportion of Users Served", f"{summary.proportion_served * 100.0:.1f} %"),
        ("Capacity Utilization", f"{summary.utilization * 100.0:.1f} %"),
        ("Capacity Utilization (switch-off)", f"{summary.utilization_switchoff * 100.0:.1f} %"),
        ("Network Power Consumption", f"{summary.power_kw:.1f} kW"),
        ("Network Power (switch-off)", f"{summary.power_switchoff_kw:.1f} kW"),
    ]
    width = max(len(label) for label, _ in rows)
    lines = [f"[{title}]"]
    lines += [f"  {label:<{width}}  {value}" for label, value in rows]
    return "\n".join(lines)


def summary_csv(summaries: dict[str, MetricsSummary]) -> str:
    """One CSV row per summary, keyed by variant name."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(
        [
            "variant",
            "proportion_served",
            "utilization",
            "utilization_switchoff",
            "power_kw",
            "total_capacity_mbps",
            "power_switchoff_kw",
        ]
    )
    for name, s in summaries.items():
        w.writerow(
            [
                name,
                f"{s.proportion_served:.6f}",
                f"{s.utilization:.6f}",
                f"{s.utilization_switchoff:.6f}",
                f"{s.power_kw:.3f}",
                f"{s.total_capacity_mbps:.3f}",
                f"{s.power_switchoff_kw:.3f}",
            ]
        )
    return buf.getvalue()
