"""Config files: flat key/value sections mirroring the scenario fields.

Format is INI. ``[scenario]`` mirrors :class:`Scenario`, ``[mobility]``
mirrors :class:`MobilityParams`; ``[sweep]`` and ``[power]`` are optional.
A missing ``active_user_count`` falls back to the packaged calibration
constant for the default scenario.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .errors import ConfigurationError
from .experiments import (
    DEFAULT_HAPS_CAPACITIES,
    DEFAULT_SWEEP_MEANS,
    VariantSpec,
    default_variants,
)
from .metrics import POWER_COEFFICIENT_KW_PER_GBPS
from .scenario import CALIBRATED_ACTIVE_USERS, MobilityParams, Scenario

_SCENARIO_FLOAT = {
    "area_width_m", "area_height_m", "bs_coverage_radius_m", "bs_capacity_mbps",
    "haps_capacity_mbps", "ts_duration_s", "demand_sigma_mbps",
}
_SCENARIO_INT = {"bs_rows", "bs_cols", "num_users", "active_user_count", "num_ts", "seed"}
_MOBILITY_FLOAT = {"speed_min_mps", "speed_max_mps", "pause_prob"}
_MOBILITY_BOOL = {"confine_to_coverage"}
_SWEEP_KEYS = {"mean_demands_mbps", "haps_capacities_mbps", "include_baseline", "include_densified"}
_POWER_KEYS = {"coefficient_kw_per_gbps"}


@dataclass(frozen=True)
class SweepSettings:
    mean_demands_mbps: tuple[float, ...] = DEFAULT_SWEEP_MEANS
    haps_capacities_mbps: tuple[float, ...] = DEFAULT_HAPS_CAPACITIES
    include_baseline: bool = True
    include_densified: bool = True

    def variants(self) -> list[VariantSpec]:
        return default_variants(
            self.haps_capacities_mbps, self.include_baseline, self.include_densified
        )


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    sweep: SweepSettings
    power_coefficient_kw_per_gbps: float = POWER_COEFFICIENT_KW_PER_GBPS


def _float_list(raw: str) -> tuple[float, ...]:
    values = tuple(float(tok) for tok in raw.replace(",", " ").split())
    if not values:
        raise ConfigurationError("expected at least one number")
    return values


def _check_keys(section: str, present, allowed) -> None:
    unknown = set(present) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}"
        )


def load_config(path, seed_override: int | None = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigurationError(f"config file not found: {path}")

    known_sections = {"scenario", "mobility", "sweep", "power"}
    unknown_sections = set(parser.sections()) - known_sections
    if unknown_sections:
        raise ConfigurationError(f"unknown config section(s): {', '.join(sorted(unknown_sections))}")

    try:
        mob_kwargs = {}
        if parser.has_section("mobility"):
            sec = parser["mobility"]
            _check_keys("mobility", sec.keys(), _MOBILITY_FLOAT | _MOBILITY_BOOL)
            for key in _MOBILITY_FLOAT & sec.keys():
                mob_kwargs[key] = sec.getfloat(key)
            for key in _MOBILITY_BOOL & sec.keys():
                mob_kwargs[key] = sec.getboolean(key)
        mobility = MobilityParams(**mob_kwargs)

        sc_kwargs: dict = {"mobility": mobility}
        if parser.has_section("scenario"):
            sec = parser["scenario"]
            _check_keys("scenario", sec.keys(), _SCENARIO_FLOAT | _SCENARIO_INT)
            for key in _SCENARIO_FLOAT & sec.keys():
                sc_kwargs[key] = sec.getfloat(key)
            for key in _SCENARIO_INT & sec.keys():
                sc_kwargs[key] = sec.getint(key)
        if "active_user_count" not in sc_kwargs:
            sc_kwargs["active_user_count"] = CALIBRATED_ACTIVE_USERS
        if seed_override is not None:
            sc_kwargs["seed"] = seed_override
        scenario = Scenario(**sc_kwargs)

        sweep_kwargs: dict = {}
        if parser.has_section("sweep"):
            sec = parser["sweep"]
            _check_keys("sweep", sec.keys(), _SWEEP_KEYS)
            if "mean_demands_mbps" in sec:
                sweep_kwargs["mean_demands_mbps"] = _float_list(sec["mean_demands_mbps"])
            if "haps_capacities_mbps" in sec:
                sweep_kwargs["haps_capacities_mbps"] = _float_list(sec["haps_capacities_mbps"])
            if "include_baseline" in sec:
                sweep_kwargs["include_baseline"] = sec.getboolean("include_baseline")
            if "include_densified" in sec:
                sweep_kwargs["include_densified"] = sec.getboolean("include_densified")
        sweep = SweepSettings(**sweep_kwargs)

        coefficient = POWER_COEFFICIENT_KW_PER_GBPS
        if parser.has_section("power"):
            sec = parser["power"]
            _check_keys("power", sec.keys(), _POWER_KEYS)
            if "coefficient_kw_per_gbps" in sec:
                coefficient = sec.getfloat("coefficient_kw_per_gbps")
    except ValueError as exc:
        raise ConfigurationError(f"malformed value in {path}: {exc}") from exc

    return RunConfig(scenario=scenario, sweep=sweep, power_coefficient_kw_per_gbps=coefficient)


def default_config(seed_override: int | None = None) -> RunConfig:
    scenario = Scenario() if seed_override is None else Scenario(seed=seed_override)
    return RunConfig(scenario=scenario, sweep=SweepSettings())
