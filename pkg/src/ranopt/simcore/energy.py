"""AAU-dominated site energy model with ESS/ECS/CWS shutdown levers."""
from __future__ import annotations

from .types import CellConfig

SLEEP_POWER_W = 50.0
STATIC_POWER_W = 300.0
DYNAMIC_POWER_W = 600.0
AAU_SITE_SHARE = 0.80  # AAU accounts for 80% of site power
ESS_MIN_FRACTION = 0.10


def aau_power_w(cell: CellConfig, load_rbur: float) -> float:
    if not cell.carrier_on:
        return SLEEP_POWER_W
    load = max(float(load_rbur), 0.0)
    ess_active = cell.symbol_fraction < 1.0
    symbol_eff = max(load, ESS_MIN_FRACTION) if ess_active else 1.0
    return (SLEEP_POWER_W
            + STATIC_POWER_W * cell.channel_fraction
            + DYNAMIC_POWER_W * cell.channel_fraction * load * symbol_eff)


def energy_step(cell: CellConfig, load_rbur: float, window_len_s: float):
    """(site power W, energy Wh) for one window at the given load."""
    power = aau_power_w(cell, load_rbur) / AAU_SITE_SHARE
    return power, power * window_len_s / 3600.0
