"""Round-robin scheduler, rate model and beam-collision statistic."""
from __future__ import annotations

import numpy as np

from .types import RATE_CAP_MBPS

SPECTRAL_EFFICIENCY_FACTOR = 0.75
COLLISION_GAP_DB = 6.0


def schedule_and_rate(bandwidth_mhz: float, sinr_db, demand_mbps):
    """Equal-PRB-share rates for one cell's attached users.

    Returns (per-user rate Mbps, cell throughput Mbps, rbur). The rate cap
    is min(demand, downlink peak rate); unused share lowers rbur.
    """
    sinr_db = np.asarray(sinr_db, dtype=float)
    demand = np.asarray(demand_mbps, dtype=float)
    n = sinr_db.size
    if n == 0:
        return np.zeros(0), 0.0, 0.0
    share_mhz = bandwidth_mhz / n
    raw = SPECTRAL_EFFICIENCY_FACTOR * share_mhz * np.log2(1.0 + 10.0 ** (sinr_db / 10.0))
    cap = np.minimum(demand, RATE_CAP_MBPS)
    rate = np.minimum(raw, cap)
    with np.errstate(divide="ignore", invalid="ignore"):
        used_fraction = np.where(raw > 0.0, np.minimum(1.0, cap / raw), 0.0)
    rbur = float(np.sum(used_fraction) / n)
    return rate, float(np.sum(rate)), rbur


def collision_flags(serving_rsrp_dbm, best_interferer_rsrp_dbm):
    """True where the strongest interferer is within the collision gap."""
    s = np.asarray(serving_rsrp_dbm, dtype=float)
    i = np.asarray(best_interferer_rsrp_dbm, dtype=float)
    return (s - i) <= COLLISION_GAP_DB


def collision_ratio(serving_rsrp_dbm, best_interferer_rsrp_dbm) -> float:
    """Fraction of users in collision; 0 with no users or no interferer."""
    s = np.asarray(serving_rsrp_dbm, dtype=float)
    if s.size == 0:
        return 0.0
    return float(np.mean(collision_flags(s, best_interferer_rsrp_dbm)))
