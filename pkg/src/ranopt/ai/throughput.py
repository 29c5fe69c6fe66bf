"""Throughput use case: radio-map models and candidate config scoring.

Per cell, a GPR learns the residual between measured RSRP and the analytic
antenna/propagation model at the config that was active when each sample was
taken. Candidate configs are then scored by analytic model + learned residual,
users are re-attached, and network throughput is predicted. A surrogate MLP
trained on the candidate grid drives the final config search.
"""
from __future__ import annotations

import numpy as np

from ..errors import InsufficientHistory
from ..simcore.radio import best_beam_rsrp_dbm, dbm_to_mw, noise_dbm
from ..simcore.scheduler import schedule_and_rate
from ..simcore.types import CellConfig
from .gpr import GprRegressor
from .surrogate import build_grid_axes, fit_surrogate, optimize_config

UNCAPPED_DEMAND_MBPS = 1e9
MIN_SAMPLES_PER_CELL = 8


class ConfigLog:
    """Time-ordered record of which config each cell had in each window."""

    def __init__(self):
        self._entries: list[tuple[float, dict[str, dict]]] = []

    def record(self, t_s: float, cells: dict[str, CellConfig]) -> None:
        snap = {cid: {"azimuth_deg": c.azimuth_deg, "tilt_deg": c.tilt_deg,
                      "tx_power_dbm": c.tx_power_dbm,
                      "pattern_id": c.pattern_id}
                for cid, c in cells.items()}
        self._entries.append((float(t_s), snap))
        self._entries.sort(key=lambda e: e[0])

    def lookup(self, cell_id: str, t_s: float) -> dict | None:
        """Config fields active for cell_id at time t_s, or None."""
        best = None
        for t0, snap in self._entries:
            if t0 <= t_s and cell_id in snap:
                best = snap[cell_id]
        return best


def _with_fields(cell: CellConfig, fields: dict) -> CellConfig:
    return cell.replace(**fields)


def fit_radio_maps(measurement_rows, cells: dict[str, CellConfig],
                   config_log: ConfigLog, carrier_ghz: float
                   ) -> dict[str, GprRegressor]:
    """One residual GPR per cell from warehouse measurement rows.

    measurement_rows: dicts with t_s, cell_id, rsrp_dbm, pos_x_m, pos_y_m.
    """
    per_cell: dict[str, list[list[float]]] = {cid: [] for cid in cells}
    for row in measurement_rows:
        cid = row["cell_id"]
        if cid not in cells:
            continue
        hist = config_log.lookup(cid, row["t_s"])
        if hist is None:
            continue
        per_cell[cid].append([row["pos_x_m"], row["pos_y_m"],
                              hist["azimuth_deg"], hist["tilt_deg"],
                              hist["tx_power_dbm"], hist["pattern_id"],
                              row["rsrp_dbm"]])
    maps: dict[str, GprRegressor] = {}
    for cid, rows in per_cell.items():
        if len(rows) < MIN_SAMPLES_PER_CELL:
            raise InsufficientHistory(
                f"cell {cid}: {len(rows)} usable measurements, "
                f"need {MIN_SAMPLES_PER_CELL}")
        arr = np.array(rows)
        base = cells[cid]
        resid = np.empty(arr.shape[0])
        for hist_key in {tuple(r[2:6]) for r in rows}:
            mask = (arr[:, 2] == hist_key[0]) & (arr[:, 3] == hist_key[1]) \
                & (arr[:, 4] == hist_key[2]) & (arr[:, 5] == hist_key[3])
            cfg = base.replace(azimuth_deg=hist_key[0], tilt_deg=hist_key[1],
                               tx_power_dbm=hist_key[2],
                               pattern_id=int(hist_key[3]))
            pred, _ = best_beam_rsrp_dbm(cfg, arr[mask, 0:2], carrier_ghz)
            resid[mask] = arr[mask, 6] - pred
        gpr = GprRegressor()
        gpr.fit(arr[:, 0:4], resid)
        maps[cid] = gpr
    return maps


def predicted_rsrp(cell: CellConfig, gpr: GprRegressor, positions,
                   carrier_ghz: float) -> np.ndarray:
    """Analytic best-beam RSRP at the cell's current fields + GPR residual."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    analytic, _ = best_beam_rsrp_dbm(cell, pos, carrier_ghz)
    q = np.column_stack([pos,
                         np.full(pos.shape[0], cell.azimuth_deg),
                         np.full(pos.shape[0], cell.tilt_deg)])
    return analytic + gpr.predict(q)


def predict_network_throughput(cells: dict[str, CellConfig],
                               radio_maps: dict[str, GprRegressor],
                               positions, bandwidth_mhz: float,
                               carrier_ghz: float,
                               target_cell: str | None = None,
                               candidate_fields: dict | None = None,
                               demand_mbps: float = UNCAPPED_DEMAND_MBPS
                               ) -> float:
    """Re-attach users under predicted RSRP and sum per-cell throughput."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if pos.shape[0] == 0:
        return 0.0
    eval_cells = dict(cells)
    if target_cell is not None and candidate_fields:
        eval_cells[target_cell] = _with_fields(cells[target_cell],
                                               candidate_fields)
    ids = sorted(eval_cells)
    rsrp = np.stack([predicted_rsrp(eval_cells[cid], radio_maps[cid], pos,
                                    carrier_ghz) for cid in ids])
    bias = np.array([eval_cells[cid].cio_db if eval_cells[cid].carrier_on
                     else -np.inf for cid in ids])
    serving = (rsrp + bias[:, None]).argmax(axis=0)
    noise_mw = dbm_to_mw(noise_dbm(bandwidth_mhz))
    total = 0.0
    for i, cid in enumerate(ids):
        idx = np.flatnonzero(serving == i)
        if idx.size == 0 or not eval_cells[cid].carrier_on:
            continue
        s_mw = dbm_to_mw(rsrp[i, idx])
        others = [dbm_to_mw(rsrp[j, idx]) for j, cj in enumerate(ids)
                  if j != i and eval_cells[cj].carrier_on]
        i_tot = np.sum(np.stack(others), axis=0) if others else 0.0
        sinr = np.clip(10.0 * np.log10(s_mw / (i_tot + noise_mw)), -23.0, 40.0)
        demand = np.full(idx.size, demand_mbps)
        _, thr, _ = schedule_and_rate(
            bandwidth_mhz * eval_cells[cid].channel_fraction, sinr, demand)
        total += thr
    return float(total)


def estimate_demand_cap(measurement_rows) -> float:
    """Per-user demand estimate: the best rate any user ever achieved.

    Fully served users report rate == demand, so the historical maximum is a
    tight lower bound on the per-user demand cap."""
    best = max((r.get("rate_mbps", 0.0) for r in measurement_rows),
               default=0.0)
    return best if best > 0.0 else UNCAPPED_DEMAND_MBPS


def build_surrogate_dataset(cells, radio_maps, positions, bandwidth_mhz,
                            carrier_ghz, target_cell, bounds,
                            steps: dict | None = None,
                            demand_mbps: float = UNCAPPED_DEMAND_MBPS):
    """Predicted throughput over the whole candidate grid of one cell."""
    axes = build_grid_axes(bounds, steps)
    names = list(axes)
    X, y = [], []
    for idx in np.ndindex(*[len(axes[n]) for n in names]):
        fields = {n: float(axes[n][i]) for n, i in zip(names, idx)}
        X.append([fields.get("azimuth_deg", 0.0),
                  fields.get("tilt_deg", 0.0),
                  fields.get("tx_power_dbm", 0.0)][:len(names)])
        y.append(predict_network_throughput(
            cells, radio_maps, positions, bandwidth_mhz, carrier_ghz,
            target_cell=target_cell, candidate_fields=fields,
            demand_mbps=demand_mbps))
    return np.array(X), np.array(y), names


def recommend_config(measurement_rows, cells: dict[str, CellConfig],
                     config_log: ConfigLog, target_cell: str, bounds: dict,
                     bandwidth_mhz: float, carrier_ghz: float,
                     steps: dict | None = None, seed: int = 0):
    """Full pipeline: radio maps -> grid dataset -> surrogate -> argmax.

    Returns (fields, predicted_throughput_mbps).
    """
    maps = fit_radio_maps(measurement_rows, cells, config_log, carrier_ghz)
    t_latest = max(r["t_s"] for r in measurement_rows)
    latest = [r for r in measurement_rows if r["t_s"] == t_latest]
    positions = np.array([[r["pos_x_m"], r["pos_y_m"]] for r in latest])
    X, y, names = build_surrogate_dataset(
        cells, maps, positions, bandwidth_mhz, carrier_ghz, target_cell,
        bounds, steps, demand_mbps=estimate_demand_cap(measurement_rows))
    surrogate = fit_surrogate(X, y, seed=seed)
    fields, predicted = optimize_config(surrogate, bounds, steps)
    return fields, predicted
