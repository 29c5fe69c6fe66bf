"""Bundled subject specs and record-to-subject routing."""
from __future__ import annotations

from .store import Column, SubjectSpec

SUBJECT_BEAM = "beam-management"
SUBJECT_THROUGHPUT = "throughput"
SUBJECT_INTERFERENCE = "interference"
SUBJECT_ENERGY = "energy"


def bundled_subjects() -> list[SubjectSpec]:
    return [
        SubjectSpec(SUBJECT_BEAM, [
            Column("t_s", "float", "s"),
            Column("user_hash", "str"),
            Column("cell_id", "str"),
            Column("beam_id", "int"),
            Column("signal_type", "str"),
            Column("rsrp_dbm", "float", "dBm"),
            Column("sinr_db", "float", "dB"),
            Column("rate_mbps", "float", "Mbps"),
            Column("pos_x_m", "float", "m"),
            Column("pos_y_m", "float", "m"),
            Column("source_tag", "str"),
        ]),
        SubjectSpec(SUBJECT_THROUGHPUT, [
            Column("t_s", "float", "s"),
            Column("cell_id", "str"),
            Column("window_len_s", "float", "s"),
            Column("throughput_mbps", "float", "Mbps"),
            Column("rbur", "float"),
            Column("num_users", "int"),
            Column("source_tag", "str"),
        ]),
        SubjectSpec(SUBJECT_INTERFERENCE, [
            Column("t_s", "float", "s"),
            Column("cell_id", "str"),
            Column("collision_ratio", "float"),
            Column("num_users", "int"),
            Column("source_tag", "str"),
        ]),
        SubjectSpec(SUBJECT_ENERGY, [
            Column("t_s", "float", "s"),
            Column("cell_id", "str"),
            Column("window_len_s", "float", "s"),
            Column("rbur", "float"),
            Column("power_w", "float", "W"),
            Column("energy_wh", "float", "Wh"),
            Column("source_tag", "str"),
        ]),
    ]


def create_bundled_subjects(warehouse) -> list[str]:
    return [warehouse.create_subject(spec) for spec in bundled_subjects()]
