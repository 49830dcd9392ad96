"""File emission: time-series CSV, metrics JSON, run manifests.

Numeric CSV columns use round-trip precision so identical configs yield
bit-identical files.
"""
from __future__ import annotations

import json
import time

import numpy as np

from . import __version__
from .solver import FieldRecord

__all__ = ["write_timeseries_csv", "write_metrics_json", "RunManifestWriter"]

_CSV_HEADER = "t,re_probe_in,im_probe_in,re_probe_out,im_probe_out,probe_out_intensity"


def write_timeseries_csv(record: FieldRecord, path) -> None:
    cols = np.column_stack([
        record.times,
        record.probe_in.real, record.probe_in.imag,
        record.probe_out.real, record.probe_out.imag,
        np.abs(record.probe_out) ** 2,
    ])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_CSV_HEADER + "\n")
        for row in cols:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def write_metrics_json(metrics_dict: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics_dict, fh, indent=2, sort_keys=True)
        fh.write("\n")


class RunManifestWriter:
    """Collects the files a run emits and writes one manifest referencing
    exactly those files."""

    def __init__(self, config_hash: str, scenario_text: str,
                 grid_used: dict, note: str = ""):
        self._t0 = time.monotonic()
        self.payload = {
            "tool": "gradecho",
            "version": __version__,
            "config_hash": config_hash,
            "scenario": scenario_text,
            "grid_used": grid_used,
            "note": note,
            "outputs": [],
        }

    def add_output(self, path) -> None:
        self.payload["outputs"].append(str(path))

    def write(self, path) -> None:
        self.payload["wall_time_s"] = time.monotonic() - self._t0
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
