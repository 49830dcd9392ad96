"""Parameter-grid execution over scenarios: embarrassingly parallel, with an
append-only checkpoint so an interrupted sweep resumes without recomputation.

The work unit is one grid point (one integrate + metrics pass).  Results are
keyed and merged by grid index, so tables are identical for any worker count
and for resumed runs.
"""
from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .metrics import (AmbiguousPeakError, EchoMetrics, UndefinedMetricError,
                      compute_echo_metrics, detect_echo, storage_efficiency)
from .model import Scenario, validate_scenario
from .solver import integrate

__all__ = [
    "SweepSpec",
    "PointResult",
    "SweepResult",
    "run_sweep",
    "dispersion_flag",
    "set_scenario_field",
    "get_scenario_field",
]

CHECKPOINT_FSYNC_BATCH = 8
DISPERSION_BROADENING = 0.25  # echo fwhm > (1 + this) * input fwhm marks distortion


def get_scenario_field(scenario: Scenario, path: str):
    obj = scenario
    for part in path.split("."):
        if not hasattr(obj, part):
            raise KeyError(f"parameter path {path!r} does not resolve "
                           f"({part!r} missing on {type(obj).__name__})")
        obj = getattr(obj, part)
    return obj


def set_scenario_field(scenario: Scenario, path: str, value) -> Scenario:
    parts = path.split(".")
    get_scenario_field(scenario, path)  # raises on bad path

    def rebuild(obj, parts, value):
        if len(parts) == 1:
            return dataclasses.replace(obj, **{parts[0]: value})
        child = getattr(obj, parts[0])
        return dataclasses.replace(obj, **{parts[0]: rebuild(child, parts[1:], value)})

    return rebuild(scenario, parts, value)


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition over a base scenario.

    ``axes`` maps dotted scenario paths (e.g. "medium.xi", "profile.zeta") to
    value lists; the grid is their Cartesian product in axis order, indexed
    row-major.  ``detect_after`` defaults to the last flip time of each
    point's schedule; ``efficiency_cut`` to the same.
    """

    base: Scenario
    axes: Tuple[Tuple[str, Tuple[float, ...]], ...]
    workers: int = 1
    checkpoint: Optional[str] = None
    efficiency_cut: Optional[float] = None
    detect_after: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.axes:
            raise ValueError("axes must be nonempty")
        axes = tuple((str(p), tuple(float(v) for v in vals)) for p, vals in self.axes)
        object.__setattr__(self, "axes", axes)
        for p, vals in axes:
            get_scenario_field(self.base, p)  # spec error before any run
            if not vals:
                raise ValueError(f"axis {p!r} has no values")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(vals) for _, vals in self.axes)

    def size(self) -> int:
        return int(np.prod(self.shape))

    def point(self, index: int) -> tuple[dict, Scenario]:
        coords = np.unravel_index(index, self.shape)
        values = {path: vals[c] for (path, vals), c in zip(self.axes, coords)}
        s = self.base
        for path, v in values.items():
            s = set_scenario_field(s, path, v)
        return values, s


@dataclass(frozen=True)
class PointResult:
    index: int
    values: dict
    metrics: Optional[dict]
    flags: dict
    error: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps({"index": self.index, "values": self.values,
                           "metrics": self.metrics, "flags": self.flags,
                           "error": self.error}, sort_keys=True)

    @staticmethod
    def from_json(line: str) -> "PointResult":
        d = json.loads(line)
        return PointResult(index=d["index"], values=d["values"],
                           metrics=d["metrics"], flags=d["flags"],
                           error=d.get("error"))


@dataclass(frozen=True)
class SweepResult:
    spec_shape: Tuple[int, ...]
    axis_paths: Tuple[str, ...]
    rows: Tuple[PointResult, ...]

    def to_csv(self, path) -> None:
        keys = set()
        for r in self.rows:
            if r.metrics:
                keys.update(r.metrics.keys())
        cols = sorted(keys)
        flag_cols: list[str] = []
        for r in self.rows:
            if r.flags:
                flag_cols = sorted(r.flags.keys())
                break
        header = (["index"] + list(self.axis_paths) + cols + flag_cols + ["error"])
        lines = [",".join(header)]
        for r in self.rows:
            rec = [str(r.index)]
            rec += [_fmt(r.values[p]) for p in self.axis_paths]
            rec += [_fmt(r.metrics[c]) if r.metrics and c in r.metrics else ""
                    for c in cols]
            rec += [str(r.flags.get(c, "")) for c in flag_cols]
            rec.append("" if r.error is None else r.error.replace(",", ";"))
            lines.append(",".join(rec))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def dispersion_flag(metrics: EchoMetrics) -> bool:
    """Distortion marker: echo measurably broader than the stored pulse."""
    return bool(metrics.echo_fwhm > (1.0 + DISPERSION_BROADENING) * metrics.input_fwhm)


def _run_point(args) -> PointResult:
    spec, index = args
    coords = np.unravel_index(index, spec.shape)
    values = {path: vals[c] for (path, vals), c in zip(spec.axes, coords)}
    try:
        _, scenario = spec.point(index)
        issues = validate_scenario(scenario)
        if any(i.severity == "error" for i in issues):
            msgs = "; ".join(i.message for i in issues if i.severity == "error")
            return PointResult(index, values, None, {}, error=f"validation: {msgs}")
        record = integrate(scenario, check=False)
        after = spec.detect_after
        if after is None:
            after = scenario.schedule.last_flip_time()
        t_cut = spec.efficiency_cut if spec.efficiency_cut is not None else after
        if after is None:
            det = None
        else:
            det = detect_echo(record, after)
        if det is None:
            flags = {"no_echo": True, "dispersion": ""}
            return PointResult(index, values, None, flags,
                               error=None if after is not None else
                               "schedule has no flip; echo metrics undefined")
        try:
            m = compute_echo_metrics(record, after, t_cut)
            flags = {"no_echo": False, "dispersion": dispersion_flag(m)}
            return PointResult(index, values, m.as_dict(), flags)
        except AmbiguousPeakError:
            # deep-dispersion corner: the echo is multimodal, so widths are
            # meaningless, but efficiency and peak location still are
            partial = {"efficiency_R": storage_efficiency(record, t_cut),
                       "echo_peak_time": det.peak_time,
                       "echo_peak_value": det.peak_value}
            flags = {"no_echo": False, "dispersion": "ambiguous"}
            return PointResult(index, values, partial, flags)
    except (UndefinedMetricError, ValueError, RuntimeError) as exc:
        return PointResult(index, values, None, {}, error=f"{type(exc).__name__}: {exc}")


class _Checkpoint:
    def __init__(self, path: Optional[str]):
        self.path = Path(path) if path else None
        self._fh = None
        self._pending = 0

    def load(self) -> dict[int, PointResult]:
        done: dict[int, PointResult] = {}
        if self.path and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line:
                    continue
                r = PointResult.from_json(line)
                done[r.index] = r
        return done

    def append(self, r: PointResult) -> None:
        if self.path is None:
            return
        if self._fh is None:
            self._fh = open(self.path, "a", encoding="utf-8")
        self._fh.write(r.to_json() + "\n")
        self._pending += 1
        if self._pending >= CHECKPOINT_FSYNC_BATCH:
            self.flush()

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._pending = 0

    def close(self) -> None:
        if self._fh is not None:
            self.flush()
            self._fh.close()
            self._fh = None


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate every grid point; deterministic per point regardless of
    worker count or completion order.  Failed points carry their error
    string instead of poisoning the sweep."""
    n = spec.size()
    ckpt = _Checkpoint(spec.checkpoint)
    done = ckpt.load()
    todo = [i for i in range(n) if i not in done]
    try:
        if todo:
            if spec.workers == 1:
                for i in todo:
                    r = _run_point((spec, i))
                    done[r.index] = r
                    ckpt.append(r)
            else:
                with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                    for r in pool.map(_run_point, [(spec, i) for i in todo]):
                        done[r.index] = r
                        ckpt.append(r)
    finally:
        ckpt.close()
    rows = tuple(done[i] for i in range(n))
    return SweepResult(spec_shape=spec.shape,
                       axis_paths=tuple(p for p, _ in spec.axes), rows=rows)
