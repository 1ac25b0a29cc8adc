"""JSON configuration, trajectory files and filter trace export.

Configuration schema (version 1)::

    {
      "schema": 1,
      "model": {
        "modes": [{"A": [[...]], "B": [[...]], "C": [[...]], "D": [[...]]}, ...],
        "W": [[...]], "V": [[...]], "Pi": [[...]],
        "p0_mode": [...], "x0_mean": [...], "X0": [[...]]
      },
      "true_schedule":    [{"start": 1, "Pi": [[...]]}, {"start": 70, "Pi": [[...]]}],
      "nominal_schedule": [{"start": 1, "Pi": [[...]]}, ...],
      "experiment": {"horizon": 100, "runs": 200, "seed": 0,
                     "rtv": [0, 0.1, 0.3],
                     "windows": [{"name": "II", "start": 70, "end": 100}],
                     "bootstrap": 1000},
      "filter": {"mu_floor": 1e-12, "tie_tol": 1e-9, "cond_floor": 1e-12,
                 "joseph": false}
    }

Matrices are row-major nested lists.  Schedule entries override any model
field from their ``start`` step (1-based, inclusive) onwards; both schedules
are optional and default to the plain model.  Floats are written with
``repr`` so every file round-trips exactly.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, ModelError
from .filter import FilterConfig, FilterState
from .model import MjlsModel, ScheduledModel, Trajectory

SCHEMA_VERSION = 1
_MODE_KEYS = ("A", "B", "C", "D")
_SHARED_KEYS = ("W", "V", "Pi", "p0_mode", "x0_mean", "X0")


@dataclass
class Config:
    model: MjlsModel
    true_schedule: ScheduledModel
    nominal_schedule: ScheduledModel
    experiment: dict = field(default_factory=dict)
    filter: FilterConfig = field(default_factory=FilterConfig)
    raw: dict = field(default_factory=dict)


def model_from_dict(d: dict) -> MjlsModel:
    try:
        modes = d["modes"]
        stacked = {k: [m[k] for m in modes] for k in _MODE_KEYS}
        shared = {k: d[k] for k in _SHARED_KEYS}
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"model is missing field {exc}") from None
    try:
        return MjlsModel(**stacked, **shared)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"malformed model: {exc}") from None


def model_to_dict(model: MjlsModel) -> dict:
    d = model.to_dict()
    out = {"modes": [{k: d[k][j] for k in _MODE_KEYS} for j in range(model.n_theta)]}
    out.update({k: d[k] for k in _SHARED_KEYS})
    return out


def _schedule(model, entries):
    if entries is None:
        return ScheduledModel.constant(model)
    segments = []
    for e in entries:
        e = dict(e)
        if "start" not in e:
            raise ConfigError("schedule entry without 'start'")
        start = e.pop("start")
        if not isinstance(start, int):
            raise ConfigError(f"schedule start must be an integer, got {start!r}")
        segments.append((start, e))
    return ScheduledModel(model, segments)


def config_from_dict(raw: dict) -> Config:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    schema = raw.get("schema")
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema {schema!r} (expected {SCHEMA_VERSION})")
    if "model" not in raw:
        raise ConfigError("configuration has no 'model'")
    model = model_from_dict(raw["model"])
    # schedules validate every segment; a bad base model surfaces here too
    true_s = _schedule(model, raw.get("true_schedule"))
    nom_s = _schedule(model, raw.get("nominal_schedule"))
    fcfg = raw.get("filter", {})
    try:
        filt = FilterConfig(**fcfg)
    except TypeError as exc:
        raise ConfigError(f"bad filter options: {exc}") from None
    return Config(model=model, true_schedule=true_s, nominal_schedule=nom_s,
                  experiment=dict(raw.get("experiment", {})), filter=filt, raw=raw)


def read_json(path) -> Any:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def load_config(path) -> Config:
    """Load a configuration file; raises ConfigError or ModelError."""
    return config_from_dict(read_json(path))


def bundled_config_path() -> Path:
    return Path(str(resources.files("drgpb") / "data" / "paper_sec4.json"))


def load_bundled_config() -> Config:
    """The bundled two-mode, two-scenario mismatch study."""
    return load_config(bundled_config_path())


def save_trajectory(traj: Trajectory, path) -> None:
    Path(path).write_text(json.dumps(traj.to_dict()) + "\n", encoding="utf-8")


def load_trajectory(path) -> Trajectory:
    d = read_json(path)
    try:
        return Trajectory.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed trajectory ({exc})") from None


def trace_columns(n_x: int, n_theta: int, with_truth: bool = True) -> list[str]:
    """Stable CSV column order for filter traces."""
    cols = ["k"]
    cols += [f"x_hat_{i}" for i in range(n_x)]
    cols += [f"P_diag_{i}" for i in range(n_x)]
    cols += [f"mu_{j}" for j in range(n_theta)]
    cols += [f"nu_star_{j}" for j in range(n_theta)]
    cols += ["alpha", "rtv"]
    if with_truth:
        cols += ["theta_true"] + [f"x_true_{i}" for i in range(n_x)]
    return cols


def trace_records(states: Sequence[FilterState], trajectory: Trajectory | None = None) -> list[dict]:
    """One JSON-ready record per filter step (k >= 1)."""
    out = []
    for s in states:
        if s.k == 0:
            continue
        rec = {
            "k": s.k,
            "x_hat": s.mean.tolist(),
            "P_diag": np.diag(s.cov).tolist(),
            "mu": s.mu.tolist(),
            "nu_star": s.nu_star.tolist(),
            "alpha": float(s.alpha),
            "rtv": float(s.rtv),
        }
        if trajectory is not None:
            rec["theta_true"] = int(trajectory.modes[s.k - 1])
            rec["x_true"] = trajectory.states[s.k].tolist()
        out.append(rec)
    return out


def write_trace_jsonl(records: Sequence[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def _flat(rec):
    row = [rec["k"], *rec["x_hat"], *rec["P_diag"], *rec["mu"], *rec["nu_star"],
           rec["alpha"], rec["rtv"]]
    if "theta_true" in rec:
        row += [rec["theta_true"], *rec["x_true"]]
    return [repr(v) if isinstance(v, float) else v for v in row]


def write_trace_csv(records: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if records:
            r0 = records[0]
            w.writerow(trace_columns(len(r0["x_hat"]), len(r0["mu"]), "theta_true" in r0))
        for rec in records:
            w.writerow(_flat(rec))


__all__ = [
    "Config", "ConfigError", "ModelError", "config_from_dict", "load_config",
    "load_bundled_config", "load_trajectory", "model_from_dict", "model_to_dict",
    "bundled_config_path", "save_trajectory", "trace_columns", "trace_records",
    "write_trace_csv", "write_trace_jsonl",
]
