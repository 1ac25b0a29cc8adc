"""Monte Carlo comparison of TV radii under transition-matrix mismatch.

Every run samples one trajectory from the *true* schedule and filters it with
the *nominal* schedule once per configured radius.  Run ``i`` draws from the
random stream keyed by ``(seed, i)``, so results do not depend on the order
(or the process) in which runs are executed.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FilterStepError
from .filter import FilterConfig, FilterTrace, check_state, run_filter
from .io import Config, trace_records, write_trace_jsonl
from .model import ScheduledModel, Trajectory, make_rng, sample_trajectory

BOOTSTRAP_STREAM = 2**31 - 1


@dataclass(frozen=True)
class Window:
    name: str
    start: int
    end: int  # inclusive

    def slice(self) -> slice:
        return slice(self.start - 1, self.end)


def default_windows(horizon: int) -> tuple[Window, ...]:
    """Scenario I on 1..29, the hold period on 30..69, scenario II on 70..N."""
    wins = [Window("I", 1, min(29, horizon))]
    if horizon >= 30:
        wins.append(Window("gap", 30, min(69, horizon)))
    if horizon >= 70:
        wins.append(Window("II", 70, horizon))
    wins.append(Window("all", 1, horizon))
    return tuple(wins)


@dataclass
class ExperimentSpec:
    true_model: ScheduledModel
    nominal_model: ScheduledModel
    horizon: int = 100
    radii: tuple[float, ...] = (0.0, 0.1, 0.3)
    runs: int = 200
    seed: int = 0
    windows: tuple[Window, ...] | None = None
    bootstrap: int = 1000
    filter: FilterConfig = field(default_factory=FilterConfig)
    check_invariants: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        self.radii = tuple(float(r) for r in self.radii)
        for r in self.radii:
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"radius {r} outside [0, 1]")
        if self.windows is None:
            self.windows = default_windows(self.horizon)
        self.windows = tuple(self.windows)
        for w in self.windows:
            if not 1 <= w.start <= w.end <= self.horizon:
                raise ValueError(f"window {w} outside 1..{self.horizon}")

    @classmethod
    def from_config(cls, cfg: Config, **overrides) -> "ExperimentSpec":
        e = dict(cfg.experiment)
        horizon = int(overrides.pop("horizon", None) or e.get("horizon", 100))
        wins = e.get("windows")
        kwargs = dict(
            true_model=cfg.true_schedule,
            nominal_model=cfg.nominal_schedule,
            horizon=horizon,
            radii=tuple(e.get("rtv", (0.0, 0.1, 0.3))),
            runs=int(e.get("runs", 200)),
            seed=int(e.get("seed", 0)),
            windows=tuple(Window(**w) for w in wins) if wins else None,
            bootstrap=int(e.get("bootstrap", 1000)),
            filter=cfg.filter,
        )
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)


@dataclass
class RunMetrics:
    """Per-step error and mode hits of one filter run."""

    run: int
    radius_index: int
    rtv: float
    sq_error: np.ndarray
    nu_hit: np.ndarray
    mu_hit: np.ndarray
    value: np.ndarray
    violations: int = 0

    def rmse(self, window: Window | None = None) -> float:
        e = self.sq_error if window is None else self.sq_error[window.slice()]
        return math.sqrt(float(e.mean()))

    def mode_rate(self, window: Window | None = None, which: str = "nu") -> float:
        h = self.nu_hit if which == "nu" else self.mu_hit
        h = h if window is None else h[window.slice()]
        return float(h.mean())


def run_metrics(run, idx, rtv, traj: Trajectory, states) -> RunMetrics:
    tr = FilterTrace.from_states(states)
    err = ((traj.states[1:] - tr.means) ** 2).sum(axis=1)
    return RunMetrics(
        run=run, radius_index=idx, rtv=rtv, sq_error=err,
        nu_hit=tr.nu_star.argmax(axis=1) == traj.modes,
        mu_hit=tr.mu.argmax(axis=1) == traj.modes,
        value=tr.value,
    )


def _one_run(spec: ExperimentSpec, run: int, keep_traces: bool):
    traj = sample_trajectory(spec.true_model, spec.horizon, make_rng(spec.seed, run))
    metrics, traces = [], {}
    for idx, r in enumerate(spec.radii):
        try:
            states = run_filter(spec.nominal_model, traj.observations, r, spec.filter)
        except FilterStepError as exc:
            raise FilterStepError(exc.step, exc.cause, run=run) from exc
        m = run_metrics(run, idx, r, traj, states)
        if spec.check_invariants:
            m.violations = sum(len(check_state(s)) for s in states)
        metrics.append(m)
        if keep_traces:
            traces[idx] = trace_records(states, traj)
    return run, traj, metrics, traces


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    metrics: list[RunMetrics]
    trajectories: dict[int, Trajectory] = field(default_factory=dict)
    traces: dict[tuple[int, int], list[dict]] = field(default_factory=dict)

    def by_radius(self, idx: int) -> list[RunMetrics]:
        return sorted((m for m in self.metrics if m.radius_index == idx), key=lambda m: m.run)

    def rmse_matrix(self, window: Window | None = None) -> np.ndarray:
        """(runs, radii) array of per-run RMSE."""
        return np.array([[m.rmse(window) for m in self.by_radius(i)]
                         for i in range(len(self.spec.radii))]).T


def run_experiment(spec: ExperimentSpec, *, keep_traces: bool = False,
                   n_jobs: int = 1) -> ExperimentResult:
    """Run the Monte Carlo batch; ``n_jobs > 1`` spreads runs over processes."""
    runs = range(spec.runs)
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outs = list(pool.map(_one_run, [spec] * spec.runs, runs,
                                 [keep_traces] * spec.runs, chunksize=8))
    else:
        outs = [_one_run(spec, i, keep_traces) for i in runs]
    outs.sort(key=lambda o: o[0])

    result = ExperimentResult(spec=spec, metrics=[])
    for run, traj, metrics, traces in outs:
        result.metrics.extend(metrics)
        if keep_traces:
            result.trajectories[run] = traj
            for idx, recs in traces.items():
                result.traces[(run, idx)] = recs
    return result


def bootstrap_mean_ci(diffs, resamples: int = 1000, level: float = 0.95, rng=None):
    """Percentile bootstrap interval for the mean of ``diffs``."""
    diffs = np.asarray(diffs, dtype=float)
    rng = make_rng(rng)
    idx = rng.integers(0, len(diffs), size=(resamples, len(diffs)))
    means = diffs[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


def compare_radii(result: ExperimentResult) -> dict:
    """Per-radius, per-window RMSE statistics and paired differences against R_TV = 0."""
    spec = result.spec
    if len(spec.radii) < 2 or 0.0 not in spec.radii:
        raise ValueError("comparison needs at least two radii including 0")
    base = spec.radii.index(0.0)
    rows = []
    for idx, r in enumerate(spec.radii):
        runs = result.by_radius(idx)
        base_runs = result.by_radius(base)
        windows = {}
        for w in spec.windows:
            rm = np.array([m.rmse(w) for m in runs])
            diff = rm - np.array([m.rmse(w) for m in base_runs])
            # same bootstrap stream for every radius and window: rows are comparable
            ci = bootstrap_mean_ci(diff, spec.bootstrap,
                                   rng=make_rng(spec.seed, BOOTSTRAP_STREAM))
            windows[w.name] = {
                "start": w.start,
                "end": w.end,
                "mean_rmse": float(rm.mean()),
                "median_rmse": float(np.median(rm)),
                "p05_rmse": float(np.quantile(rm, 0.05)),
                "p95_rmse": float(np.quantile(rm, 0.95)),
                "mean_diff_vs_0": float(diff.mean()),
                "diff_ci95": list(ci),
                "runs_better": int((diff < 0).sum()),
                "runs_worse": int((diff > 0).sum()),
                "runs_tied": int((diff == 0).sum()),
                "mode_rate_nu": float(np.mean([m.mode_rate(w, "nu") for m in runs])),
                "mode_rate_mu": float(np.mean([m.mode_rate(w, "mu") for m in runs])),
            }
        rows.append({"rtv": r, "windows": windows})
    return {
        "runs": spec.runs,
        "horizon": spec.horizon,
        "seed": spec.seed,
        "radii": list(spec.radii),
        "windows": [asdict(w) for w in spec.windows],
        "rows": rows,
    }


METRICS_COLUMNS = ("run", "rtv", "window", "start", "end", "rmse", "mode_rate_nu", "mode_rate_mu")


def _radius_tag(r: float) -> str:
    return repr(float(r))


def write_outputs(result: ExperimentResult, summary: dict, out_dir, *, traces: bool = True) -> Path:
    """Write ``metrics.csv``, ``summary.json`` and (optionally) per-run traces."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ordered = sorted(result.metrics, key=lambda m: (m.run, m.radius_index))
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_COLUMNS)
        for m in ordered:
            for win in result.spec.windows:
                w.writerow([m.run, repr(m.rtv), win.name, win.start, win.end,
                            repr(m.rmse(win)), repr(m.mode_rate(win, "nu")),
                            repr(m.mode_rate(win, "mu"))])
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if traces and result.traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for (run, idx), recs in sorted(result.traces.items()):
            name = f"run_{run}_rtv_{_radius_tag(result.spec.radii[idx])}.jsonl"
            write_trace_jsonl(recs, tdir / name)
    return out


__all__ = [
    "ExperimentResult", "ExperimentSpec", "RunMetrics", "Window", "bootstrap_mean_ci",
    "compare_radii", "default_windows", "run_experiment", "write_outputs",
]
