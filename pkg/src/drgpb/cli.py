"""Command-line front end.

Exit status: 0 on success, 2 for a bad configuration or invalid model,
3 for a numerical failure, 4 for an I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .crosscheck import run_crosscheck
from .errors import ConfigError, ModelError, NumericalError
from .experiment import ExperimentSpec, compare_radii, run_experiment, write_outputs
from .filter import run_filter
from .io import (bundled_config_path, config_from_dict, load_config, load_trajectory,
                 model_from_dict, read_json, save_trajectory, trace_records,
                 write_trace_csv, write_trace_jsonl)
from .model import make_rng, sample_trajectory, validate_model

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _config_path(name: str) -> Path:
    p = Path(name)
    if not p.exists() and p.name == bundled_config_path().name:
        return bundled_config_path()
    return p


def _radii(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad radius list {text!r}") from None


def cmd_validate(args) -> int:
    raw = read_json(_config_path(args.config))
    if not isinstance(raw, dict) or "model" not in raw:
        raise ConfigError("configuration has no 'model'")
    base = model_from_dict(raw["model"])
    problems = [f"model: {v}" for v in validate_model(base).violations]
    for key in ("true_schedule", "nominal_schedule"):
        for seg in raw.get(key) or []:
            overrides = {k: v for k, v in seg.items() if k != "start"}
            try:
                m = base.replace(**overrides)
            except (ValueError, TypeError) as exc:
                problems.append(f"{key} @ {seg.get('start')}: {exc}")
                continue
            problems += [f"{key} @ {seg.get('start')}: {v}" for v in validate_model(m).violations]
    if problems:
        for p in problems:
            print(f"violation: {p}")
        return EXIT_CONFIG
    config_from_dict(raw)  # schema, schedule ordering, filter options
    print("ok")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(_config_path(args.config))
    sched = cfg.true_schedule if args.schedule == "true" else cfg.nominal_schedule
    horizon = args.horizon or int(cfg.experiment.get("horizon", 100))
    seed = args.seed if args.seed is not None else int(cfg.experiment.get("seed", 0))
    traj = sample_trajectory(sched, horizon, make_rng(seed, args.run))
    save_trajectory(traj, args.out)
    print(f"wrote {args.out} ({horizon} steps)")
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg = load_config(_config_path(args.config))
    traj = load_trajectory(args.trajectory)
    states = run_filter(cfg.nominal_schedule, traj.observations, args.rtv, cfg.filter)
    truth = traj if len(traj.states) == len(traj.observations) + 1 else None
    recs = trace_records(states, truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(recs, out / "trace.csv")
    write_trace_jsonl(recs, out / "trace.jsonl")
    print(f"wrote {out / 'trace.csv'} and {out / 'trace.jsonl'}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = load_config(_config_path(args.config))
    try:
        spec = ExperimentSpec.from_config(cfg, runs=args.runs, seed=args.seed,
                                          horizon=args.horizon,
                                          radii=tuple(args.rtv) if args.rtv else None)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if len(spec.radii) < 2 or 0.0 not in spec.radii:
        raise ConfigError("the radius grid needs at least two values including 0")
    result = run_experiment(spec, keep_traces=not args.no_traces, n_jobs=args.jobs)
    summary = compare_radii(result)
    out = write_outputs(result, summary, args.out, traces=not args.no_traces)
    print(f"{'rtv':>6} " + " ".join(f"{w.name + ' rmse':>12}" for w in spec.windows))
    for row in summary["rows"]:
        print(f"{row['rtv']:>6g} " + " ".join(
            f"{row['windows'][w.name]['mean_rmse']:>12.4f}" for w in spec.windows))
    print(f"wrote {out / 'metrics.csv'} and {out / 'summary.json'}")
    return EXIT_OK


def cmd_crosscheck(args) -> int:
    rep = run_crosscheck(args.instances, args.seed)
    for line in rep.lines():
        print(line)
    ok = rep.passed(args.tol)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drgpb", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a model configuration")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("simulate", help="sample a trajectory to a JSON file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--run", type=int, default=0, help="stream index under the seed")
    s.add_argument("--horizon", type=int)
    s.add_argument("--schedule", choices=("true", "nominal"), default="true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("filter", help="run the filter over a trajectory file")
    s.add_argument("--config", required=True)
    s.add_argument("--trajectory", required=True)
    s.add_argument("--rtv", type=float, default=0.0)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("experiment", help="Monte Carlo comparison of radii")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="results")
    s.add_argument("--runs", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--horizon", type=int)
    s.add_argument("--rtv", type=_radii, help="comma-separated radii, e.g. 0,0.1,0.3")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--no-traces", action="store_true")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("crosscheck", help="water-filling vs the oracles and the equivalent form")
    s.add_argument("--instances", type=int, default=1000)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_crosscheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
