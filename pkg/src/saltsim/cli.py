"""Command-line front end: simulate, sweep, sensitivity, check.

Scenarios are YAML documents (grammar documented in the README).  All CSV
output is locale-independent with 17 significant digits and "\n" newlines;
re-running a command with the same scenario produces byte-identical files.
Exit codes: 0 success, 1 configuration errors, 2 admissibility errors
(grazing, Zeno, penetration, terminal-at-event), with the event diagnostic
on stderr.
"""

from __future__ import annotations

import argparse
import csv
import importlib
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import ScenarioError, SimError
from .flow import simulate
from .model import ModelSpec, SolverConfig, State
from .sensitivity import (
    finite_difference_derivative,
    trajectory_derivative,
    word_independence_check,
)
from .validate import report_dict, validate_model
from .zoo import zoo_entry, zoo_model

_ADMISSIBILITY_EXIT = 2
_CONFIG_EXIT = 1


@dataclass(frozen=True)
class Sweep:
    coordinate: int  # index into the stacked (q, v) vector
    start: float
    stop: float
    count: int


@dataclass(frozen=True)
class Scenario:
    name: str
    model: ModelSpec
    model_ref: str
    initial: State
    horizon: float
    config: SolverConfig
    sample_dt: Optional[float] = None
    sweep: Optional[Sweep] = None
    fd_step: float = 1e-5
    outputs: Optional[dict] = None


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _build_model(ref: str, params: dict) -> ModelSpec:
    if ":" in ref:
        mod_name, _, attr = ref.partition(":")
        try:
            factory = getattr(importlib.import_module(mod_name), attr)
        except (ImportError, AttributeError) as exc:
            raise ScenarioError(f"cannot import model factory {ref!r}: {exc}") from exc
        model = factory(**params)
        if not isinstance(model, ModelSpec):
            raise ScenarioError(f"model factory {ref!r} did not return a ModelSpec")
        return model
    try:
        return zoo_model(ref, **params)
    except KeyError as exc:
        raise ScenarioError(str(exc)) from exc
    except TypeError as exc:
        raise ScenarioError(f"bad model_params for {ref!r}: {exc}") from exc


def load_scenario(path: str | Path, tol_overrides: Optional[dict] = None) -> Scenario:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"scenario {path} must be a mapping")

    known = {"name", "model", "model_params", "initial", "horizon", "sample_dt",
             "config", "sweep", "sensitivity", "outputs"}
    unknown = set(raw) - known
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
    if "model" not in raw:
        raise ScenarioError("scenario requires a 'model' entry")

    model_ref = str(raw["model"])
    model = _build_model(model_ref, raw.get("model_params") or {})

    entry = None
    if ":" not in model_ref:
        entry = zoo_entry(model_ref)

    if "initial" in raw:
        ini = raw["initial"]
        try:
            initial = State(float(ini.get("t", 0.0)), ini["q"], ini["v"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"bad initial state: {exc}") from exc
    elif entry is not None:
        initial = entry.initial
    else:
        raise ScenarioError("external models require an explicit initial state")
    if initial.q.size != model.d:
        raise ScenarioError(
            f"initial state has dimension {initial.q.size}, model expects {model.d}"
        )

    horizon = float(raw.get("horizon", entry.horizon if entry else 0.0))
    if horizon <= 0.0:
        raise ScenarioError("horizon must be positive")

    cfg_kwargs = dict(raw.get("config") or {})
    cfg_kwargs.update(tol_overrides or {})
    valid = {f.name for f in fields(SolverConfig)}
    bad = set(cfg_kwargs) - valid
    if bad:
        raise ScenarioError(f"unknown config keys: {sorted(bad)}")
    try:
        config = SolverConfig(**cfg_kwargs)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    sweep = None
    if raw.get("sweep") is not None:
        sw = raw["sweep"]
        try:
            sweep = Sweep(int(sw["coordinate"]), float(sw["start"]),
                          float(sw["stop"]), int(sw["count"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"bad sweep section: {exc}") from exc
        if sweep.count < 2:
            raise ScenarioError("sweep count must be at least 2")
        if not 0 <= sweep.coordinate < 2 * model.d:
            raise ScenarioError(
                f"sweep coordinate {sweep.coordinate} out of range 0..{2 * model.d - 1}"
            )

    fd_step = float((raw.get("sensitivity") or {}).get("fd_step", 1e-5))
    sample_dt = raw.get("sample_dt")
    return Scenario(
        name=str(raw.get("name", path.stem)),
        model=model,
        model_ref=model_ref,
        initial=initial,
        horizon=horizon,
        config=config,
        sample_dt=None if sample_dt is None else float(sample_dt),
        sweep=sweep,
        fd_step=fd_step,
        outputs=raw.get("outputs") or {},
    )


def _out_path(scenario: Scenario, out_dir: Path, key: str, default_suffix: str) -> Path:
    custom = scenario.outputs.get(key)
    if custom:
        return Path(custom)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / f"{scenario.name}_{default_suffix}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _state_dict(state: State) -> dict:
    out = {"t": state.t, "q": state.q.tolist(), "v": state.v.tolist()}
    if state.mode is not None:
        out["mode"] = state.mode.mask
    return out


def _event_dict(event) -> dict:
    return {
        "t": event.t,
        "kind": event.kind,
        "constraints": list(event.constraints.indices()),
        "admissible": event.admissible,
        "reason": event.reason,
        "pre": _state_dict(event.pre),
        "post": _state_dict(event.post),
    }


def _word_dict(word) -> dict:
    return {
        "modes": [m.mask for m in word.modes],
        "times": list(word.times),
        "events": [_event_dict(e) for e in word.events],
    }


def cmd_simulate(scenario: Scenario, out_dir: Path) -> int:
    traj = simulate(scenario.model, scenario.initial, scenario.horizon,
                    scenario.config, scenario.sample_dt)
    d = scenario.model.d
    header = (["t"] + [f"q_{i + 1}" for i in range(d)]
              + [f"v_{i + 1}" for i in range(d)] + ["mode_bitmask"])
    rows = (
        [_fmt(s.t)] + [_fmt(x) for x in s.q] + [_fmt(x) for x in s.v] + [s.mode.mask]
        for s in traj.samples
    )
    _write_csv(_out_path(scenario, out_dir, "samples", "samples.csv"), header, rows)
    _write_json(
        _out_path(scenario, out_dir, "word", "word.json"),
        {
            "model": scenario.model_ref,
            "horizon": scenario.horizon,
            "terminal": _state_dict(traj.terminal),
            "word": _word_dict(traj.word),
        },
    )
    return 0


def cmd_sweep(scenario: Scenario, out_dir: Path) -> int:
    if scenario.sweep is None:
        raise ScenarioError("sweep command requires a sweep section in the scenario")
    sw = scenario.sweep
    d = scenario.model.d
    values = np.linspace(sw.start, sw.stop, sw.count)
    word_ids: dict = {}
    words_legend = []
    rows = []
    for value in values:
        z = scenario.initial.z.copy()
        z[sw.coordinate] = value
        initial = State(scenario.initial.t, z[:d], z[d:])
        traj = simulate(scenario.model, initial, scenario.horizon, scenario.config,
                        sample_dt=scenario.horizon)
        key = traj.word.key()
        if key not in word_ids:
            word_ids[key] = len(word_ids)
            words_legend.append({
                "id": word_ids[key],
                "modes": [m.mask for m in traj.word.modes],
                "events": [
                    {"kind": e.kind, "constraints": list(e.constraints.indices())}
                    for e in traj.word.events
                ],
            })
        term = traj.terminal
        rows.append([_fmt(value)] + [_fmt(x) for x in term.q]
                    + [_fmt(x) for x in term.v] + [word_ids[key]])
    header = (["sweep_value"] + [f"q_{i + 1}" for i in range(d)]
              + [f"v_{i + 1}" for i in range(d)] + ["word_id"])
    _write_csv(_out_path(scenario, out_dir, "sweep", "sweep.csv"), header, rows)
    _write_json(
        _out_path(scenario, out_dir, "sweep_words", "sweep_words.json"),
        {
            "model": scenario.model_ref,
            "horizon": scenario.horizon,
            "sweep": {"coordinate": sw.coordinate, "start": sw.start,
                      "stop": sw.stop, "count": sw.count},
            "words": words_legend,
        },
    )
    return 0


def cmd_sensitivity(scenario: Scenario, out_dir: Path) -> int:
    model, config = scenario.model, scenario.config
    traj = simulate(model, scenario.initial, scenario.horizon, config,
                    sample_dt=scenario.horizon)
    sens = trajectory_derivative(model, traj, config)
    fd = finite_difference_derivative(model, scenario.initial, scenario.horizon,
                                      config, step=scenario.fd_step)
    wic = word_independence_check(model, scenario.initial, scenario.horizon, config)
    diff = np.abs(sens.D_phi - fd.matrix)
    scale = max(float(np.max(np.abs(fd.matrix))), 1e-300)
    report = {
        "model": scenario.model_ref,
        "horizon": scenario.horizon,
        "D_phi": sens.D_phi.tolist(),
        "per_event": [
            {
                "t": sm.event.t,
                "kind": sm.event.kind,
                "constraints": list(sm.event.constraints.indices()),
                "Xi": sm.Xi.tolist(),
                "denominators": list(sm.denominators),
                "form_gap": sm.form_gap,
            }
            for sm in sens.per_event
        ],
        "finite_difference": {
            "step": fd.step,
            "matrix": fd.matrix.tolist(),
            "max_abs_error": float(np.max(diff)),
            "max_rel_error": float(np.max(diff)) / scale,
            "words": [list(map(list, w)) for w in fd.words],
        },
        "word_independence": {
            "passed": wic.passed,
            "max_diff": wic.max_diff if np.isfinite(wic.max_diff) else None,
            "n_orderings": wic.n_orderings,
            "n_simultaneous_events": wic.n_simultaneous_events,
        },
        "word": _word_dict(traj.word),
    }
    _write_json(_out_path(scenario, out_dir, "report", "sensitivity.json"), report)
    return 0


def cmd_check(model: ModelSpec, around: Optional[State], name: str, out_dir: Path) -> int:
    report = validate_model(model, around=around)
    payload = report_dict(report)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / f"{name}_check.json", payload)
    print(json.dumps(payload, indent=2))
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="saltsim",
        description="Event-driven simulation and sensitivities for unilaterally "
                    "constrained mechanical systems",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", required=True, help="scenario YAML file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="reserved; all computation is deterministic")
        for tol in ("tol-a", "tol-event", "tol-cluster", "tol-graze"):
            sp.add_argument(f"--{tol}", type=float, default=None,
                            help=f"override SolverConfig.{tol.replace('-', '_')}")

    for name in ("simulate", "sweep", "sensitivity"):
        common(sub.add_parser(name))
    chk = sub.add_parser("check")
    chk.add_argument("--model", help="zoo model name or module:factory reference")
    chk.add_argument("--scenario", help="take the model from a scenario file")
    chk.add_argument("--out", default=".", help="output directory")
    chk.add_argument("--seed", type=int, default=None, help="reserved")
    return p


def _tol_overrides(args) -> dict:
    out = {}
    for tol in ("tol_a", "tol_event", "tol_cluster", "tol_graze"):
        val = getattr(args, tol, None)
        if val is not None:
            out[tol] = val
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "check":
            if bool(args.model) == bool(args.scenario):
                raise ScenarioError("check needs exactly one of --model or --scenario")
            if args.scenario:
                scenario = load_scenario(args.scenario)
                model, around, name = scenario.model, scenario.initial, scenario.name
            else:
                model = _build_model(args.model, {})
                around, name = None, args.model.replace(":", "_").replace("/", "_")
                if ":" not in args.model:
                    around = zoo_entry(args.model).initial
            return cmd_check(model, around, name, Path(args.out))
        scenario = load_scenario(args.scenario, _tol_overrides(args))
        out_dir = Path(args.out)
        if args.command == "simulate":
            return cmd_simulate(scenario, out_dir)
        if args.command == "sweep":
            return cmd_sweep(scenario, out_dir)
        return cmd_sensitivity(scenario, out_dir)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _CONFIG_EXIT
    except SimError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        event = getattr(exc, "event", None)
        if event is not None:
            print(json.dumps(_event_dict(event), indent=2), file=sys.stderr)
        return _ADMISSIBILITY_EXIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _CONFIG_EXIT


if __name__ == "__main__":
    sys.exit(main())
