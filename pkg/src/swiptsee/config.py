"""Experiment configuration files.

Configs are JSON objects.  Every physical quantity is in SI units (watts);
noise powers may instead be given in dBm through the ``noise_bob_dbm`` /
``noise_eve_dbm`` keys, but not both forms for the same receiver.  See the
README for the full schema.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

from .channel import ChannelSampler, dbm_to_watts, sample
from .errors import ConfigError
from .model import ChannelRealization, SystemConfig
from .montecarlo import DEFAULT_TRIALS
from .optimizer import SolverOptions
from .outage import OutageScenario

KINDS = ("optimize", "outage", "mc", "sweep")

_NUM = (int, float)
_VEC = (int, float, list)  # scalar or (nested) list of numbers
_ANY_LIST = (tuple,)  # marker: a list checked elsewhere

SYSTEM_KEYS = {
    "n_ports": int, "n_users": int, "n_eves": int,
    "circuit_power": _NUM, "max_port_power": _VEC,
    "ps_bob": _VEC, "ps_eve": _NUM, "conv_eff_bob": _VEC, "conv_eff_eve": _NUM,
    "min_harvest_bob": _VEC, "eve_harvest_cap": (int, float, type(None)),
    "noise_bob": _NUM, "noise_bob_dbm": _NUM, "noise_eve": _NUM, "noise_eve_dbm": _NUM,
}
SYSTEM_REQUIRED = ("n_ports", "circuit_power", "max_port_power")

SCENARIO_KEYS = {
    "n_ports": int, "port_power": _NUM, "circuit_power": _NUM,
    "ps_bob": _NUM, "ps_eve": _NUM, "threshold": _NUM, "n_eves": int,
    "noise_bob": _NUM, "noise_bob_dbm": _NUM, "noise_eve": _NUM, "noise_eve_dbm": _NUM,
}
SCENARIO_REQUIRED = ("n_ports", "port_power", "circuit_power", "ps_bob", "ps_eve", "threshold")

CHANNEL_KEYS = {"seed": int, "draw_index": int, "large_scale_bob": _VEC, "large_scale_eve": _VEC}
SWEEP_KEYS = {"target": str, "axes": _ANY_LIST, "mc": bool}
SOLVER_KEYS = {f.name: (int if f.type in ("int", int) else _NUM) for f in fields(SolverOptions)}
TOP_KEYS = {
    "kind": str, "system": dict, "channel": dict, "scenario": dict, "sweep": dict,
    "seed": int, "trials": int, "output_path": str, "workers": int, "solver": dict,
}

OUTAGE_AXES = {
    "n_ports": int, "port_power": _NUM, "circuit_power": _NUM, "ps_bob": _NUM, "ps_eve": _NUM,
    "threshold": _NUM, "n_eves": int, "noise_bob": _NUM, "noise_eve": _NUM, "ps": list,
}
OPTIMIZE_AXES = {
    "n_ports": int, "n_users": int, "n_eves": int, "circuit_power": _NUM, "max_port_power": _NUM,
    "ps_bob": _NUM, "ps_eve": _NUM, "conv_eff_bob": _NUM, "conv_eff_eve": _NUM,
    "min_harvest_bob": _NUM, "eve_harvest_cap": (int, float, type(None)), "ps": list, "draw_index": int,
}


def _typecheck(value, types, where: str):
    if types is _ANY_LIST:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {type(value).__name__}")
        return
    ok = isinstance(value, types) and not (isinstance(value, bool) and bool not in _as_tuple(types))
    if isinstance(value, list) and ok:
        ok = all(isinstance(v, _NUM) and not isinstance(v, bool) for v in _flatten(value))
    if not ok:
        raise ConfigError(f"{where}: wrong type {type(value).__name__} for value {value!r}")


def _as_tuple(t):
    return t if isinstance(t, tuple) else (t,)


def _flatten(v):
    for x in v:
        if isinstance(x, list):
            yield from _flatten(x)
        else:
            yield x


def _check_section(section: dict, allowed: dict, where: str, required=()) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    missing = [k for k in required if k not in section]
    if missing:
        raise ConfigError(f"{where}: missing required keys {missing}")
    for k, v in section.items():
        _typecheck(v, allowed[k], f"{where}.{k}")


def _resolve_noise(section: dict, where: str) -> dict:
    out = dict(section)
    for who in ("bob", "eve"):
        w, d = f"noise_{who}", f"noise_{who}_dbm"
        if w in out and d in out:
            raise ConfigError(f"{where}: unit conflict, both {w} and {d} given")
        if d in out:
            out[w] = dbm_to_watts(out.pop(d))
    return out


@dataclass(frozen=True)
class ChannelSpec:
    seed: int = 0
    draw_index: int = 0
    large_scale_bob: Any = None
    large_scale_eve: Any = None

    def realize(self, cfg: SystemConfig, draw_index: Optional[int] = None) -> ChannelRealization:
        sampler = ChannelSampler(self.seed, self.large_scale_bob, self.large_scale_eve)
        return sample(sampler, cfg, self.draw_index if draw_index is None else draw_index)


@dataclass(frozen=True)
class SweepSpec:
    target: str
    axes: tuple  # ((name, (values...)), ...)
    mc: bool = True

    @property
    def names(self) -> list:
        return [n for n, _ in self.axes]


@dataclass(frozen=True)
class ExperimentConfig:
    kind: Optional[str]
    system: Optional[dict] = None
    scenario: Optional[dict] = None
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    sweep: Optional[SweepSpec] = None
    seed: int = 0
    trials: int = DEFAULT_TRIALS
    output_path: Optional[str] = None
    workers: int = 1
    solver: SolverOptions = field(default_factory=SolverOptions)

    def system_config(self, **overrides) -> SystemConfig:
        params = dict(self.system)
        if "ps" in overrides:
            params["ps_bob"], params["ps_eve"] = overrides.pop("ps")
        params.update(overrides)
        return SystemConfig(**params)

    def outage_scenario(self, **overrides) -> OutageScenario:
        params = dict(self.scenario)
        if "ps" in overrides:
            params["ps_bob"], params["ps_eve"] = overrides.pop("ps")
        params.update(overrides)
        return OutageScenario(**params)

    def with_overrides(self, seed=None, trials=None, output_path=None, workers=None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
            if self.channel.seed == self.seed:
                changes["channel"] = ChannelSpec(seed, self.channel.draw_index,
                                                 self.channel.large_scale_bob, self.channel.large_scale_eve)
        if trials is not None:
            changes["trials"] = trials
        if output_path is not None:
            changes["output_path"] = output_path
        if workers is not None:
            changes["workers"] = workers
        fields_ = {f.name: getattr(self, f.name) for f in fields(self)}
        fields_.update(changes)
        return ExperimentConfig(**fields_)


def _parse_sweep(raw: dict, has_system: bool, has_scenario: bool) -> SweepSpec:
    _check_section(raw, SWEEP_KEYS, "sweep", required=("axes",))
    target = raw.get("target", "outage" if has_scenario else "optimize")
    if target not in ("outage", "optimize"):
        raise ConfigError(f"sweep.target must be 'outage' or 'optimize', got {target!r}")
    if target == "outage" and not has_scenario:
        raise ConfigError("sweep.target 'outage' needs a 'scenario' section")
    if target == "optimize" and not has_system:
        raise ConfigError("sweep.target 'optimize' needs a 'system' section")
    allowed = OUTAGE_AXES if target == "outage" else OPTIMIZE_AXES
    axes = []
    for j, ax in enumerate(raw["axes"]):
        where = f"sweep.axes[{j}]"
        if not isinstance(ax, dict) or set(ax) != {"name", "values"}:
            raise ConfigError(f"{where}: each axis needs exactly 'name' and 'values'")
        name, values = ax["name"], ax["values"]
        if name not in allowed:
            raise ConfigError(f"{where}: unrecognised axis {name!r} for target {target!r}; "
                              f"allowed: {sorted(allowed)}")
        if not isinstance(values, list):
            raise ConfigError(f"{where}: values must be a list")
        for v in values:
            _typecheck(v, allowed[name], f"{where}.values")
            if name == "ps" and len(v) != 2:
                raise ConfigError(f"{where}: 'ps' values must be [ps_bob, ps_eve] pairs")
        axes.append((name, tuple(tuple(v) if isinstance(v, list) else v for v in values)))
    return SweepSpec(target, tuple(axes), raw.get("mc", True))


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_section(raw, TOP_KEYS, "config")
    kind = raw.get("kind")
    if kind is not None and kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    seed = raw.get("seed", 0)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")

    system = scenario = None
    if "system" in raw:
        _check_section(raw["system"], SYSTEM_KEYS, "system", SYSTEM_REQUIRED)
        system = _resolve_noise(raw["system"], "system")
        if system.get("eve_harvest_cap", 0) is None:
            system["eve_harvest_cap"] = math.inf
        try:
            SystemConfig(**system)
        except ValueError as exc:
            raise ConfigError(f"system: {exc}") from exc
    if "scenario" in raw:
        _check_section(raw["scenario"], SCENARIO_KEYS, "scenario", SCENARIO_REQUIRED)
        scenario = _resolve_noise(raw["scenario"], "scenario")
        try:
            OutageScenario(**scenario)
        except ValueError as exc:
            raise ConfigError(f"scenario: {exc}") from exc

    ch = raw.get("channel", {})
    _check_section(ch, CHANNEL_KEYS, "channel")
    channel = ChannelSpec(ch.get("seed", seed), ch.get("draw_index", 0),
                          ch.get("large_scale_bob"), ch.get("large_scale_eve"))
    sweep = _parse_sweep(raw["sweep"], system is not None, scenario is not None) if "sweep" in raw else None

    solver_raw = raw.get("solver", {})
    _check_section(solver_raw, SOLVER_KEYS, "solver")
    try:
        solver = SolverOptions(**solver_raw)
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc

    trials = raw.get("trials", DEFAULT_TRIALS)
    workers = raw.get("workers", 1)
    if trials < 1 or workers < 1:
        raise ConfigError("trials and workers must be >= 1")
    return ExperimentConfig(kind, system, scenario, channel, sweep, seed, trials,
                            raw.get("output_path"), workers, solver)


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment config."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(raw)
