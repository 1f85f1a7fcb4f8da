"""JSON experiment configuration: schema checking and construction of specs.

A config file is one JSON object with the sections below. Every key is
optional unless marked required; unknown keys are rejected with their
dotted path.

    name                          string used in output file names
    network.K          required   int or list of ints (sweep)
    network.M                     int or list; defaults to (Q + R) K with a tdma section, else K
    network.P_max      required   peak transmit power
    network.sigma_N_sq            noise variance (default 0; compare derives it from snr_db_list)
    network.fading                "ideal" | "rayleigh_inverted"
    network.phase_mode            "continuous" | "discrete:L" | "orthogonal"
    network.seed                  unsigned 64-bit root seed
    sensing.s_min, sensing.s_max  required
    readings.lo, readings.hi      required
    readings.distribution         "uniform_iid"
    function.kind      required   arithmetic_mean | geometric_mean | weighted_sum | node_count | q_norm
    function.a, s_prime, q, weights, offset, c
    tdma.Q, tdma.T, tdma.R
    experiment.scheme             comac | comac_unbiased_ref | tdma
    experiment.n_trials           default 10000
    experiment.epsilon_grid       list of floats, or {"logspace": [lo, hi, n]}
    experiment.snr_db_list        list of SNR_f values in dB (compare)
    experiment.analytic_samples   reading-vector samples for the analytic curve

When K and M are both lists they are zipped; a scalar is broadcast.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .experiments import ExperimentSpec, default_epsilon_grid
from .model import (ConfigurationError, NetworkConfig, NomographicFunction, PhaseMode,
                    ReadingRange, SensingRange)
from .readings import UniformIID
from .tdma import TdmaConfig

SCHEMA: dict[str, set] = {
    "network": {"K", "M", "P_max", "sigma_N_sq", "fading", "phase_mode", "seed"},
    "sensing": {"s_min", "s_max"},
    "readings": {"lo", "hi", "distribution"},
    "function": {"kind", "a", "s_prime", "q", "weights", "offset", "c"},
    "tdma": {"Q", "T", "R"},
    "experiment": {"scheme", "n_trials", "epsilon_grid", "snr_db_list", "analytic_samples"},
}
TOP_LEVEL = {"name"} | set(SCHEMA)
REQUIRED = ("network.K", "network.P_max", "sensing.s_min", "sensing.s_max",
            "readings.lo", "readings.hi", "function.kind")


class SchemaError(ConfigurationError):
    """Config file problem, tagged with the dotted key path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def load(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError("<file>", f"invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise SchemaError("<file>", "top level must be a JSON object")
    return raw


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides, seed: Optional[int] = None) -> dict:
    """Apply ``key.path=value`` overrides (values parsed as JSON when possible)."""
    out = copy.deepcopy(raw)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise SchemaError(item, "override must look like section.key=value")
        parts = key.split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise SchemaError(key, "override path crosses a non-object value")
        node[parts[-1]] = _parse_value(value)
    if seed is not None:
        out.setdefault("network", {})["seed"] = seed
    return out


def check_schema(raw: dict) -> None:
    for key in raw:
        if key not in TOP_LEVEL:
            raise SchemaError(key, "unknown key")
    for section, allowed in SCHEMA.items():
        body = raw.get(section, {})
        if not isinstance(body, dict):
            raise SchemaError(section, "must be an object")
        for key in body:
            if key not in allowed:
                raise SchemaError(f"{section}.{key}", "unknown key")
    for path in REQUIRED:
        section, key = path.split(".")
        if key not in raw.get(section, {}):
            raise SchemaError(path, "required key missing")


def _get(raw: dict, path: str, default=None):
    section, key = path.split(".")
    return raw.get(section, {}).get(key, default)


def _number(raw: dict, path: str, default=None, integer: bool = False):
    v = _get(raw, path, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(path, f"expected a number, got {v!r}")
    if integer:
        if int(v) != v:
            raise SchemaError(path, f"expected an integer, got {v!r}")
        return int(v)
    if not math.isfinite(v):
        raise SchemaError(path, f"expected a finite number, got {v!r}")
    return float(v)


def _int_list(raw: dict, path: str, default=None) -> Optional[list]:
    v = _get(raw, path, default)
    if v is None:
        return None
    items = v if isinstance(v, list) else [v]
    if not items:
        raise SchemaError(path, "must not be empty")
    for i in items:
        if isinstance(i, bool) or not isinstance(i, (int, float)) or int(i) != i:
            raise SchemaError(path, f"expected integers, got {i!r}")
    return [int(i) for i in items]


def _epsilon_grid(raw: dict) -> tuple:
    v = _get(raw, "experiment.epsilon_grid")
    path = "experiment.epsilon_grid"
    if v is None:
        return default_epsilon_grid()
    if isinstance(v, dict):
        if set(v) != {"logspace"} or not isinstance(v["logspace"], list) or len(v["logspace"]) != 3:
            raise SchemaError(path, 'object form must be {"logspace": [lo, hi, n]}')
        lo, hi, n = v["logspace"]
        if not (0 < lo < hi) or int(n) != n or n < 1:
            raise SchemaError(path, "logspace needs 0 < lo < hi and integer n >= 1")
        return default_epsilon_grid(int(n), lo, hi)
    if not isinstance(v, list):
        raise SchemaError(path, "must be a list or a logspace object")
    if not v:
        raise SchemaError(path, "must not be empty")
    if any(isinstance(e, bool) or not isinstance(e, (int, float)) for e in v):
        raise SchemaError(path, "entries must be numbers")
    grid = tuple(float(e) for e in v)
    if any(e <= 0 for e in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise SchemaError(path, "must be positive and strictly increasing")
    return grid


@dataclass(frozen=True)
class RunConfig:
    """A parsed config: one ExperimentSpec per (K, M) sweep point plus comparison settings."""

    name: str
    specs: tuple
    snr_db_list: Optional[tuple]
    raw: dict

    @property
    def tdma(self) -> Optional[TdmaConfig]:
        return self.specs[0].tdma


def _section(path: str, exc: ConfigurationError) -> SchemaError:
    return exc if isinstance(exc, SchemaError) else SchemaError(path, str(exc))


def build(raw: dict, default_name: str = "run") -> RunConfig:
    """Validate ``raw`` against the schema and construct the experiment specs."""
    check_schema(raw)
    name = raw.get("name", default_name)
    if not isinstance(name, str) or not name or any(c in name for c in "/\\"):
        raise SchemaError("name", f"must be a plain non-empty string, got {name!r}")

    try:
        sensing = SensingRange(_number(raw, "sensing.s_min"), _number(raw, "sensing.s_max"))
    except ConfigurationError as exc:
        raise _section("sensing", exc) from exc
    try:
        rrange = ReadingRange(_number(raw, "readings.lo"), _number(raw, "readings.hi"))
        rrange.check_within(sensing)
        dist_name = _get(raw, "readings.distribution", "uniform_iid")
        if dist_name != "uniform_iid":
            raise SchemaError("readings.distribution", f"only 'uniform_iid' is supported, got {dist_name!r}")
        dist = UniformIID(rrange.x_min, rrange.x_max)
    except ConfigurationError as exc:
        raise _section("readings", exc) from exc

    tdma = None
    if "tdma" in raw:
        try:
            tdma = TdmaConfig(Q=_number(raw, "tdma.Q", 10, integer=True),
                              T=_number(raw, "tdma.T", 1.0),
                              R=_number(raw, "tdma.R", 0, integer=True))
        except ConfigurationError as exc:
            raise _section("tdma", exc) from exc

    Ks = _int_list(raw, "network.K")
    Ms = _int_list(raw, "network.M")
    if Ms is None:
        Ms = [tdma.fair_M(k) for k in Ks] if tdma is not None else list(Ks)
    if len(Ks) > 1 and len(Ms) > 1 and len(Ks) != len(Ms):
        raise SchemaError("network.M", f"sweep lengths differ (K has {len(Ks)}, M has {len(Ms)})")
    n = max(len(Ks), len(Ms))
    pairs = list(zip(Ks * n if len(Ks) == 1 else Ks, Ms * n if len(Ms) == 1 else Ms))

    fading = _get(raw, "network.fading", "ideal")
    phase = _get(raw, "network.phase_mode", "continuous")
    seed = _number(raw, "network.seed", 0, integer=True)
    P_max = _number(raw, "network.P_max")
    sigma = _number(raw, "network.sigma_N_sq", 0.0)
    try:
        phase_mode = PhaseMode.parse(phase) if isinstance(phase, str) else None
        if phase_mode is None:
            raise ConfigurationError(f"phase_mode must be a string, got {phase!r}")
    except (ConfigurationError, ValueError) as exc:
        raise SchemaError("network.phase_mode", str(exc)) from exc
    if fading not in ("ideal", "rayleigh_inverted"):
        raise SchemaError("network.fading", f"must be 'ideal' or 'rayleigh_inverted', got {fading!r}")

    scheme = _get(raw, "experiment.scheme", "comac")
    n_trials = _number(raw, "experiment.n_trials", 10_000, integer=True)
    if n_trials < 1:
        raise SchemaError("experiment.n_trials", "must be >= 1")
    analytic_samples = _number(raw, "experiment.analytic_samples", 100_000, integer=True)
    if analytic_samples < 1:
        raise SchemaError("experiment.analytic_samples", "must be >= 1")
    grid = _epsilon_grid(raw)
    snr = _get(raw, "experiment.snr_db_list")
    if snr is not None:
        if not isinstance(snr, list) or not snr or any(
                isinstance(s, bool) or not isinstance(s, (int, float)) for s in snr):
            raise SchemaError("experiment.snr_db_list", "must be a non-empty list of numbers")
        snr = tuple(float(s) for s in snr)
        if tdma is None:
            raise SchemaError("tdma.Q", "snr_db_list needs a tdma section")

    specs = []
    for K, M in pairs:
        try:
            net = NetworkConfig(K, M, P_max, sigma, sensing, rrange, fading, phase_mode, seed)
        except ConfigurationError as exc:
            raise _section("network", exc) from exc
        fn = _function(raw, K, sensing, P_max, rrange)
        spec = ExperimentSpec(net, fn, dist, scheme, grid, n_trials, tdma,
                              analytic_samples=analytic_samples)
        try:
            if scheme not in ("comac", "comac_unbiased_ref", "tdma"):
                raise SchemaError("experiment.scheme", f"unknown scheme {scheme!r}")
            if snr is None:
                spec.validate()
        except ConfigurationError as exc:
            raise _section("experiment", exc) from exc
        specs.append(spec)
    return RunConfig(name, tuple(specs), snr, raw)


def _function(raw: dict, K: int, sensing: SensingRange, P_max: float,
              rrange: ReadingRange) -> NomographicFunction:
    kind = _get(raw, "function.kind")
    try:
        if kind == "arithmetic_mean":
            return NomographicFunction.arithmetic_mean(K, sensing, P_max)
        if kind == "geometric_mean":
            return NomographicFunction.geometric_mean(
                K, sensing, P_max, rrange, _number(raw, "function.a", 2.0),
                _number(raw, "function.s_prime"))
        if kind == "weighted_sum":
            w = _get(raw, "function.weights")
            if not isinstance(w, list) or len(w) != K:
                raise SchemaError("function.weights", f"needs a list of K={K} numbers")
            return NomographicFunction.weighted_sum(w, sensing, P_max, _number(raw, "function.offset", 0.0))
        if kind == "node_count":
            return NomographicFunction.node_count(K, sensing, P_max, _number(raw, "function.c", 1.0))
        if kind == "q_norm":
            q = _number(raw, "function.q")
            if q is None:
                raise SchemaError("function.q", "required for q_norm")
            return NomographicFunction.q_norm(K, sensing, P_max, rrange, q)
    except ConfigurationError as exc:
        raise _section("function", exc) from exc
    raise SchemaError("function.kind", f"unknown function kind {kind!r}")


def load_run_config(path, overrides=(), seed: Optional[int] = None) -> RunConfig:
    raw = apply_overrides(load(path), overrides, seed)
    return build(raw, default_name=Path(path).stem)
