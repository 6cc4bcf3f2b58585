"""JSON run configurations: parsing, validation and serialization.

A config has three required sections and two optional ones:

    problem    group, metric, lagrangian, manifold, initial, targets, sigma, h, N, ...
    optimizer  OptimizerConfig fields (all optional)
    outputs    dir plus emit flags
    sweep      {"sigmas": [...]}               (optional)
    convergence {"h_list": [...], "T": ..., "mu0_0": [...], "mu1_0": [...]}  (optional)

Unknown keys are rejected at every level. Complex point coordinates are
written as [re, im] pairs.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import groups, manifolds
from .errors import ConfigError, HPSplinesError
from .lagrangians import CubicReduced, SquaredVelocity
from .manifolds import TargetSchedule
from .optimize import OptimizerConfig
from .problem import ProblemSpec

_PROBLEM_KEYS = {"group", "metric", "lagrangian", "manifold", "initial", "targets", "sigma",
                 "h", "N", "xi0_initial", "action_side", "reduction_side", "radius"}
_PROBLEM_REQUIRED = {"group", "manifold", "initial", "targets", "sigma", "h", "N"}
_OUTPUT_FLAGS = ("path_csv", "momentum_csv", "summary_json", "convergence_csv")
_OPTIMIZER_KEYS = {f.name for f in dataclasses.fields(OptimizerConfig)}


@dataclass
class Outputs:
    dir: str = "out"
    path_csv: bool = True
    momentum_csv: bool = True
    summary_json: bool = True
    convergence_csv: bool = True


@dataclass
class ConvergenceSettings:
    h_list: tuple = (0.1, 0.05, 0.025, 0.0125)
    T: float | None = None
    mu0_0: tuple | None = None
    mu1_0: tuple | None = None


@dataclass
class RunConfig:
    problem: ProblemSpec
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    outputs: Outputs = field(default_factory=Outputs)
    sweep_sigmas: tuple | None = None
    convergence: ConvergenceSettings | None = None


def _reject_unknown(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigError(f"unknown keys in {where}: {', '.join(extra)}")


def _vector(value, n, what):
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a list of numbers") from None
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise ConfigError(f"{what} must be {n} finite numbers")
    return v


def _point(manifold, coords, what):
    try:
        raw = manifold.to_ambient(coords)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{what} must be numeric") from None
    if not np.all(np.isfinite(raw)):
        raise ConfigError(f"{what} has non-finite entries")
    if manifold.residual(raw) > 1e-8:
        raise ConfigError(f"{what} does not lie on {manifold.name}")
    return manifold.normalize(raw)


def _metric(spec, group):
    if spec is None or spec == "identity":
        return groups.MetricOperator.identity(group.dim)
    if spec == "trace":
        return groups.trace_metric(group)
    try:
        gamma = np.asarray(spec, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("metric must be 'identity', 'trace' or a matrix") from None
    if gamma.shape != (group.dim, group.dim):
        raise ConfigError(f"metric must be {group.dim}x{group.dim}")
    return groups.MetricOperator(gamma)


def _lagrangian(spec, group, metric):
    spec = {"kind": "squared_velocity"} if spec is None else spec
    _reject_unknown(spec, {"kind", "sign", "z"}, "problem.lagrangian")
    kind = spec.get("kind")
    if kind == "squared_velocity":
        if set(spec) - {"kind"}:
            raise ConfigError("squared_velocity takes no parameters")
        return SquaredVelocity(group, metric)
    if kind == "cubic_reduced":
        sign = float(spec.get("sign", 1.0))
        if sign not in (1.0, -1.0):
            raise ConfigError("cubic_reduced sign must be +1 or -1")
        z = _vector(spec.get("z", [0.0] * group.dim), group.dim, "lagrangian z")
        return CubicReduced(group, metric, sign, z)
    raise ConfigError(f"unknown lagrangian kind {kind!r}")


def parse_problem(data) -> ProblemSpec:
    _reject_unknown(data, _PROBLEM_KEYS, "problem")
    missing = sorted(_PROBLEM_REQUIRED - set(data))
    if missing:
        raise ConfigError(f"problem is missing: {', '.join(missing)}")
    group = groups.from_name(data["group"])
    manifold = manifolds.from_name(data["manifold"])
    manifolds.check_pair(group, manifold)
    metric = _metric(data.get("metric"), group)
    lag = _lagrangian(data.get("lagrangian"), group, metric)
    initial = _point(manifold, data["initial"], "initial point")
    nodes, targets = [], []
    if not isinstance(data["targets"], list):
        raise ConfigError("targets must be a list")
    for i, entry in enumerate(data["targets"]):
        _reject_unknown(entry, {"node", "point"}, f"targets[{i}]")
        if "node" not in entry or "point" not in entry:
            raise ConfigError(f"targets[{i}] needs node and point")
        node = entry["node"]
        if isinstance(node, bool) or not isinstance(node, int):
            raise ConfigError(f"targets[{i}].node must be an integer")
        nodes.append(node)
        targets.append(_point(manifold, entry["point"], f"targets[{i}].point"))
    N = data["N"]
    if isinstance(N, bool) or not isinstance(N, int):
        raise ConfigError("N must be an integer")
    xi0 = _vector(data.get("xi0_initial", [0.0] * group.dim), group.dim, "xi0_initial")
    try:
        return ProblemSpec(group, metric, lag, manifold,
                           TargetSchedule(initial, tuple(nodes), tuple(targets)),
                           float(data["sigma"]), float(data["h"]), N, xi0,
                           data.get("action_side", "left"), data.get("reduction_side", "right"),
                           float(data.get("radius", 1.0)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, HPSplinesError):
            raise
        raise ConfigError(str(exc)) from None


def _metric_out(problem):
    return [[float(x) for x in row] for row in problem.metric.gamma]


def serialize_problem(problem: ProblemSpec) -> dict:
    man = problem.manifold
    return {
        "group": problem.group.name,
        "metric": _metric_out(problem),
        "lagrangian": problem.lagrangian.to_dict(),
        "manifold": man.name,
        "initial": man.serialize(problem.schedule.initial),
        "targets": [{"node": int(n), "point": man.serialize(t)}
                    for n, t in zip(problem.schedule.nodes, problem.schedule.targets)],
        "sigma": problem.sigma,
        "h": problem.h,
        "N": int(problem.N),
        "xi0_initial": [float(x) for x in problem.xi0_initial],
        "action_side": problem.action_side,
        "reduction_side": problem.reduction_side,
        "radius": problem.radius,
    }


def parse_optimizer(data) -> OptimizerConfig:
    data = {} if data is None else data
    _reject_unknown(data, _OPTIMIZER_KEYS, "optimizer")
    try:
        return OptimizerConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def serialize_optimizer(cfg: OptimizerConfig) -> dict:
    out = dataclasses.asdict(cfg)
    if out["homotopy_schedule"] is not None:
        out["homotopy_schedule"] = list(out["homotopy_schedule"])
    return out


def parse_outputs(data) -> Outputs:
    data = {} if data is None else data
    _reject_unknown(data, {"dir", *_OUTPUT_FLAGS}, "outputs")
    out = Outputs(**data)
    for flag in _OUTPUT_FLAGS:
        if not isinstance(getattr(out, flag), bool):
            raise ConfigError(f"outputs.{flag} must be true or false")
    return out


def parse_config(data) -> RunConfig:
    _reject_unknown(data, {"problem", "optimizer", "outputs", "sweep", "convergence"}, "config")
    if "problem" not in data:
        raise ConfigError("config needs a problem section")
    problem = parse_problem(data["problem"])
    sweep = None
    if data.get("sweep") is not None:
        _reject_unknown(data["sweep"], {"sigmas"}, "sweep")
        sweep = tuple(float(s) for s in data["sweep"].get("sigmas", ()))
    conv = None
    if data.get("convergence") is not None:
        c = data["convergence"]
        _reject_unknown(c, {"h_list", "T", "mu0_0", "mu1_0"}, "convergence")
        d = problem.dim
        conv = ConvergenceSettings(
            tuple(float(h) for h in c.get("h_list", ConvergenceSettings.h_list)),
            None if c.get("T") is None else float(c["T"]),
            None if c.get("mu0_0") is None else tuple(_vector(c["mu0_0"], d, "mu0_0")),
            None if c.get("mu1_0") is None else tuple(_vector(c["mu1_0"], d, "mu1_0")))
    return RunConfig(problem, parse_optimizer(data.get("optimizer")),
                     parse_outputs(data.get("outputs")), sweep, conv)


def serialize_config(cfg: RunConfig) -> dict:
    out = {"problem": serialize_problem(cfg.problem),
           "optimizer": serialize_optimizer(cfg.optimizer),
           "outputs": dataclasses.asdict(cfg.outputs)}
    if cfg.sweep_sigmas is not None:
        out["sweep"] = {"sigmas": list(cfg.sweep_sigmas)}
    if cfg.convergence is not None:
        c = cfg.convergence
        out["convergence"] = {
            "h_list": list(c.h_list), "T": c.T,
            "mu0_0": None if c.mu0_0 is None else [float(x) for x in c.mu0_0],
            "mu1_0": None if c.mu1_0 is None else [float(x) for x in c.mu1_0]}
    return out


def loads(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(data)


def dumps(cfg: RunConfig) -> str:
    return json.dumps(serialize_config(cfg), indent=2, sort_keys=True)


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)
