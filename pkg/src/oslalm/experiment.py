"""Experiment configuration and the standard desk-scale test problem.

A configuration is a YAML mapping. Every key is optional; missing keys take
the defaults below, which describe the 64 x 64 PWLS test problem used by
the acceptance suite::

    grid:        {nx: 64, ny: 64, pixel_size: 0.5}
    geometry:    {n_views: 96, n_bins: 92, bin_spacing: 0.5}
    phantom:     {kind: default, water: 0.2}   # or kind: ellipses, ellipses: [[cx, cy, ax, ay, phi, density], ...]
    noise:       {I0: 1.0e5, seed: 1}
    regularizer: {beta: 1000.0, potential: fair, delta: 0.005, neighborhood: "4", box: [0.0, .inf]}
    init:        fbp                            # or zero
    reference:   {iters: 3000}
    threshold:   0.01                           # RMS target as a fraction of the phantom's dynamic range
    solvers:     [{name: ..., algorithm: os-lalm, mode: continuation, M: 8, ...}]
    output:      runs/default

Solver entries accept every :class:`~oslalm.solvers.SolverOptions` field.
``set_key`` applies dotted-path overrides such as ``noise.I0=1e6``.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from .ct import (
    Ellipse,
    Geometry,
    ImageGrid,
    build_system_matrix,
    default_phantom,
    fbp,
    make_phantom,
    synthesize_weights,
)
from .regularizer import BoxConstraint, Potential, RegularizerConfig
from .solvers import Problem, SolverOptions, fista_reference

__all__ = [
    "DEFAULTS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "set_key",
    "BenchmarkCase",
    "simulate",
    "initial_image",
    "build_case",
    "standard_test_problem",
]

DEFAULTS = {
    "grid": {"nx": 64, "ny": 64, "pixel_size": 0.5},
    "geometry": {"n_views": 96, "n_bins": 92, "bin_spacing": 0.5},
    "phantom": {"kind": "default", "water": 0.2},
    "noise": {"I0": 1.0e5, "seed": 1},
    "regularizer": {
        "beta": 1000.0,
        "potential": "fair",
        "delta": 0.005,
        "neighborhood": "4",
        "box": [0.0, float("inf")],
    },
    "init": "fbp",
    "reference": {"iters": 3000},
    "threshold": 0.01,
    "solvers": [],
    "output": "runs/default",
}

_OPTION_FIELDS = {f.name for f in fields(SolverOptions)}


class ConfigError(ValueError):
    pass


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats such as ``1e5`` (YAML 1.2)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+][0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def _yaml_load(text):
    return yaml.load(text, Loader=_Loader)


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {path + k!r} must be a mapping")
            for kk in v:
                if kk not in base[k] and k not in ("phantom", "regularizer"):
                    raise ConfigError(f"unknown config key {path + k + '.' + kk!r}")
            out[k] = {**out[k], **v}
        else:
            out[k] = v
    return out


def _to_float(v, key):
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {v!r}") from None


@dataclass
class ExperimentConfig:
    """Validated view of a configuration mapping (see module docstring)."""

    data: dict

    def __post_init__(self):
        self.data = _merge(DEFAULTS, self.data)
        self.grid
        self.geometry
        self.regularizer
        self.solver_options()
        if self.data["init"] not in ("fbp", "zero"):
            raise ConfigError("init must be 'fbp' or 'zero'")

    @property
    def grid(self):
        g = self.data["grid"]
        try:
            ps = _to_float(g["pixel_size"], "grid.pixel_size")
            return ImageGrid(int(g["nx"]), int(g["ny"]), ps, g.get("roi_radius"))
        except ValueError as e:
            raise ConfigError(f"grid: {e}") from None

    @property
    def geometry(self):
        g = self.data["geometry"]
        try:
            bs = _to_float(g["bin_spacing"], "geometry.bin_spacing")
            return Geometry(int(g["n_views"]), int(g["n_bins"]), bs)
        except ValueError as e:
            raise ConfigError(f"geometry: {e}") from None

    @property
    def regularizer(self):
        r = self.data["regularizer"]
        try:
            pot = Potential(r["potential"], _to_float(r["delta"], "regularizer.delta"))
            return RegularizerConfig(_to_float(r["beta"], "regularizer.beta"), pot, str(r["neighborhood"]))
        except ValueError as e:
            raise ConfigError(f"regularizer: {e}") from None

    @property
    def box(self):
        b = self.data["regularizer"].get("box")
        if b is None:
            return None
        lo, hi = (_to_float(v, "regularizer.box") for v in b)
        return BoxConstraint(lo, hi)

    @property
    def output(self):
        return Path(self.data["output"])

    def phantom(self):
        p = self.data["phantom"]
        grid = self.grid
        if p.get("kind", "default") == "default":
            return default_phantom(grid, _to_float(p.get("water", 0.2), "phantom.water"))
        if p["kind"] == "ellipses":
            try:
                return make_phantom(grid, [Ellipse(*map(float, e)) for e in p.get("ellipses", [])])
            except TypeError as e:
                raise ConfigError(f"phantom.ellipses: {e}") from None
        raise ConfigError(f"unknown phantom kind {p['kind']!r}")

    def solver_options(self):
        """``(name, SolverOptions)`` for every configured solver."""
        out = []
        for i, entry in enumerate(self.data["solvers"] or []):
            entry = dict(entry)
            unknown = set(entry) - _OPTION_FIELDS - {"name"}
            if unknown:
                raise ConfigError(f"solvers[{i}]: unknown keys {sorted(unknown)}")
            name = entry.pop("name", None)
            try:
                opts = SolverOptions(**entry)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"solvers[{i}]: {e}") from None
            out.append((name or opts.label, opts))
        return out


def set_key(data, dotted, value):
    """Set ``a.b.c`` in a nested mapping; ``value`` strings are parsed as YAML scalars.

    """
    if isinstance(value, str):
        value = _yaml_load(value)
    keys = dotted.split(".")
    cur = data
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
        if not isinstance(cur, dict):
            raise ConfigError(f"cannot set {dotted!r}: {k!r} is not a mapping")
    cur[keys[-1]] = value
    return data


def load_config(path=None, overrides=()):
    """Read a YAML config (or the defaults when ``path`` is None) and apply ``key=value`` overrides."""
    data = {}
    if path is not None:
        try:
            data = _yaml_load(Path(path).read_text()) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    for item in overrides:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        set_key(data, key.strip(), val.strip())
    return ExperimentConfig(data)


@dataclass
class BenchmarkCase:
    """A simulated problem with its reference, starting image and RMS target."""

    problem: Problem
    x0: np.ndarray
    threshold: float

    @property
    def x_true(self):
        return self.problem.x_true


def simulate(cfg):
    """Phantom, system matrix, sinogram and weights for ``cfg``."""
    grid, geo = cfg.grid, cfg.geometry
    x_true = cfg.phantom()
    A = build_system_matrix(grid, geo)
    noise = cfg.data["noise"]
    y, W = synthesize_weights(A, x_true, _to_float(noise["I0"], "noise.I0"), seed=int(noise["seed"]))
    return x_true, A, y, W


def initial_image(cfg, y):
    if cfg.data["init"] == "zero":
        return np.zeros(cfg.grid.size)
    return fbp(y, cfg.grid, cfg.geometry)


def build_case(cfg, A, y, W, x_true=None, x_ref=None):
    """Problem plus reference for given data; the reference is computed when missing."""
    problem = Problem(A, W, y, cfg.grid, cfg.regularizer, cfg.box, cfg.geometry, x_true)
    x0 = initial_image(cfg, y)
    if x_ref is None:
        x_ref = fista_reference(problem, int(cfg.data["reference"]["iters"]), x0=x0)
    problem.x_ref = x_ref
    span = float(np.ptp(x_true)) if x_true is not None else float(np.ptp(x_ref))
    return BenchmarkCase(problem, x0, float(cfg.data["threshold"]) * span)


_CACHE = {}


def standard_test_problem(overrides=()):
    """The default configuration's problem; ``overrides`` are ``key=value`` strings (cached)."""
    key = tuple(overrides)
    if key not in _CACHE:
        cfg = load_config(overrides=overrides)
        x_true, A, y, W = simulate(cfg)
        _CACHE[key] = build_case(cfg, A, y, W, x_true)
    return _CACHE[key]
