"""Flat ``section.key = value`` experiment configuration.

One line per key, ``#`` starts a comment.  Every key has a type and a
default; unknown keys are rejected.  Floats are rendered with ``repr`` so
``parse(render(cfg)) == cfg`` holds exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


def _parse_float(text):
    return float(text)


def _parse_floats(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


def _parse_opt_float(text):
    return None if text.strip() == "auto" else float(text)


def _render_float(v):
    return repr(float(v))


def _render_floats(vs):
    return ", ".join(repr(float(v)) for v in vs)


def _render_opt_float(v):
    return "auto" if v is None else repr(float(v))


def _parse_int(text):
    return int(text, 0)


TYPES = {
    "str": (str, str),
    "int": (_parse_int, str),
    "float": (_parse_float, _render_float),
    "floats": (_parse_floats, _render_floats),
    "opt_float": (_parse_opt_float, _render_opt_float),
}

SCHEMA = {
    "group": ("str", "torus1"),
    "resolution": ("int", 64),
    "seed": ("int", 0),
    "operator.preset": ("str", "shifted_power"),
    "operator.m": ("float", 2.0),
    "operator.c": ("float", 1.0),
    "operator.eta": ("float", 0.0),
    "operator.seed": ("int", 0),
    "omega.descriptor": ("str", "arc:0,0.3"),
    "lambda_grid": ("floats", (19.0, 38.0, 57.0, 76.0, 95.0, 114.0, 133.0, 151.0)),
    "time.T": ("float", 1.0),
    "time.T_grid": ("floats", (0.8, 0.4, 0.2, 0.1, 0.05)),
    "time.alpha": ("float", 1.0),
    "contour.epsilon": ("float", 1e-4),
    "contour.ray_length": ("opt_float", None),
    "contour.nodes": ("int", 24),
    "contour.z": ("floats", (-1.0, -0.5)),
    "contour.bracket_cut": ("float", 17.0),
    "dual.bracket_cut": ("float", 4.0),
    "doubling.center": ("floats", ()),
    "doubling.R": ("float", 0.1),
    "doubling.trials": ("int", 16),
    "doubling.steps": ("int", 50),
    "control.lambda_cut": ("float", 19.0),
    "control.u0": ("str", "random"),
    "control.tol": ("float", 1e-8),
    "control.regularization": ("float", 0.0),
    "control.samples": ("int", 256),
    "control.lambda0": ("opt_float", None),
    "cutoff.epsilons": ("floats", (0.1, 0.3, 0.5, 0.7, 0.9)),
    "cutoff.T": ("float", 1.0),
    "cutoff.draws": ("int", 10),
    "cutoff.lambda": ("float", 19.0),
    "cutoff.alpha": ("float", 0.25),
    "symbol.name": ("str", "bracket_power"),
    "symbol.m": ("float", 2.0),
    "symbol.rho": ("float", 1.0),
    "symbol.delta": ("float", 0.0),
    "symbol.K": ("int", 256),
    "output.dir": ("str", "out"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        full = {k: d for k, (_, d) in SCHEMA.items()}
        for k, v in self.values.items():
            if k not in SCHEMA:
                raise ConfigurationError(f"unknown config key {k!r}")
            full[k] = v
        object.__setattr__(self, "values", full)

    def __getitem__(self, key):
        if key not in self.values:
            raise ConfigurationError(f"unknown config key {key!r}")
        return self.values[key]

    def replace(self, **kw):
        vals = dict(self.values)
        for k, v in kw.items():
            vals[k.replace("__", ".")] = v
        return ExperimentConfig(vals)

    def with_values(self, mapping):
        vals = dict(self.values)
        vals.update(mapping)
        return ExperimentConfig(vals)

    def render(self):
        lines = []
        for key, (kind, _) in SCHEMA.items():
            lines.append(f"{key} = {TYPES[kind][1](self.values[key])}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        for k in SCHEMA:
            a, b = self.values[k], other.values[k]
            if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
                continue
            if a != b:
                return False
        return True

    def __hash__(self):
        return hash(self.render())


def parse(text):
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigurationError(f"line {lineno}: unknown config key {key!r}")
        if key in vals:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        kind = SCHEMA[key][0]
        try:
            vals[key] = TYPES[kind][0](value)
        except ValueError:
            raise ConfigurationError(f"line {lineno}: bad {kind} value {value!r} for {key!r}") from None
    return ExperimentConfig(vals)


def render(config):
    return config.render()


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse(fh.read())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None


# per-module random streams: seed XOR a fixed tag
STREAM_TAGS = {
    "parseval": 0x5041525345564C,
    "doubling": 0x444F55424C494E47,
    "control": 0x434F4E54524F4C,
    "duality": 0x4455414C495459,
    "sinh": 0x53494E48,
    "semigroup": 0x53454D4947525550,
    "rayleigh": 0x5241594C45494748,
}


def stream(seed, name):
    """Generator for module ``name``; streams for different names are independent."""
    return np.random.default_rng((int(seed) & 0xFFFFFFFFFFFFFFFF) ^ STREAM_TAGS[name])
