"""Experiment configuration: INI files with flat ``section.key`` paths.

Layers are applied in order: built-in defaults, the config file, environment
variables (``CASCADEJSA_<SECTION>__<KEY>``), then command-line flags.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError
from .experiments import AXIS_NAMES, Axis, SweepSpec
from .grid import FrequencyGrid, PhysicalParams, QUADRATURES, make_grid
from .modulation import PRESET_PARAMS, SchemePreset, resolve_axis
from .schmidt import DEFAULT_MAX_MODES

ENV_PREFIX = "CASCADEJSA_"
PIPELINE_PARAMS = tuple(sorted({p for names in PRESET_PARAMS.values() for p in names}))


def parse_real(text) -> float:
    """Float literal, or ``pi`` / ``-pi``."""
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip()
    if t in ("pi", "+pi"):
        return math.pi
    if t == "-pi":
        return -math.pi
    try:
        value = float(t)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"not a finite number: {text!r}")
    return value


def _int(text) -> int:
    value = parse_real(text)
    if value != int(value):
        raise ConfigError(f"not an integer: {text!r}")
    return int(value)


def _choice(*options):
    def conv(text):
        t = str(text).strip().lower()
        if t not in options:
            raise ConfigError(f"{text!r} is not one of {', '.join(options)}")
        return t
    return conv


def _text(text):
    t = str(text).strip()
    return t or None


def _axis_name(text):
    t = str(text).strip()
    return t or None


# key path -> (attribute, converter)
SCHEMA = {
    "physical.gamma3n_over_gamma": ("gamma3n", parse_real),
    "physical.gamma_tau": ("gamma_tau", parse_real),
    "grid.span_over_gamma": ("span", parse_real),
    "grid.points": ("points", _int),
    "grid.quadrature": ("quadrature", _choice(*QUADRATURES)),
    "pipeline.preset": ("preset", _text),
    "pipeline.expr": ("expr", _text),
    "schmidt.backend": ("backend", _choice("svd", "kernel", "both")),
    "schmidt.max_modes": ("max_modes", _int),
    "output.format": ("output_format", _choice("csv", "json")),
    "output.path": ("output_path", _text),
    "output.modes": ("output_modes", _int),
    "sweep.axis": ("axis", _axis_name),
    "sweep.from": ("sweep_from", parse_real),
    "sweep.to": ("sweep_to", parse_real),
    "sweep.steps": ("steps", _int),
    "sweep.scale": ("scale", _choice("linear", "log")),
    "sweep.axis2": ("axis2", _axis_name),
    "sweep.from2": ("sweep_from2", parse_real),
    "sweep.to2": ("sweep_to2", parse_real),
    "sweep.steps2": ("steps2", _int),
    "sweep.scale2": ("scale2", _choice("linear", "log")),
    "sweep.points": ("sweep_points", _int),
    "sweep.refine": ("refine", _int),
    "sweep.workers": ("workers", _int),
}


@dataclass
class ExperimentConfig:
    """Every knob for one run; defaults are the cascade working point."""

    gamma3n: float = 5.0
    gamma_tau: float = 0.25
    span: float = 150.0
    points: int = 2048
    quadrature: str = "midpoint"
    preset: Optional[str] = None
    expr: Optional[str] = "base"
    params: dict = field(default_factory=dict)
    backend: str = "svd"
    max_modes: int = DEFAULT_MAX_MODES
    output_format: str = "csv"
    output_path: Optional[str] = None
    output_modes: int = 4
    axis: Optional[str] = None
    sweep_from: Optional[float] = None
    sweep_to: Optional[float] = None
    steps: Optional[int] = None
    scale: Optional[str] = None
    axis2: Optional[str] = None
    sweep_from2: Optional[float] = None
    sweep_to2: Optional[float] = None
    steps2: Optional[int] = None
    scale2: Optional[str] = None
    sweep_points: int = 1024
    refine: int = 0
    workers: int = 1

    # -- layering ---------------------------------------------------------

    def apply(self, values: dict, source: str = "override") -> "ExperimentConfig":
        """Apply a ``{key path: raw value}`` layer in place."""
        if "pipeline.preset" in values and "pipeline.expr" in values:
            if values["pipeline.preset"] and values["pipeline.expr"]:
                raise ConfigError(f"{source}: set either pipeline.preset or pipeline.expr, not both")
        if values.get("pipeline.expr"):
            # a new expression replaces any preset parameters from earlier layers
            self.params = {}
        for key, raw in values.items():
            if raw is None:
                continue
            if key in SCHEMA:
                attr, conv = SCHEMA[key]
                value = conv(raw)
                setattr(self, attr, value)
                if attr == "preset" and value:
                    self.expr = None
                elif attr == "expr" and value:
                    self.preset = None
            elif key.startswith("pipeline.") and key[9:] in PIPELINE_PARAMS:
                name = key[9:]
                self.params[name] = str(raw).strip() if name == "target" else (
                    _int(raw) if name == "stages" else parse_real(raw))
            else:
                raise ConfigError(f"{source}: unknown configuration key {key!r}")
        return self

    def apply_env(self, environ=None) -> "ExperimentConfig":
        environ = os.environ if environ is None else environ
        layer = {}
        for name, value in environ.items():
            if not name.startswith(ENV_PREFIX):
                continue
            rest = name[len(ENV_PREFIX):].lower()
            if "__" not in rest:
                raise ConfigError(f"environment variable {name}: expected {ENV_PREFIX}<SECTION>__<KEY>")
            section, key = rest.split("__", 1)
            layer[f"{section}.{key}"] = value
        return self.apply(layer, "environment")

    def apply_file(self, path) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except (configparser.Error, UnicodeDecodeError) as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        layer = {f"{section}.{key}": value
                 for section in parser.sections() for key, value in parser.items(section)}
        return self.apply(layer, str(path))

    # -- derived objects --------------------------------------------------

    def physical(self) -> PhysicalParams:
        return PhysicalParams(self.gamma3n, self.gamma_tau)

    def grid(self, points: Optional[int] = None) -> FrequencyGrid:
        return make_grid(self.span, self.points if points is None else points, self.quadrature)

    def check_pipeline(self):
        if bool(self.preset) == bool(self.expr):
            raise ConfigError("exactly one of pipeline.preset and pipeline.expr must be set")
        if self.expr and self.params:
            raise ConfigError(f"preset parameters {sorted(self.params)} given with an expression pipeline")

    def pipeline(self, extra: Optional[dict] = None):
        """The configured preset or expression; ``extra`` fills parameters a sweep will drive."""
        self.check_pipeline()
        if self.expr:
            return self.expr
        name = self.preset.upper()
        if name not in PRESET_PARAMS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from "
                              f"{', '.join(sorted(k.lower() for k in PRESET_PARAMS))}")
        params = dict(extra or {})
        params.update(self.params)
        unused = sorted(set(params) - set(PRESET_PARAMS[name]))
        if unused:
            raise ConfigError(f"preset {self.preset} does not take parameter(s): {', '.join(unused)}")
        return SchemePreset(name, params)

    def _axis(self, name, start, stop, steps, scale, default_steps):
        if name not in AXIS_NAMES and name not in PIPELINE_PARAMS:
            raise ConfigError(f"unknown sweep axis {name!r}; use one of {', '.join(AXIS_NAMES)}")
        if start is None or stop is None:
            raise ConfigError(f"sweep axis {name} needs both from and to")
        if scale is None:
            scale = "linear" if name in ("phi", "stages") else "log"
        return Axis(name, start, stop, default_steps if steps is None else steps, scale)

    def sweep_spec(self) -> SweepSpec:
        if not self.axis:
            raise ConfigError("sweep needs an axis (sweep.axis / --axis)")
        two_d = bool(self.axis2)
        axis1 = self._axis(self.axis, self.sweep_from, self.sweep_to, self.steps, self.scale,
                           30 if two_d else 50)
        axis2 = None
        if two_d:
            axis2 = self._axis(self.axis2, self.sweep_from2, self.sweep_to2, self.steps2, self.scale2, 30)
        extra = {}
        if self.preset:
            for ax in filter(None, (axis1, axis2)):
                for key in resolve_axis(self.preset, ax.name):
                    extra[key] = ax.start
        pipeline = self.pipeline(extra)
        backend = "svd" if self.backend == "both" else self.backend
        return SweepSpec(axis1, pipeline, self.physical(), self.span, self.sweep_points,
                         self.quadrature, backend, self.max_modes, axis2)

    # -- serialization ----------------------------------------------------

    def flat(self) -> dict:
        out = {}
        for key, (attr, _) in SCHEMA.items():
            value = getattr(self, attr)
            if value is not None:
                out[key] = value
        for name in sorted(self.params):
            out[f"pipeline.{name}"] = self.params[name]
        return out

    def to_text(self) -> str:
        """Effective configuration as an INI document that loads back to the same values."""
        sections = {}
        for key, value in self.flat().items():
            section, name = key.split(".", 1)
            if isinstance(value, float):
                value = repr(value)
            sections.setdefault(section, []).append(f"{name} = {value}")
        blocks = [f"[{s}]\n" + "\n".join(lines) for s, lines in sections.items()]
        return "\n\n".join(blocks) + "\n"
