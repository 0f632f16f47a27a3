"""Cavity transfer, phase shifts, argument swap and multiplexing schemes.

Every operation is a pointwise transformation of a :class:`SpectralField`.
Named schemes multiply one shared base field by a bracket factor.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .grid import FrequencyGrid, PhysicalParams, SpectralField, base_spectral

TARGETS = ("s", "i")

# required parameters per scheme
PRESET_PARAMS = {
    "FA": ("gamma_c_s1", "gamma_c_i2"),
    "FB": ("gamma_c_i1", "gamma_c_i2"),
    "FC": ("phi", "gamma_c", "target"),
    "FD": ("gamma_c_i2", "gamma_c_s2"),
    "FE": ("gamma_c",),
    "FS": ("phi",),
    "ITERATED": ("stages", "gamma_c_i", "gamma_c_s"),
}

# sweep-axis shorthands resolved per scheme; exact parameter names are always accepted too
AXIS_ALIASES = {
    "FA": {"gamma_c": ("gamma_c_s1", "gamma_c_i2"), "gamma_c_s": ("gamma_c_s1",), "gamma_c_i": ("gamma_c_i2",)},
    "FB": {"gamma_c": ("gamma_c_i1", "gamma_c_i2"), "gamma_c_i": ("gamma_c_i1",)},
    "FD": {"gamma_c": ("gamma_c_i2", "gamma_c_s2"), "gamma_c_s": ("gamma_c_s2",), "gamma_c_i": ("gamma_c_i2",)},
    "ITERATED": {"gamma_c": ("gamma_c_i", "gamma_c_s")},
}


def phase_factor(phi: float) -> complex:
    """``exp(i phi)``, with ``phi == pi`` mapped to exactly ``-1``."""
    if phi == math.pi:
        return -1.0 + 0.0j
    return cmath.exp(1j * phi)


def _check_linewidth(gamma_c):
    if not (math.isfinite(gamma_c) and gamma_c > 0):
        raise ConfigError(f"cavity linewidth must be positive and finite, got {gamma_c!r}")


def cavity_transfer(delta_omega, gamma_c: float):
    """Lossless single-sided cavity response ``-(gc + 2i d) / (gc - 2i d)``.

    Unit modulus everywhere; ``-1`` on resonance and ``+1`` far off it.
    Accepts scalars or arrays for ``delta_omega``.
    """
    _check_linewidth(gamma_c)
    d = np.asarray(delta_omega, dtype=float)
    out = -(gamma_c + 2j * d) / (gamma_c - 2j * d)
    return out if out.ndim else complex(out)


def cavity_axis(field: SpectralField, target: str, gamma_c: float) -> np.ndarray:
    """Cavity factor along one axis, shaped for broadcasting against the amplitude."""
    x, y = field.axes()
    if target == "s":
        return cavity_transfer(x, gamma_c)
    if target == "i":
        return cavity_transfer(y, gamma_c)
    raise ConfigError(f"cavity target must be 's' or 'i', got {target!r}")


def apply_factor(field: SpectralField, factor: Callable) -> SpectralField:
    """Multiply ``field`` pointwise by ``factor(ds, di)``.

    ``factor`` is called once with a signal column and an idler row and must
    broadcast to the field shape (scalars are fine).
    """
    x, y = field.axes()
    values = np.broadcast_to(np.asarray(factor(x, y), dtype=complex), field.shape)
    return field.replace(field.amplitude * values)


def _require_shared_axis(grid_s: FrequencyGrid, grid_i: FrequencyGrid):
    if not grid_s.same_as(grid_i):
        raise ConfigError("symmetrization requires a shared detector axis (signal and idler grids differ)")


def swap_arguments(field: SpectralField) -> SpectralField:
    """Exchange the two detuning arguments (matrix transpose)."""
    _require_shared_axis(field.grid_s, field.grid_i)
    return SpectralField(field.grid_i, field.grid_s, field.amplitude.T)


def combine(fields: Sequence[SpectralField], phases: Sequence[float]) -> SpectralField:
    """Coherent sum ``sum_m exp(i phases[m]) fields[m]``."""
    if len(fields) == 0 or len(fields) != len(phases):
        raise ConfigError("combine needs equally many fields and phases (at least one)")
    first = fields[0]
    for other in fields[1:]:
        if not (other.grid_s.same_as(first.grid_s) and other.grid_i.same_as(first.grid_i)):
            raise ConfigError("cannot combine fields sampled on different grids")
    total = phase_factor(phases[0]) * first.amplitude
    for f, phi in zip(fields[1:], phases[1:]):
        total = total + phase_factor(phi) * f.amplitude
    return first.replace(total)


def ae_count(stages: int) -> int:
    """Number of multiplexed atomic ensembles after ``stages`` doubling stages."""
    return 2 ** int(stages)


@dataclass(frozen=True)
class SchemePreset:
    """A named multiplexing scheme and its parameters.

    Names are case-insensitive: ``fa``, ``fb``, ``fc``, ``fd``, ``fe``, ``fs``
    and ``iterated``. ``target`` (FC only) is ``'i'`` or ``'s'``.
    """

    name: str
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        key = str(self.name).upper()
        if key not in PRESET_PARAMS:
            raise ConfigError(f"unknown preset {self.name!r}; choose from {sorted(k.lower() for k in PRESET_PARAMS)}")
        object.__setattr__(self, "name", key)
        object.__setattr__(self, "params", dict(self.params))
        self.validate()

    def validate(self):
        missing = [p for p in PRESET_PARAMS[self.name] if p not in self.params]
        if missing:
            raise ConfigError(f"preset {self.name.lower()} is missing parameter(s): {', '.join(missing)}")
        for key in PRESET_PARAMS[self.name]:
            value = self.params[key]
            if key == "target":
                if value not in TARGETS:
                    raise ConfigError(f"target must be 's' or 'i', got {value!r}")
            elif key == "stages":
                if isinstance(value, bool) or float(value) != int(float(value)) or int(float(value)) < 1:
                    raise ConfigError(f"stages must be an integer >= 1, got {value!r}")
            elif key == "phi":
                if not math.isfinite(float(value)):
                    raise ConfigError(f"phi must be finite, got {value!r}")
            else:
                _check_linewidth(float(value))

    def get(self, key):
        value = self.params[key]
        if key == "target":
            return value
        if key == "stages":
            return int(float(value))
        return float(value)

    def with_params(self, **updates) -> "SchemePreset":
        merged = dict(self.params)
        merged.update(updates)
        return SchemePreset(self.name, merged)

    def resolve_axis(self, axis: str) -> tuple:
        return resolve_axis(self.name, axis)


def resolve_axis(preset_name: str, axis: str) -> tuple:
    """Parameter names of ``preset_name`` driven by sweep axis ``axis``."""
    name = preset_name.upper()
    aliases = AXIS_ALIASES.get(name, {})
    if axis in aliases:
        return aliases[axis]
    if axis in PRESET_PARAMS.get(name, ()) and axis != "target":
        return (axis,)
    raise ConfigError(f"axis {axis!r} does not drive any parameter of preset {preset_name.lower()}")


def preset_factor(preset: SchemePreset, base: SpectralField) -> np.ndarray:
    """Bracket factor multiplying the base field (not defined for FS)."""
    p = preset.get
    cav = lambda t, g: cavity_axis(base, t, g)  # noqa: E731
    name = preset.name
    if name == "FA":
        return cav("s", p("gamma_c_s1")) + cav("i", p("gamma_c_i2"))
    if name == "FB":
        return cav("i", p("gamma_c_i1")) + cav("i", p("gamma_c_i2"))
    if name == "FC":
        return phase_factor(p("phi")) + cav(p("target"), p("gamma_c"))
    if name == "FD":
        return phase_factor(math.pi) + cav("i", p("gamma_c_i2")) * cav("s", p("gamma_c_s2"))
    if name == "FE":
        ci = cav("i", p("gamma_c"))
        cs = cav("s", p("gamma_c"))
        return 1.0 - ci - cs + ci * cs
    raise ConfigError(f"preset {name.lower()} has no single bracket factor")


def build_preset(preset: SchemePreset, params: PhysicalParams,
                 grid_s: FrequencyGrid, grid_i: FrequencyGrid) -> SpectralField:
    """Evaluate a named scheme on the given grids."""
    base = base_spectral(params, grid_s, grid_i)
    name = preset.name
    if name == "FS":
        return base.replace(base.amplitude + phase_factor(preset.get("phi")) * swap_arguments(base).amplitude)
    if name == "ITERATED":
        amp = base.amplitude
        for stage in range(1, preset.get("stages") + 1):
            # odd stages act on the idler, even stages on the signal
            if stage % 2:
                amp = amp * (phase_factor(math.pi) + cavity_axis(base, "i", preset.get("gamma_c_i")))
            else:
                amp = amp * (phase_factor(math.pi) + cavity_axis(base, "s", preset.get("gamma_c_s")))
        return base.replace(amp)
    return base.replace(base.amplitude * preset_factor(preset, base))
