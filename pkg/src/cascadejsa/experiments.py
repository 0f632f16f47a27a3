"""Parameter sweeps and grid-convergence checks."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import CascadeError, ConfigError
from .grid import FrequencyGrid, PhysicalParams, SpectralField, make_grid
from .modulation import SchemePreset, build_preset
from .netlang import evaluate
from .schmidt import DEFAULT_MAX_MODES, decompose

AXIS_NAMES = ("gamma_c", "gamma_c_s", "gamma_c_i", "phi", "stages")
N_LAMBDA_COLUMNS = 8

Pipeline = Union[SchemePreset, str]


def build_field(pipeline: Pipeline, physical: PhysicalParams,
                grid_s: FrequencyGrid, grid_i: FrequencyGrid) -> SpectralField:
    """Evaluate a preset or a modulation expression on the given grids."""
    if isinstance(pipeline, SchemePreset):
        return build_preset(pipeline, physical, grid_s, grid_i)
    return evaluate(pipeline, physical, grid_s, grid_i)


def bind(pipeline: Pipeline, values: dict) -> Pipeline:
    """Substitute sweep values into a preset's parameters or an expression template.

    Expression templates use ``{name}`` placeholders; names not present in
    the template are simply unused.
    """
    if not values:
        return pipeline
    if isinstance(pipeline, SchemePreset):
        updates = {}
        for axis, value in values.items():
            for key in pipeline.resolve_axis(axis):
                updates[key] = value
        return pipeline.with_params(**updates)
    text = pipeline
    for axis, value in values.items():
        text = text.replace("{" + axis + "}", repr(float(value)))
    return text


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    steps: int = 50
    scale: str = "linear"

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError(f"axis {self.name}: steps must be an integer >= 1")
        if not self.start < self.stop:
            raise ConfigError(f"axis {self.name}: need from < to, got {self.start} >= {self.stop}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis {self.name}: scale must be 'linear' or 'log'")
        if self.scale == "log" and not self.start > 0:
            raise ConfigError(f"axis {self.name}: log scale needs from > 0")

    def values(self) -> np.ndarray:
        n = int(self.steps)
        if n == 1:
            vals = np.array([float(self.start)])
        elif self.scale == "log":
            vals = np.geomspace(self.start, self.stop, n)
        else:
            vals = np.linspace(self.start, self.stop, n)
        if self.name == "stages":
            rounded = np.round(vals)
            if np.any(np.abs(vals - rounded) > 1e-9):
                raise ConfigError("the stages axis must land on integers")
            vals = rounded
        return vals


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    pipeline: Pipeline
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    span: float = 150.0
    points: int = 1024
    quadrature: str = "midpoint"
    backend: str = "svd"
    max_modes: int = DEFAULT_MAX_MODES
    axis2: Optional[Axis] = None

    @property
    def axes(self):
        return (self.axis1,) if self.axis2 is None else (self.axis1, self.axis2)

    def grid_points(self):
        """Parameter dictionaries in row-major order (axis1 outer)."""
        if self.axis2 is None:
            return [{self.axis1.name: float(v)} for v in self.axis1.values()]
        return [{self.axis1.name: float(a), self.axis2.name: float(b)}
                for a in self.axis1.values() for b in self.axis2.values()]


@dataclass(frozen=True)
class SweepRecord:
    values: dict
    entropy: float
    purity: float
    lambdas: tuple
    tail: float
    ms: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def evaluate_point(spec: SweepSpec, values: dict, points: Optional[int] = None) -> SweepRecord:
    """Entropy, purity and leading eigenvalues at one sweep point; errors are recorded, not raised."""
    t0 = time.perf_counter()
    n = spec.points if points is None else points
    try:
        grid = make_grid(spec.span, n, spec.quadrature)
        fld = build_field(bind(spec.pipeline, values), spec.physical, grid, grid)
        res = decompose(fld, spec.backend, spec.max_modes)
    except (CascadeError, ArithmeticError, ValueError) as exc:
        ms = (time.perf_counter() - t0) * 1e3
        return SweepRecord(dict(values), math.nan, math.nan, (math.nan,) * N_LAMBDA_COLUMNS,
                           math.nan, ms, f"{type(exc).__name__}: {exc}")
    ms = (time.perf_counter() - t0) * 1e3
    return SweepRecord(dict(values), res.entropy, res.purity,
                       tuple(float(v) for v in res.top(N_LAMBDA_COLUMNS)), res.tail, ms)


def _point_task(args):
    spec, values = args
    return evaluate_point(spec, values)


def run_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> list:
    """Evaluate every grid point of ``spec``; output order follows the parameter index.

    ``progress`` is an optional callable ``(done, total)``.
    """
    for axis in spec.axes:
        if isinstance(spec.pipeline, SchemePreset):
            spec.pipeline.resolve_axis(axis.name)
    todo = spec.grid_points()
    records = []
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, rec in enumerate(pool.map(_point_task, [(spec, v) for v in todo])):
                records.append(rec)
                if progress:
                    progress(i + 1, len(todo))
    else:
        for i, values in enumerate(todo):
            records.append(evaluate_point(spec, values))
            if progress:
                progress(i + 1, len(todo))
    return records


def refine_extrema(spec: SweepSpec, records, points: int = 2048) -> dict:
    """Recompute the minimum- and maximum-entropy sweep points on a finer grid."""
    good = [r for r in records if r.ok]
    if not good:
        return {}
    lo = min(good, key=lambda r: r.entropy)
    hi = max(good, key=lambda r: r.entropy)
    return {"min": evaluate_point(spec, lo.values, points),
            "max": evaluate_point(spec, hi.values, points)}


def heatmap(spec: SweepSpec, records, quantity: str = "entropy"):
    """Arrange a 2D sweep as ``(axis1 values, axis2 values, matrix)``."""
    if spec.axis2 is None:
        raise ConfigError("heatmap needs a two-axis sweep")
    a = spec.axis1.values()
    b = spec.axis2.values()
    mat = np.array([getattr(r, quantity) for r in records], dtype=float).reshape(a.size, b.size)
    return a, b, mat


@dataclass(frozen=True)
class ConvergenceReport:
    points: tuple
    entropies: tuple
    deltas: tuple
    tolerance: float

    @property
    def converged(self) -> bool:
        return bool(self.deltas) and self.deltas[-1] < self.tolerance

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.deltas, self.deltas[1:]))


def convergence_check(pipeline: Pipeline, physical: PhysicalParams, span: float = 150.0,
                      base_points: int = 1024, levels: int = 3, quadrature: str = "midpoint",
                      backend: str = "svd", tolerance: float = 1e-3) -> ConvergenceReport:
    """Entropy at ``base_points * 2**k`` for ``k < levels`` and the successive changes."""
    if base_points < 256:
        raise ConfigError(f"convergence check needs base_points >= 256, got {base_points}")
    if levels < 2:
        raise ConfigError("convergence check needs at least two resolutions")
    pts, ents = [], []
    for k in range(levels):
        n = base_points * 2**k
        grid = make_grid(span, n, quadrature)
        res = decompose(build_field(pipeline, physical, grid, grid), backend, max_modes=DEFAULT_MAX_MODES)
        pts.append(n)
        ents.append(res.entropy)
    deltas = tuple(abs(b - a) for a, b in zip(ents, ents[1:]))
    return ConvergenceReport(tuple(pts), tuple(ents), deltas, tolerance)
