"""Frequency grids, physical parameters and the base two-photon amplitude.

All frequencies are detunings measured in units of the intrinsic idler
decay rate, so that rate never appears as a runtime quantity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

QUADRATURES = ("midpoint", "trapezoid")


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Uniform 1D discretization of a detuning axis on ``[-span, span]``.

    ``weights`` are the quadrature weights, so ``weights.sum() == 2 * span``.
    """

    span: float
    points: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    quadrature: str = "midpoint"

    def __post_init__(self):
        if self.points < 2:
            raise ConfigError(f"grid needs at least 2 points, got {self.points}")
        if self.nodes.shape != (self.points,) or self.weights.shape != (self.points,):
            raise ConfigError("grid nodes/weights do not match the point count")
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))

    @property
    def step(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    def same_as(self, other: "FrequencyGrid") -> bool:
        return (
            self.points == other.points
            and self.span == other.span
            and self.quadrature == other.quadrature
        )


def make_grid(span: float, points: int, quadrature: str = "midpoint") -> FrequencyGrid:
    """Build a symmetric uniform grid.

    The midpoint rule places ``points`` cell centres at ``-span + (k + 1/2) h``
    with ``h = 2 span / points`` and equal weights ``h``. The trapezoid rule
    includes both endpoints, ``h = 2 span / (points - 1)``, and halves the end
    weights.
    """
    if not (isinstance(span, (int, float, np.floating, np.integer)) and math.isfinite(span) and span > 0):
        raise ConfigError(f"grid span must be a positive finite number, got {span!r}")
    if isinstance(points, bool) or int(points) != points or points < 2:
        raise ConfigError(f"grid points must be an integer >= 2, got {points!r}")
    span = float(span)
    points = int(points)
    k = np.arange(points)
    if quadrature == "midpoint":
        h = 2.0 * span / points
        nodes = -span + (k + 0.5) * h
        weights = np.full(points, h)
    elif quadrature == "trapezoid":
        h = 2.0 * span / (points - 1)
        nodes = -span + k * h
        weights = np.full(points, h)
        weights[0] = weights[-1] = 0.5 * h
    else:
        raise ConfigError(f"unknown quadrature {quadrature!r}; use one of {QUADRATURES}")
    # mirror the upper half so node[k] == -node[points-1-k] holds exactly
    half = points // 2
    nodes[points - half:] = -nodes[:half][::-1]
    if points % 2:
        nodes[half] = 0.0
    return FrequencyGrid(span, points, nodes, weights, quadrature)


@dataclass(frozen=True)
class PhysicalParams:
    """Superradiant idler decay ``gamma3n`` and pulse product ``gamma_tau``."""

    gamma3n: float = 5.0
    gamma_tau: float = 0.25

    def __post_init__(self):
        for name in ("gamma3n", "gamma_tau"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex two-photon amplitude sampled on ``grid_s`` x ``grid_i``.

    Rows index the signal detuning, columns the idler detuning. The amplitude
    is kept unnormalized; see :func:`cascadejsa.schmidt.normalize`.
    """

    grid_s: FrequencyGrid
    grid_i: FrequencyGrid
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=complex)
        if amp.shape != (self.grid_s.points, self.grid_i.points):
            raise ConfigError(
                f"amplitude shape {amp.shape} does not match grids "
                f"({self.grid_s.points}, {self.grid_i.points})"
            )
        if not np.all(np.isfinite(amp)):
            raise ConfigError("spectral amplitude contains NaN or Inf")
        object.__setattr__(self, "amplitude", _frozen(amp))

    @property
    def shape(self):
        return self.amplitude.shape

    def replace(self, amplitude) -> "SpectralField":
        """Same grids, new amplitude."""
        return SpectralField(self.grid_s, self.grid_i, amplitude)

    def axes(self):
        """Signal detunings as a column and idler detunings as a row, for broadcasting."""
        return self.grid_s.nodes[:, None], self.grid_i.nodes[None, :]


def base_amplitude(params: PhysicalParams, x, y):
    """Cascade two-photon amplitude at signal detuning ``x`` and idler detuning ``y``.

    A Gaussian in the total detuning ``x + y`` (width set by the pulse) times
    a Lorentzian in the idler detuning with half-width ``gamma3n / 2``.
    """
    tau = params.gamma_tau
    return np.exp(-((x + y) ** 2) * tau**2 / 8.0) / (params.gamma3n / 2.0 - 1j * y)


def base_spectral(params: PhysicalParams, grid_s: FrequencyGrid, grid_i: FrequencyGrid) -> SpectralField:
    x = grid_s.nodes[:, None]
    y = grid_i.nodes[None, :]
    return SpectralField(grid_s, grid_i, base_amplitude(params, x, y))


def superradiant_rate(n_atoms: int, mu_bar: float) -> float:
    """Collectively enhanced idler decay rate ``N * mu_bar + 1`` (units of the single-atom rate)."""
    if isinstance(n_atoms, bool) or int(n_atoms) != n_atoms or n_atoms < 1:
        raise ConfigError(f"atom number must be an integer >= 1, got {n_atoms!r}")
    if not (math.isfinite(mu_bar) and mu_bar >= 0):
        raise ConfigError(f"geometric constant must be >= 0, got {mu_bar!r}")
    return int(n_atoms) * float(mu_bar) + 1.0
