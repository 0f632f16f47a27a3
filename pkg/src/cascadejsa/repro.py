"""Headline numbers for each scheme, with optional grid-doubling checks.

Each row is one quantity with its accepted band, so the table doubles as a
quick regression report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .experiments import Axis, SweepSpec, build_field, run_sweep
from .grid import PhysicalParams, make_grid
from .modulation import SchemePreset
from .schmidt import decompose

SUMMARY_HEADER = ("item", "scheme", "quantity", "value", "low", "high", "pass",
                  "S_N", "S_2N", "dS", "converged")


@dataclass
class ReproRow:
    item: str
    scheme: str
    quantity: str
    value: float
    low: float
    high: float
    s_n: float = math.nan
    s_2n: float = math.nan

    @property
    def passed(self) -> bool:
        return self.low <= self.value <= self.high

    @property
    def ds(self) -> float:
        return abs(self.s_2n - self.s_n)

    @property
    def converged(self) -> Optional[bool]:
        return None if math.isnan(self.s_2n) else self.ds < 1e-3

    def as_row(self):
        return (self.item, self.scheme, self.quantity, self.value, self.low, self.high,
                self.passed, self.s_n, self.s_2n, self.ds, self.converged)


# (item, label, pipeline, [(quantity, low, high), ...])
CASES = [
    ("1", "base", "base", [("S", 1.0, 1.4)]),
    ("2", "fe gamma_c=1", SchemePreset("fe", {"gamma_c": 1.0}),
     [("S", 0.0, 0.010), ("purity", 0.998, 1.0)]),
    ("3", "fd gamma_c_i2=gamma_c_s2=1", SchemePreset("fd", {"gamma_c_i2": 1.0, "gamma_c_s2": 1.0}),
     [("S", 0.70, 0.90)]),
    ("4", "iterated stages=6 gamma_c=5",
     SchemePreset("iterated", {"stages": 6, "gamma_c_i": 5.0, "gamma_c_s": 5.0}),
     [("purity", 0.999, 1.0)]),
    ("4", "iterated stages=6 gamma_c=1",
     SchemePreset("iterated", {"stages": 6, "gamma_c_i": 1.0, "gamma_c_s": 1.0}),
     [("purity", 0.9999, 1.0)]),
    ("5", "fs phi=0", SchemePreset("fs", {"phi": 0.0}),
     [("S", 0.25, 0.35), ("purity", 0.910, 0.935)]),
]


def reproduce(physical: Optional[PhysicalParams] = None, span: float = 150.0, points: int = 2048,
              convergence: bool = True, phase_steps: int = 16, sweep_points: int = 1024,
              progress=None) -> list:
    """Evaluate every headline case; with ``convergence`` also at ``2 * points``."""
    physical = physical or PhysicalParams()
    rows = []
    grid = make_grid(span, points)
    fine = make_grid(span, 2 * points) if convergence else None
    for item, label, pipeline, checks in CASES:
        if progress:
            progress(label)
        res = decompose(build_field(pipeline, physical, grid, grid))
        s_2n = math.nan
        if fine is not None:
            s_2n = decompose(build_field(pipeline, physical, fine, fine)).entropy
        for quantity, low, high in checks:
            value = res.entropy if quantity == "S" else res.purity
            rows.append(ReproRow(item, label, quantity, value, low, high, res.entropy, s_2n))

    # phase placement of the symmetrized extrema on a coarser sweep
    if progress:
        progress("fs phase sweep")
    step = 2 * math.pi / phase_steps
    spec = SweepSpec(Axis("phi", 0.0, (phase_steps - 1) * step, phase_steps),
                     SchemePreset("fs", {"phi": 0.0}), physical, span, sweep_points)
    recs = run_sweep(spec)
    ent = np.array([r.entropy for r in recs])
    phis = np.array([r.values["phi"] for r in recs])
    rows.append(ReproRow("5", "fs phase sweep", "argmin_phi", float(phis[np.argmin(ent)]), 0.0, step / 2))
    rows.append(ReproRow("5", "fs phase sweep", "argmax_phi", float(phis[np.argmax(ent)]),
                         math.pi - step / 2, math.pi + step / 2))
    return rows
