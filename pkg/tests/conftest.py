import math

import numpy as np
import pytest

from cascadejsa.grid import PhysicalParams, make_grid


@pytest.fixture(scope="session")
def physical():
    return PhysicalParams(5.0, 0.25)


@pytest.fixture(scope="session")
def grid256():
    return make_grid(150.0, 256)


@pytest.fixture(scope="session")
def grid512():
    return make_grid(150.0, 512)


@pytest.fixture(scope="session")
def grid1024():
    return make_grid(150.0, 1024)


def gaussian_modes(grid, count):
    """Grid-orthonormal Hermite-Gauss functions (QR of sampled Gaussians times monomials)."""
    x = grid.nodes
    raw = np.stack([x**k * np.exp(-x**2 / 8.0) for k in range(count)], axis=1)
    sw = np.sqrt(grid.weights)
    q, _ = np.linalg.qr(sw[:, None] * raw)
    return q / sw[:, None]


@pytest.fixture
def two_mode_amplitude():
    def build(grid_s, grid_i, weights=(0.5, 0.5)):
        g = gaussian_modes(grid_s, 2)
        h = gaussian_modes(grid_i, 2)
        return sum(math.sqrt(w) * np.outer(g[:, k], h[:, k]) for k, w in enumerate(weights))
    return build


_CRITERIA = []


@pytest.fixture
def report():
    """Record one acceptance line; the full list is repeated in the terminal summary."""
    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
