import math

import numpy as np
import pytest

from ep_spectra.spectral_core import PeriodicGrid, ScalarField, VectorField

ACCEPTANCE_LINES: dict[int, str] = {}


def random_coefficients(grid: PeriodicGrid, rng, k_max: int, decay: float = 0.0, ncomp: int | None = None):
    """Hermitian random coefficients supported on ``|k|_inf <= k_max`` (lattice units)."""
    shape = grid.shape if ncomp is None else (ncomp,) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    keep = np.ones(grid.shape, dtype=bool)
    kk = np.zeros(grid.shape)
    for a in range(grid.dim):
        k = grid.wavenumbers(a)
        keep &= np.abs(k) <= k_max
        kk = kk + k**2
    weight = keep * (1.0 + kk) ** (-decay / 2)
    c = c * weight
    mirror = c
    for a in range(grid.dim):
        ax = a if ncomp is None else a + 1
        mirror = np.take(mirror, (-np.arange(grid.points_per_axis)) % grid.points_per_axis, axis=ax)
    return (c + np.conj(mirror)) / 2


def random_scalar(grid, rng, k_max, decay=0.0, scale=1.0):
    c = random_coefficients(grid, rng, k_max, decay)
    f = ScalarField.from_coefficients(grid, c)
    return ScalarField(grid, scale * f.samples / max(np.abs(f.samples).max(), 1e-300))


def random_vector(grid, rng, k_max, decay=0.0, scale=1.0):
    c = random_coefficients(grid, rng, k_max, decay, ncomp=grid.dim)
    u = VectorField.from_coefficients(grid, c)
    return VectorField(grid, scale * u.samples / max(np.abs(u.samples).max(), 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid1():
    return PeriodicGrid(1, 64, 2 * math.pi)


@pytest.fixture
def grid2():
    return PeriodicGrid(2, 32, 2 * math.pi)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
