import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from zklab import SpectralField, dealias, make_grid


@pytest.fixture
def grid2d():
    return make_grid(2, 2 * np.pi, 16)


@pytest.fixture
def grid1d():
    return make_grid(1, 2 * np.pi, 64)


def random_dealiased(grid, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return dealias(SpectralField(grid, c))


def plane_wave(grid, index, amplitude=1.0):
    """Plane wave exp(i x . xi) with unit coefficient scaling."""
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    coeffs[tuple(m % grid.n for m in index)] = amplitude * grid.box_length ** (grid.d / 2.0)
    return SpectralField(grid, coeffs)
