import numpy as np
import pytest

from kp2backlund.grid import Field2D, GridError
from kp2backlund.miura import SolverError
from kp2backlund.phi import phi, phi_linear, reflect_y, solve_psi

LIN_VALUE = -(2.0 / 3.0) * np.sqrt(np.pi)


def base(grid):
    X, Y = grid.mesh()
    return np.exp(-Y**2) / np.cosh(X) ** 2


def test_zero(zero):
    assert np.all(solve_psi(zero).values == 1.0)
    r = phi(zero)
    assert r.value == 0 and r.consistency_gap == 0
    assert phi_linear(zero) == 0


def test_linear_values(grid):
    z = base(grid)
    assert abs(phi_linear(Field2D(grid, z)) - LIN_VALUE) < 1e-10
    X, _ = grid.mesh()
    assert abs(phi_linear(Field2D(grid, X * z))) < 1e-15
    eps = 1e-4
    r = phi(Field2D(grid, eps * z))
    assert abs(r.value - eps * LIN_VALUE) / abs(eps * LIN_VALUE) < 1e-3
    assert r.consistency_gap < 1e-5


def test_finite_difference_derivative(grid):
    X, Y = grid.mesh()
    z = (1 + 0.3 * X) * np.exp(-(X**2 + (Y + 2) ** 2) / 3)
    eps = 1e-4
    fd = (phi(Field2D(grid, eps * z)).value - phi(Field2D(grid, -eps * z)).value) / (2 * eps)
    lin = phi_linear(Field2D(grid, z))
    assert abs(fd - lin) / abs(lin) < 1e-4


def test_reflection_invariance(grid):
    X, Y = grid.mesh()
    h = 0.05 * (X + 0.5) * np.exp(-(X**2 + (Y - 1.5) ** 2) / 2)
    a = phi(Field2D(grid, h))
    b = phi(reflect_y(Field2D(grid, h)))
    assert abs(a.value - b.value) < 1e-8
    assert max(a.consistency_gap, b.consistency_gap) < 1e-5


def test_nonpositive_h_keeps_psi_above_one(grid):
    X, Y = grid.mesh()
    h = -0.3 * np.exp(-(X**2 + Y**2) / 2)
    psi = solve_psi(Field2D(grid, h)).values
    assert psi.min() >= 1 - 1e-12


def test_large_h_rejected(grid):
    X, Y = grid.mesh()
    h = 50 * np.exp(-(X**2 + Y**2) / 2)
    with pytest.raises(SolverError, match="nonpositive"):
        phi(Field2D(grid, h))


def test_non_decaying_refused(grid):
    X, Y = grid.mesh()
    with pytest.raises(GridError):
        phi(Field2D(grid, np.exp(-Y**2) * np.ones_like(X)))
