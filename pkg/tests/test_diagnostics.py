import numpy as np
import pytest

from kp2backlund.diagnostics import (commute_check, kp2_residual, l2phi_seminorm, l2phi_seminorm_lbfgs, log_growth,
                                     miura_system_residuals, x_taper)
from kp2backlund.grid import Field2D, dx_spectral, ShiftCurve, interior_mask, make_grid
from kp2backlund.profiles import soliton


def test_residuals_kink_and_constant(grid, zero):
    X, _ = grid.mesh()
    r = miura_system_residuals(zero, Field2D(grid, np.tanh(X)), Field2D(grid, soliton(X)))
    assert r.max() < 1e-8
    r = miura_system_residuals(zero, Field2D(grid, np.ones(grid.shape)), zero)
    assert r.max() < 1e-12


def test_residual_detects_noise(grid, zero):
    X, Y = grid.mesh()
    rng = np.random.default_rng(11)
    # band-limited noise, so the spectral derivative is meaningful
    raw = rng.standard_normal(grid.shape)
    h = np.fft.rfft2(raw)
    k = np.fft.rfftfreq(grid.nx, d=grid.dx)
    l = np.fft.fftfreq(grid.ny, d=grid.dy)
    h *= np.exp(-(k[None, :] ** 2 + l[:, None] ** 2))
    n = np.fft.irfft2(h, s=grid.shape)
    n *= 1e-3 / np.abs(n).max() * np.exp(-(X**2 + Y**2) / 50)
    r = miura_system_residuals(zero, Field2D(grid, np.tanh(X) + n), Field2D(grid, soliton(X)),
                               alpha=np.zeros(grid.ny))
    sl = interior_mask(grid)
    expected = 2 * np.sqrt(np.sum(dx_spectral(n, grid.dx)[sl] ** 2) * grid.dx * grid.dy)
    assert r.algebraic > 0
    assert abs(r.algebraic - expected) < 1e-3 * expected


def test_kp2_residual_zero(grid, zero):
    assert kp2_residual(zero, np.zeros(grid.shape)) == 0.0


def test_seminorm_exact_soliton(grid):
    X, _ = grid.mesh()
    res = l2phi_seminorm(Field2D(grid, soliton(X)))
    assert res.value < 1e-8
    assert np.abs(res.sigma.values).max() < 1e-8


def test_seminorm_modulated_soliton(grid):
    y = grid.y
    sigma = 0.2 * np.sin(2 * np.pi * y / 20.0) * np.exp(-y**2 / 50)
    ub = soliton(grid.x[None, :] - sigma[:, None])
    res = l2phi_seminorm(Field2D(grid, ub))
    sy = np.sqrt(np.sum((np.diff(sigma) / grid.dy) ** 2) * grid.dy)
    assert res.value <= sy * (1 + 1e-9)


def test_seminorm_bump_two_optimizers(grid):
    X, Y = grid.mesh()
    bump = 0.01 * np.exp(-(X**2 + Y**2) / 8)
    ub = Field2D(grid, soliton(X) + bump)
    res = l2phi_seminorm(ub)
    nb = np.sqrt(np.sum(bump**2) * grid.dx * grid.dy)
    assert 0 < res.value <= 1.1 * nb
    assert abs(res.value - l2phi_seminorm_lbfgs(ub)) < 1e-4
    assert np.allclose(res.w.values, ub.values - soliton(X - res.sigma.values[:, None]))


def test_log_growth(grid):
    assert log_growth(ShiftCurve.constant(grid, 2.5)) == 0.0
    a = ShiftCurve(grid.y, np.log(2 + np.abs(grid.y)))
    # extremal pair (0, y0): 1 - log 2 / log(2 + |y0|), which tends to 1 as the window grows
    assert abs(log_growth(a) - (1 - np.log(2) / np.log(2 + abs(grid.y0)))) < 1e-12
    assert log_growth(a) < 1.0


def test_taper(grid):
    w = x_taper(grid)
    assert abs(w[grid.col_index(0.0)] - 1) < 1e-12
    assert w[0] < 1e-5 and w[-1] < 1e-5


def test_commute_zero_background():
    g = make_grid(256, 256, 40.0, 40.0, -20.0, -20.0)
    rep = commute_check(Field2D(g, np.zeros(g.shape)), 0.0, 0.5, save_every=100)
    t = np.asarray(rep.times)
    assert rep.gamma0_fit[0] == pytest.approx(0.0, abs=1e-10)
    assert np.abs(np.asarray(rep.gamma0_fit) - 4 * t).max() < 2 * g.dx
    assert max(rep.mismatch) < 1e-6
    assert max(rep.tail) == 0.0
