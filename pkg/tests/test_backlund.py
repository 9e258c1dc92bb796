import numpy as np
import pytest

from kp2backlund.backlund import (MultiSpec, c_to_gamma0, elementary, elementary_pair, kink_spec, lax_residual,
                                  modulated_decompose, multisoliton_add, param_map, soliton_add, superpose)
from kp2backlund.diagnostics import alpha_y_l2, miura_system_residuals
from kp2backlund.grid import Field2D, GridError, integrate_and_norms, l2
from kp2backlund.miura import SolverError
from kp2backlund.profiles import eta, soliton


def dxgauss(grid, amp, width2=4.0):
    X, Y = grid.mesh()
    return Field2D(grid, amp * (-2 * X / width2) * np.exp(-(X**2 + Y**2) / width2))


@pytest.fixture(scope="module")
def zero_pair(zero):
    return elementary_pair(zero)


@pytest.fixture(scope="module")
def small_u(grid):
    return dxgauss(grid, 0.02)


@pytest.fixture(scope="module")
def small_pair(small_u):
    return elementary_pair(small_u)


@pytest.fixture(scope="module")
def small_out(small_u, small_pair):
    return soliton_add(small_u, 0.5, pair=small_pair)


def test_zero_pair(zero_pair):
    for f in (zero_pair.vtilde_plus, zero_pair.vtilde_minus, zero_pair.Vtilde_plus, zero_pair.Vtilde_minus):
        assert np.abs(f.values).max() < 1e-12


def test_small_pair(small_pair):
    p, m = small_pair.plus, small_pair.minus
    g = small_pair.u.grid
    assert p.iterations <= 30 and m.iterations <= 30
    assert 0 < l2(p.vt - m.vt, g) < np.sum(np.abs(p.vt) ** 3) ** (1 / 3) * 10


def test_pair_guard(grid):
    with pytest.raises(SolverError):
        elementary_pair(dxgauss(grid, 2.0))


@pytest.mark.parametrize("c", [0.0, 1.3, -2.0])
def test_superpose_kink(zero_pair, c):
    g = zero_pair.u.grid
    v = superpose(zero_pair, kink_spec(c))
    assert v.meta == "kink"
    assert np.abs(v.values - np.tanh(g.x - c)[None, :]).max() < 1e-12


def test_superpose_constant_and_multikink(zero):
    g = zero.grid
    e = elementary(zero, 0.7)
    v = superpose([e], MultiSpec((0.7,), (0.0,)), g)
    assert np.all(np.abs(v.values - 0.7) < 1e-14)
    elems = [elementary(zero, lam) for lam in (-1.0, 0.0, 1.0)]
    v = superpose(elems, MultiSpec((-1.0, 0.0, 1.0), (0.0, 0.0, 0.0)), g)
    assert v.meta == "multikink"
    X, Y = g.mesh()
    a, b = np.exp(-X + Y), np.exp(X + Y)
    ref = (b - a) / (a + 1 + b)
    assert np.abs(v.values - ref).max() < 1e-10


def test_multispec_validation():
    with pytest.raises(GridError):
        MultiSpec((1.0, -1.0), (0.0, 0.0))
    with pytest.raises(GridError):
        MultiSpec((-1.0, 1.0), (0.0,))


def test_modulated_decompose_zero(zero_pair):
    g = zero_pair.u.grid
    v = Field2D(g, np.tile(np.tanh(g.x - 1.7), (g.ny, 1)))
    omega, alpha = modulated_decompose(v, zero_pair)
    assert np.abs(alpha.values - 1.7).max() < 1e-12
    assert np.abs(omega.values).max() < 1e-12


def test_sandwich_identity(grid):
    x = grid.x

    def G(a):
        return eta(x - a, 1) - eta(x - a, -1)

    for a, b in ((-1.0, 0.5), (0.0, 2.0)):
        assert abs(np.sum(G(a) - G(b)) * grid.dx - 2 * (b - a)) < 1e-10


def test_param_map_zero(zero_pair):
    assert abs(param_map("c_to_gamma0", zero_pair, 1.5) - 1.5) < 1e-10
    assert abs(param_map("gamma0_to_c", zero_pair, -2.0) + 2.0) < 1e-10
    with pytest.raises(GridError):
        param_map("sideways", zero_pair, 0.0)


def test_param_map_small_u(grid):
    diffs = []
    for eps in (0.01, 0.02, 0.04):
        u = dxgauss(grid, eps)
        pair = elementary_pair(u)
        diffs.append(abs(c_to_gamma0(pair, 1.0) - 1.0) / integrate_and_norms(u).h_minus_half_zero)
    # |gamma0 - c| / ||u|| stays bounded along the ladder
    assert max(diffs) < 3 * min(diffs) + 1e-12


@pytest.mark.parametrize("g0", [0.0, 2.5])
def test_soliton_add_zero(zero, zero_pair, g0):
    g = zero.grid
    out = soliton_add(zero, g0, pair=zero_pair)
    assert np.abs(out.u_bar.values - soliton(g.x - g0)[None, :]).max() < 1e-9
    assert abs(out.c - g0) < 1e-10


def test_soliton_add_small_u(small_u, small_pair, small_out):
    g = small_u.grid
    out = small_out
    X = g.x[None, :]
    a = out.alpha.values[:, None]
    recon = np.tanh(X - a) + eta(X - a, 1) * small_pair.plus.vt + eta(X - a, -1) * small_pair.minus.vt + out.omega.values
    assert np.abs(recon - out.v.values).max() < 1e-10
    assert np.abs(out.omega.values.sum(axis=1) * g.dx).max() < 1e-8
    res = miura_system_residuals(small_u, out.v, out.u_bar, out.alpha)
    assert res.max() < 1e-6
    assert alpha_y_l2(out.alpha) < 5 * integrate_and_norms(small_u).h_minus_half_zero
    assert abs(c_to_gamma0(small_pair, out.c) - 0.5) < 1e-10


def test_lax_eigenfunction(small_pair, small_out):
    assert lax_residual(small_pair, (small_out.c, -small_out.c), small_pair.u) < 1e-5


def test_multisoliton_add(zero, small_u):
    g = zero.grid
    assert np.all(multisoliton_add(zero, MultiSpec((0.4,), (0.0,))).values == 0)
    elems = [elementary(small_u, lam) for lam in (-1.0, 0.0, 1.0)]
    a = multisoliton_add(small_u, MultiSpec((-1.0, 0.0, 1.0), (0.2, -0.1, 0.0)), elems=elems).values
    b = multisoliton_add(small_u, MultiSpec((-1.0, 0.0, 1.0), (3.2, 2.9, 3.0)), elems=elems).values
    assert np.abs(a - b).max() < 1e-12
    # two-term superposition with (c, -c) is the soliton map
    pair = elementary_pair(zero)
    ub = multisoliton_add(zero, kink_spec(0.0), elems=pair.as_list()).values
    assert np.abs(ub - soliton(g.x)[None, :]).max() < 1e-9
