"""Cole-Hopf superposition of elementary solutions and the soliton addition maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .grid import Field2D, Grid2D, GridError, ShiftCurve
from .miura import SolveOptions, SolverError, build_primitive, solve_elementary
from .profiles import eta, mollifier_values, sech2


@dataclass
class Elementary:
    """vt = v - lam, its x-derivative and the normalized primitive Vt, as arrays."""

    lam: float
    vt: np.ndarray
    vt_x: np.ndarray
    Vt: np.ndarray
    iterations: int = 0
    residual_l2: float = 0.0


def elementary(u: Field2D, lam: float, opts: SolveOptions = SolveOptions()) -> Elementary:
    sol = solve_elementary(u, lam, opts)
    V = build_primitive(sol)
    return Elementary(lam, sol.vtilde.values, sol.vtilde_x.values, V.values,
                      sol.report.iterations, sol.report.residual_l2)


@dataclass
class ElementaryPair:
    u: Field2D
    plus: Elementary
    minus: Elementary

    @property
    def vtilde_plus(self) -> Field2D:
        return Field2D(self.u.grid, self.plus.vt)

    @property
    def vtilde_minus(self) -> Field2D:
        return Field2D(self.u.grid, self.minus.vt)

    @property
    def Vtilde_plus(self) -> Field2D:
        return Field2D(self.u.grid, self.plus.Vt)

    @property
    def Vtilde_minus(self) -> Field2D:
        return Field2D(self.u.grid, self.minus.Vt)

    def as_list(self) -> list[Elementary]:
        return [self.minus, self.plus]


def elementary_pair(u: Field2D, opts: SolveOptions = SolveOptions()) -> ElementaryPair:
    return ElementaryPair(u, elementary(u, 1.0, opts), elementary(u, -1.0, opts))


@dataclass(frozen=True)
class MultiSpec:
    lambdas: tuple
    cs: tuple

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or len(self.cs) != len(lam) or len(lam) < 1:
            raise GridError("lambdas and cs must be vectors of equal length")
        if np.any(np.diff(lam) <= 0):
            raise GridError("lambdas must be strictly increasing")
        object.__setattr__(self, "lambdas", tuple(float(a) for a in lam))
        object.__setattr__(self, "cs", tuple(float(c) for c in self.cs))


def _superpose(elems: list[Elementary], cs, grid: Grid2D, rows=slice(None)):
    """Return (v, v_x) for the log-sum-exp superposition, restricted to ``rows``."""
    x = grid.x[None, :]
    y = grid.y[rows][:, None]
    E = np.stack([e.Vt[rows] + e.lam * x + e.lam**2 * y + c for e, c in zip(elems, cs)])
    E -= E.max(axis=0)
    z = np.exp(E)
    z /= z.sum(axis=0)
    vj = np.stack([e.vt[rows] + e.lam for e in elems])
    v = np.sum(z * vj, axis=0)
    vx = np.sum(z * np.stack([e.vt_x[rows] for e in elems]), axis=0) + np.sum(z * vj**2, axis=0) - v**2
    return v, vx, z


def superpose(elems: list[Elementary] | ElementaryPair, spec: MultiSpec, grid: Grid2D | None = None) -> Field2D:
    if isinstance(elems, ElementaryPair):
        grid = elems.u.grid
        elems = elems.as_list()
    if grid is None:
        raise GridError("grid required")
    lams = tuple(e.lam for e in elems)
    if not np.allclose(lams, spec.lambdas):
        raise GridError("elementary solutions do not match the requested lambdas")
    for e in elems:
        if e.vt.shape != grid.shape:
            raise GridError("mismatched grids")
    v, _, _ = _superpose(elems, spec.cs, grid)
    meta = "kink" if spec.lambdas == (-1.0, 1.0) else ("constant" if len(lams) == 1 else "multikink")
    return Field2D(grid, v, meta=meta)


def kink_spec(c: float) -> MultiSpec:
    return MultiSpec((-1.0, 1.0), (c, -c))


# ---------------------------------------------------------------- decomposition

def modulated_decompose(v: Field2D, pair: ElementaryPair, tol: float = 1e-14) -> tuple[Field2D, ShiftCurve]:
    """Per row solve int (v - G_alpha) dx = 0, G_alpha = eta+(x-a) v+ + eta-(x-a) v-."""
    g = v.grid
    x = g.x[None, :]
    vp = pair.plus.vt + 1.0
    vm = pair.minus.vt - 1.0
    vals = v.values
    dx = g.dx

    def F(a):
        s = x - a[:, None]
        return np.sum(vals - eta(s, 1) * vp - eta(s, -1) * vm, axis=1) * dx

    def dF(a):
        s = x - a[:, None]
        return np.sum(0.5 * sech2(s) * (vp - vm), axis=1) * dx

    mid = g.x0 + 0.5 * g.Lx
    a = mid - np.sum(vals, axis=1) * dx / 2.0
    f = F(a)
    # monotone sandwich: slope in [1, 3], so the root lies within |F| of a
    lo = np.where(f > 0, a - np.abs(f) - 1e-12, a)
    hi = np.where(f > 0, a, a + np.abs(f) + 1e-12)
    for _ in range(100):
        step = f / dF(a)
        an = a - step
        bad = (an <= lo) | (an >= hi) | ~np.isfinite(an)
        an = np.where(bad, 0.5 * (lo + hi), an)
        fn = F(an)
        lo = np.where(fn < 0, an, lo)
        hi = np.where(fn > 0, an, hi)
        done = np.max(np.abs(an - a)) < tol
        a, f = an, fn
        if done:
            break
    else:
        raise SolverError("bracket failure in modulated decomposition")
    lim = 0.5 * g.Lx - 1.0
    if np.any(np.abs(a - mid) > lim):
        raise SolverError("bracket failure: kink position left the window")
    s = x - a[:, None]
    omega = vals - eta(s, 1) * vp - eta(s, -1) * vm
    return Field2D(g, omega), ShiftCurve(g.y, a)


# ---------------------------------------------------------------- parameter maps

def _rho_rows(grid: Grid2D) -> slice:
    rows = np.nonzero(np.abs(grid.y) < 1.0 + grid.dy)[0]
    if rows.size == 0:
        raise GridError("the window must contain y = 0")
    return slice(rows[0], rows[-1] + 1)


def c_to_gamma0(pair: ElementaryPair, c: float) -> float:
    """Root of F(g) = int rho(x - g, y) v^c(x, y) dx dy.

    Evaluated as int rho(x, y) v^c(x + g, y) with rho sampled on the fixed grid,
    the elementary fields shifted spectrally (they are localized on the rows
    where rho lives) and the linear phases shifted exactly.
    """
    g = pair.u.grid
    rows = _rho_rows(g)
    rho = mollifier_values(g)[rows]
    keep = np.nonzero(np.any(rho > 0, axis=0))[0]
    x = g.x[None, keep]
    y = g.y[rows][:, None]
    k = 2j * np.pi * np.fft.rfftfreq(g.nx, d=g.dx)
    elems = pair.as_list()
    hats = [[np.fft.rfft(a[rows], axis=1) for a in (e.Vt, e.vt)] for e in elems]
    rho = rho[:, keep]
    cs = (c, -c)

    def F(gm):
        ph = np.exp(k * gm)
        ph[-1] = np.cos(np.pi * gm / g.dx)
        E, vj = [], []
        for e, (Vh, vh), cj in zip(elems, hats, cs):
            Vs = np.fft.irfft(Vh * ph, n=g.nx, axis=1)[:, keep]
            vs = np.fft.irfft(vh * ph, n=g.nx, axis=1)[:, keep]
            E.append(Vs + e.lam * (x + gm) + e.lam**2 * y + cj)
            vj.append(vs + e.lam)
        E = np.stack(E)
        E -= E.max(axis=0)
        z = np.exp(E)
        v = np.sum(z * np.stack(vj), axis=0) / z.sum(axis=0)
        return float(np.sum(rho * v)) * g.dx * g.dy

    half = 0.5 * g.Lx - 3.0
    mid = g.x0 + 0.5 * g.Lx
    lo = max(c - g.Lx / 3.0, mid - half)
    hi = min(c + g.Lx / 3.0, mid + half)
    if lo >= hi or F(lo) * F(hi) > 0:
        raise SolverError("root outside window in the gamma0 map")
    return float(brentq(F, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def gamma0_to_c(pair: ElementaryPair, gamma0: float, tol: float = 1e-12) -> float:
    c0, c1 = gamma0, gamma0 + 0.1
    g0 = c_to_gamma0(pair, c0) - gamma0
    if abs(g0) < tol:
        return c0
    g1 = c_to_gamma0(pair, c1) - gamma0
    for _ in range(50):
        if g1 == g0:
            break
        c2 = c1 - g1 * (c1 - c0) / (g1 - g0)
        c0, g0 = c1, g1
        c1 = c2
        g1 = c_to_gamma0(pair, c1) - gamma0
        if abs(g1) < tol or abs(c1 - c0) < tol:
            return c1
    if abs(g1) > 1e-8:
        raise SolverError("secant iteration for c did not converge")
    return c1


def param_map(direction: str, pair: ElementaryPair, value: float) -> float:
    if direction == "c_to_gamma0":
        return c_to_gamma0(pair, value)
    if direction == "gamma0_to_c":
        return gamma0_to_c(pair, value)
    raise GridError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------- addition maps

@dataclass
class BacklundOutput:
    u_bar: Field2D
    v: Field2D
    alpha: ShiftCurve
    omega: Field2D
    c: float
    gamma0: float
    pair: ElementaryPair | None = None


def u_bar_for_c(pair: ElementaryPair, c: float) -> np.ndarray:
    _, vx, _ = _superpose(pair.as_list(), (c, -c), pair.u.grid)
    return pair.u.values - 2.0 * vx


def soliton_add(u: Field2D, gamma0: float, opts: SolveOptions = SolveOptions(),
                pair: ElementaryPair | None = None, decompose: bool = True) -> BacklundOutput:
    if pair is None:
        pair = elementary_pair(u, opts)
    c = gamma0_to_c(pair, gamma0)
    g = u.grid
    v, vx, _ = _superpose(pair.as_list(), (c, -c), g)
    vf = Field2D(g, v, meta="kink")
    ubar = Field2D(g, u.values - 2.0 * vx)
    if decompose:
        omega, alpha = modulated_decompose(vf, pair)
    else:
        omega, alpha = Field2D(g, np.zeros(g.shape)), ShiftCurve.constant(g, c)
    return BacklundOutput(ubar, vf, alpha, omega, c, float(gamma0), pair)


def multisoliton_add(u: Field2D, spec: MultiSpec, opts: SolveOptions = SolveOptions(),
                     elems: list[Elementary] | None = None) -> Field2D:
    if elems is None:
        elems = [elementary(u, lam, opts) for lam in spec.lambdas]
    _, vx, _ = _superpose(elems, spec.cs, u.grid)
    return Field2D(u.grid, u.values - 2.0 * vx)


def lax_residual(pair_or_elems, cs, u: Field2D, margin: float = 0.25) -> float:
    """Relative interior residual of (d_y - d_xx + u) psi = 0 for psi = exp(V).

    Divided by psi this reads V_y - V_xx - V_x^2 + u.  V_x and V_xx come from
    the exact log-sum-exp identities (V_x = v, V_xx = v_x); V_y is taken by
    sixth-order differences, so the check exercises the y-structure built by
    the marching solver.
    """
    from . import fd

    elems = pair_or_elems.as_list() if isinstance(pair_or_elems, ElementaryPair) else list(pair_or_elems)
    g = u.grid
    X, Y = g.mesh()
    E = np.stack([e.Vt + e.lam * X + e.lam**2 * Y + c for e, c in zip(elems, cs)])
    mx = E.max(axis=0)
    V = mx + np.log(np.sum(np.exp(E - mx), axis=0))
    v, vx, _ = _superpose(elems, cs, g)
    r = fd.d1(V, g.dy, 0) - vx - v**2 + u.values
    jy, jx = int(g.ny * margin), int(g.nx * margin)
    scale = np.sqrt(np.sum(u.values[jy:-jy, jx:-jx] ** 2)) or 1.0
    return float(np.sqrt(np.sum(r[jy:-jy, jx:-jx] ** 2)) / scale)
