"""Solvers for the Miura equation v_y - v_xx = (v^2)_x - u_x.

Elementary solutions near a constant lam are found by Picard iteration of
``vt <- Gamma^(-2 lam) d_x (vt^2 - u)`` on an x-extended periodic domain.
Kink initial value problems are marched with ETDRK4 about the tanh background.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import EDGE_TOL, Field2D, Grid2D, GridError, edge_excess, integrate_and_norms, l2
from .heat import XExtension, extension_for, march_modes, phi_functions, symbol
from .profiles import mollifier_values, sech2

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Numerical-regime failure: guard trip, divergence, instability."""


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-11
    max_iter: int = 200
    smallness_guard: float = 0.1

    def __post_init__(self):
        if not self.tol > 0 or self.max_iter < 1:
            raise GridError("tol must be positive and max_iter at least 1")


@dataclass(frozen=True)
class ElementaryReport:
    iterations: int
    residual_l2: float
    converged: bool
    increments: tuple = ()


@dataclass
class ElementarySolution:
    """Elementary solution vt = v - lam together with its x-derivative and primitive."""

    lam: float
    u: Field2D
    vtilde: Field2D
    vtilde_x: Field2D
    report: ElementaryReport
    ext: XExtension = field(repr=False)
    vt_ext: np.ndarray = field(repr=False)

    def __iter__(self):
        # allows ``vt, report = solve_elementary(...)``
        yield self.vtilde
        yield self.report

    @property
    def v(self) -> Field2D:
        return Field2D(self.vtilde.grid, self.vtilde.values + self.lam, meta=f"constant({self.lam:g})")


def check_small(u: Field2D, guard: float) -> float:
    s = integrate_and_norms(u).h_minus_half_zero
    if s > guard:
        raise SolverError(f"smallness guard: h_minus_half_zero(u) = {s:.3g} exceeds {guard:g}")
    return s


def _l3(a: np.ndarray) -> float:
    return float(np.sum(np.abs(a) ** 3)) ** (1.0 / 3.0)


def solve_elementary(u: Field2D, lam: float, opts: SolveOptions = SolveOptions()) -> ElementarySolution:
    if edge_excess(u.values) >= EDGE_TOL:
        raise GridError("u does not decay at the x-edges")
    check_small(u, opts.smallness_guard)
    g = u.grid
    ext = extension_for(g, 2.0 * abs(lam))
    m = symbol(ext, -2.0 * lam)
    ik = ext.dx_hat(1)
    uh = ext.rfft(ext.embed(u.values))

    def step(vt):
        src = ik * (ext.rfft(vt * vt) - uh)
        return ext.irfft(march_modes(src, m, ext.dy))

    vt = np.zeros((g.ny, ext.nx))
    incs: list[float] = []
    grow = 0
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        new = step(vt)
        nrm = _l3(new)
        inc = _l3(new - vt) / nrm if nrm > 0 else 0.0
        vt = new
        incs.append(inc)
        if len(incs) > 1 and inc > incs[-2]:
            grow += 1
            if grow >= 5:
                raise SolverError("diverged: Picard increment grew for 5 consecutive iterations")
        else:
            grow = 0
        if inc <= opts.tol:
            converged = True
            break
    if not converged:
        raise SolverError(f"diverged: no convergence in {opts.max_iter} iterations")
    defect = step(vt) - vt
    resid = l2(ext.crop(defect), g)
    vx = ext.irfft(ext.rfft(vt) * ik)
    log.debug("elementary lam=%g: %d iterations, defect %.3g", lam, it, resid)
    rep = ElementaryReport(it, resid, True, tuple(incs))
    return ElementarySolution(lam, u, Field2D(g, ext.crop(vt)), Field2D(g, ext.crop(vx)), rep, ext, vt)


def build_primitive(sol: ElementarySolution) -> Field2D:
    """Normalized primitive Vt with d_x Vt = vt and int (Vt + lam x + lam^2 y) rho = 0.

    Vt solves Vt_y - Vt_xx - 2 lam Vt_x = vt^2 - u, so it is the same kernel
    applied to vt^2 - u, zero x-mode included.
    """
    ext = sol.ext
    g = sol.u.grid
    uh = ext.rfft(ext.embed(sol.u.values))
    src = ext.rfft(sol.vt_ext**2) - uh
    V = ext.crop(ext.irfft(march_modes(src, symbol(ext, -2.0 * sol.lam), ext.dy)))
    X, Y = g.mesh()
    rho = mollifier_values(g)
    shift = np.sum((V + sol.lam * X + sol.lam**2 * Y) * rho) * g.dx * g.dy
    return Field2D(g, V - shift)


def elementary_pde_residual(sol: ElementarySolution, margin: float = 0.25) -> float:
    """Finite-difference residual of vt_y - vt_xx - 2 lam vt_x - (vt^2)_x + u_x on the interior."""
    from . import fd

    g = sol.u.grid
    v = sol.vtilde.values
    u = sol.u.values
    r = fd.d1(v, g.dy, 0) - fd.d2(v, g.dx, 1) - 2 * sol.lam * fd.d1(v, g.dx, 1) - fd.d1(v * v, g.dx, 1) + fd.d1(u, g.dx, 1)
    jy, jx = int(g.ny * margin), int(g.nx * margin)
    return float(np.sqrt(np.sum(r[jy:-jy, jx:-jx] ** 2) * g.dx * g.dy))


# ---------------------------------------------------------------- ETDRK4

class ETDRK4:
    """Exponential RK4 (Cox-Matthews) for diagonal linear part m over step h."""

    def __init__(self, m: np.ndarray, h: float):
        self.h = h
        ph = phi_functions(m * h, 3)
        half = phi_functions(m * h / 2, 1)
        self.E, self.E2 = ph[0], half[0]
        self.Q = 0.5 * h * half[1]
        self.f1 = h * (ph[1] - 3 * ph[2] + 4 * ph[3])
        self.f2 = h * (ph[2] - 2 * ph[3])
        self.f3 = h * (-ph[2] + 4 * ph[3])

    def step(self, w, y, N):
        h = self.h
        Nw = N(w, y)
        a = self.E2 * w + self.Q * Nw
        Na = N(a, y + h / 2)
        b = self.E2 * w + self.Q * Na
        Nb = N(b, y + h / 2)
        c = self.E2 * a + self.Q * (2 * Nb - Nw)
        Nc = N(c, y + h)
        return self.E * w + self.f1 * Nw + 2 * self.f2 * (Na + Nb) + self.f3 * Nc


def row_interpolator(rows: np.ndarray, y0: float, dy: float):
    """Cubic Lagrange interpolation in y of row data (first axis), fourth order."""
    n = rows.shape[0]

    def at(y: float) -> np.ndarray:
        t = (y - y0) / dy
        k = int(np.floor(t + 1e-9))
        k = min(max(k, 0), n - 1)
        if abs(t - k) < 1e-9:
            return rows[k]
        base = min(max(k - 1, 0), n - 4)
        s = t - base
        out = 0.0
        for j in range(4):
            w = 1.0
            for i in range(4):
                if i != j:
                    w *= (s - i) / (j - i)
            out = out + w * rows[base + j]
        return out

    return at


def solve_kink_ivp(v0: np.ndarray, u: Field2D, y_span: tuple[float, float], substeps: int = 1,
                   edge_tol: float = EDGE_TOL) -> Field2D:
    """March v = tanh + z from the row at y_span[0] to the row at y_span[1].

    z_y = z_xx + (2 tanh z + z^2)_x - u_x; tanh itself is an exact steady state.
    Returns a Field2D on the rows of u's grid in the span (rows outside are NaN-free zeros
    replaced by the tanh background).
    """
    g = u.grid
    j0, j1 = g.row_index(y_span[0]), g.row_index(y_span[1])
    if not 0 <= j0 < j1 < g.ny:
        raise GridError("y_span outside the grid")
    z0 = np.asarray(v0, dtype=np.float64) - np.tanh(g.x)
    if edge_excess(z0, edge_tol) >= edge_tol and np.max(np.abs(z0)) > 1e-14:
        raise GridError("v0 - tanh does not decay at the x-edges")
    if edge_excess(u.values) >= EDGE_TOL:
        raise GridError("u does not decay at the x-edges")
    ext = extension_for(g, 2.0, (j1 - j0) * g.dy)
    th = np.tanh(ext.x)
    ik = ext.dx_hat(1)
    ux = ext.irfft(ext.rfft(ext.embed(u.values)) * ik)
    uxi = row_interpolator(ux, g.y0, g.dy)
    h = g.dy / substeps
    lin = ETDRK4(-ext.k**2 + 0j, h)

    def N(zh, y):
        z = ext.irfft(zh)
        return ik * ext.rfft(2 * th * z + z * z) - ext.rfft(uxi(y))

    out = np.tile(np.tanh(g.x), (g.ny, 1))
    zh = ext.rfft(ext.embed(z0))
    out[j0] = np.tanh(g.x) + z0
    y = g.y[j0]
    for j in range(j0 + 1, j1 + 1):
        for _ in range(substeps):
            zh = lin.step(zh, y, N)
            y += h
        z = ext.irfft(zh)
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > 1e6:
            raise SolverError("kink IVP unstable: linf growth above 1e6")
        out[j] = np.tanh(g.x) + ext.crop(z)
    return Field2D(g, out, meta="kink")


# ---------------------------------------------------------------- sech^2 decomposition

def sech2_decompose(v: np.ndarray, x: np.ndarray, guard: float = 0.3) -> tuple[np.ndarray, float]:
    """Split v = tanh(x - beta) + w with int w sech^2(x - beta) dx = 0."""
    from scipy.optimize import brentq

    dx = x[1] - x[0]
    v = np.asarray(v, dtype=np.float64)

    def dist(gm):
        return np.sqrt(np.sum((v - np.tanh(x - gm)) ** 2) * dx)

    # centre estimate from the mass balance of v against sign(x)
    mid = x[0] + 0.5 * (x[-1] - x[0] + dx)
    gm0 = mid - np.sum(v) * dx / 2.0
    if dist(gm0) > guard:
        grid_g = np.linspace(x[0] + 2, x[-1] - 2, 161)
        gm0 = grid_g[np.argmin([dist(t) for t in grid_g])]
        if dist(gm0) > guard:
            raise SolverError("not near kink family (theta0 guard)")

    def F(b):
        return np.sum((v - np.tanh(x - b)) * sech2(x - b)) * dx

    lo, hi = gm0 - 1.0, gm0 + 1.0
    if F(lo) * F(hi) > 0:
        raise SolverError("no root in window")
    beta = brentq(F, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    # Newton polish with the analytic slope
    for _ in range(3):
        s = x - beta
        dF = np.sum(sech2(s) ** 2 + (v - np.tanh(s)) * 2 * sech2(s) * np.tanh(s)) * dx
        beta -= F(beta) / dF
    return v - np.tanh(x - beta), float(beta)
