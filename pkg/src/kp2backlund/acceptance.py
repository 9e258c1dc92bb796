"""The ten acceptance checks, shared by ``kp2 verify`` and the test suite.

Each check returns a :class:`Check` with a pass flag and the measured
numbers.  ``quick=True`` shortens evolution horizons and ensembles so the
whole table runs in roughly two minutes; thresholds are unchanged.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import fd
from .backlund import MultiSpec, elementary_pair, lax_residual, multisoliton_add, soliton_add
from .diagnostics import (alpha_y_l2, commute_check, l2phi_seminorm, l2phi_seminorm_lbfgs, log_growth,
                          miura_system_residuals, range_necessity)
from .evolve import EvolveOptions, evolve, lab_soliton_speed
from .grid import Field2D, Grid2D, default_grid, interior_mask, l2
from .heat import apply_Ktr
from .miura import elementary_pde_residual, solve_elementary, solve_kink_ivp
from .phi import phi, phi_linear, reflect_y
from .profiles import soliton
from .tau import TauSpec, u_from_tau

# "<~ eps" constant for the decomposition invariants of criterion 10
GROWTH_K = 5.0


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.name}: {self.summary}"


def gauss_dx(grid: Grid2D, eps: float, width2: float = 8.0, xc: float = 0.0, yc: float = 0.0) -> Field2D:
    """eps * d_x exp(-((x-xc)^2 + (y-yc)^2) / width2)."""
    X, Y = grid.mesh()
    r2 = (X - xc) ** 2 + (Y - yc) ** 2
    return Field2D(grid, eps * (-2.0 * (X - xc) / width2) * np.exp(-r2 / width2))


def bump(X, Y, xc, yc, r):
    r2 = ((X - xc) ** 2 + (Y - yc) ** 2) / r**2
    out = np.zeros_like(r2)
    m = r2 < 1
    out[m] = np.exp(-1.0 / (1.0 - r2[m]))
    return out


def random_small_u(grid: Grid2D, rng: np.random.Generator, eps: float) -> Field2D:
    """Sum of three x-derivatives of Gaussians, scaled to linf = eps."""
    X, Y = grid.mesh()
    f = np.zeros(grid.shape)
    for _ in range(3):
        a, b, w = rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(1.5, 2.5)
        s = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
        f += s * (X - a) / w**2 * np.exp(-((X - a) ** 2 + (Y - b) ** 2) / (2 * w**2))
    return Field2D(grid, eps * f / np.abs(f).max())


# ---------------------------------------------------------------- the checks

def check_miura_kink(grid: Grid2D, quick: bool = False) -> Check:
    from .profiles import miura_apply

    X, _ = grid.mesh()
    Q = Field2D(grid, np.tanh(X), meta="kink")
    m = np.abs(miura_apply("minus", 1.0, Q).values).max()
    p = np.abs(miura_apply("plus", 1.0, Q).values - soliton(X)).max()
    ok = m < 1e-8 and p < 1e-8
    return Check(1, "Miura kink identities", ok, f"|M-(Q)|={m:.2e}, |M+(Q)-phi|={p:.2e} (< 1e-8)",
                 {"minus": m, "plus": p})


def check_kernel_inverse(grid: Grid2D, quick: bool = False, seed: int = 0) -> Check:
    rng = np.random.default_rng(seed)
    X, Y = grid.mesh()
    sl = interior_mask(grid)
    errs = []
    for _ in range(5):
        f = sum(rng.normal() * bump(X, Y, rng.uniform(-5, 5), rng.uniform(-8, 0), rng.uniform(2, 4))
                for _ in range(4))
        w = apply_Ktr("plus", Field2D(grid, f)).values
        L = fd.d1(w, grid.dy, 0) - fd.d2(w, grid.dx, 1) + 2.0 * np.tanh(X) * fd.d1(w, grid.dx, 1)
        errs.append(float(np.linalg.norm((L - f)[sl]) / np.linalg.norm(f[sl])))
    worst = max(errs)
    return Check(2, "Kernel right-inverse", worst < 1e-3, f"max rel residual {worst:.2e} over 5 sources (< 1e-3)",
                 {"residuals": errs})


def check_elementary(grid: Grid2D, quick: bool = False) -> Check:
    u = gauss_dx(grid, 0.01, width2=4.0)
    its, res = [], []
    for lam in (1.0, -1.0):
        sol = solve_elementary(u, lam)
        its.append(sol.report.iterations)
        res.append(elementary_pde_residual(sol))
    lax = lax_residual(elementary_pair(u), (0.0, 0.0), u)
    ok = max(its) <= 30 and max(res) < 1e-8 and lax < 1e-5
    return Check(3, "Elementary solver", ok,
                 f"iterations {its} (<= 30), residual {max(res):.2e} (< 1e-8), Lax {lax:.2e} (< 1e-5)",
                 {"iterations": its, "residual": res, "lax": lax})


def check_multikink(grid: Grid2D, quick: bool = False) -> Check:
    x = grid.x
    X, Y = grid.mesh()
    v_exact = (np.exp(X + Y) - np.exp(-X + Y)) / (np.exp(X + Y) + 1.0 + np.exp(-X + Y))
    # start on the grid row nearest y = -8
    j0 = grid.row_index(-8.0)
    y0 = float(grid.y[j0])
    v0 = (np.exp(x + y0) - np.exp(-x + y0)) / (np.exp(x + y0) + 1.0 + np.exp(-x + y0))
    u = Field2D(grid, np.zeros(grid.shape))
    v = solve_kink_ivp(v0, u, (y0, 8.0), edge_tol=1e-4).values
    j1 = grid.row_index(8.0)
    diff = (v - v_exact)[j0:j1 + 1]
    err = float(np.sqrt(np.sum(diff**2) * grid.dx * grid.dy))
    return Check(4, "Multikink oracle", err < 1e-4, f"windowed l2 error {err:.2e} on y in [-8, 8] (< 1e-4)",
                 {"l2_error": err})


def check_tau_backlund(grid: Grid2D, quick: bool = False) -> Check:
    zero = Field2D(grid, np.zeros(grid.shape))
    X, _ = grid.mesh()
    out = {}
    for lams, cs in (((-1.0, 1.0), (0.6, -0.6)), ((-1.0, 0.0, 1.0), (0.3, -0.2, 0.1))):
        ub = multisoliton_add(zero, MultiSpec(np.array(lams), np.array(cs))).values
        ut = u_from_tau(TauSpec(len(lams), 1, np.ones((1, len(lams))), np.array(lams), np.array(cs)), 0.0, grid).values
        out[len(lams)] = float(np.abs(ub - ut).max())
        if len(lams) == 2:
            # e^{-x+y+c1} + e^{x+y+c2} gives a soliton centred at (c1 - c2)/2
            out["sech2"] = float(np.abs(ub - soliton(X - 0.5 * (cs[0] - cs[1]))).max())
    ok = all(v < 1e-9 for v in out.values())
    return Check(5, "tau / Backlund agreement", ok,
                 f"M=2 {out[2]:.1e}, M=3 {out[3]:.1e}, soliton {out['sech2']:.1e} (< 1e-9)", out)


def check_evolver(grid: Grid2D, quick: bool = False) -> Check:
    T = 0.25 if quick else 1.0
    u0 = gauss_dx(grid, 0.01)
    tr = evolve(u0, EvolveOptions(dt=1e-3, T=T, save_every=250))
    drift = abs(tr.l2[-1] - tr.l2[0]) / tr.l2[0]
    X, _ = grid.mesh()
    tr2 = evolve(Field2D(grid, soliton(X + 2.0)), EvolveOptions(dt=1e-3, T=T, save_every=50))
    speed = lab_soliton_speed(tr2)
    ok = drift < 1e-8 and abs(speed - 4.0) < 0.02
    return Check(6, "Evolver conservation and speed", ok,
                 f"T={T:g}: l2 drift {drift:.1e} (< 1e-8), speed {speed:.5f} (4 +- 0.02)",
                 {"drift": drift, "speed": speed, "T": T})


def check_commute(grid: Grid2D, quick: bool = False) -> Check:
    T = 0.1 if quick else 0.25
    ladder = (0.005, 0.01, 0.02)
    reps = {eps: commute_check(gauss_dx(grid, eps), 0.0, T) for eps in ladder}
    mm = {eps: max(r.mismatch) for eps, r in reps.items()}
    sr = [reps[e].speed_residual for e in ladder]
    slope = float(np.polyfit(np.log(ladder), np.log([mm[e] for e in ladder]), 1)[0])
    g0 = abs(reps[0.01].gamma0_fit[0])
    tails = max(max(r.tail) for r in reps.values())
    ok = mm[0.01] < 5e-3 and g0 < 1e-8 and slope <= 1.5 and sr[0] < sr[1] < sr[2]
    return Check(7, "Commuting with the flow", ok,
                 f"T={T:g}: mismatch(0.01) {mm[0.01]:.1e} (< 5e-3), gamma0_fit(0) off by {g0:.0e}, "
                 f"ladder slope {slope:.2f} (<= 1.5), speed residuals " + " < ".join(f"{s:.1e}" for s in sr),
                 {"mismatch": mm, "speed_residual": sr, "slope": slope, "gamma0_fit0": g0,
                  "edge_tail": tails, "T": T})


def check_phi(grid: Grid2D, quick: bool = False) -> Check:
    X, Y = grid.mesh()
    zero = Field2D(grid, np.zeros(grid.shape))
    p0 = phi(zero).value
    z = Field2D(grid, np.exp(-Y**2) / np.cosh(X) ** 2)
    lin = phi_linear(z)
    exact = -2.0 / 3.0 * np.sqrt(np.pi)
    lin_err = abs(lin - exact) / abs(exact)
    eps = 1e-4
    d = (phi(z * eps).value - phi(z * -eps).value) / (2 * eps)
    fd_err = abs(d - lin) / abs(lin)
    h = Field2D(grid, 0.05 * (X + 0.5) * np.exp(-((X - 1) ** 2 + (Y - 2) ** 2) / 3.0))
    r1, r2 = phi(h), phi(reflect_y(h))
    refl = abs(r1.value - r2.value)
    gap = max(r1.consistency_gap, r2.consistency_gap)
    ok = p0 == 0 and fd_err < 1e-4 and refl < 1e-8 and gap < 1e-5 and lin_err < 1e-3
    return Check(8, "Phi functional", ok,
                 f"Phi(0)={p0:g}, FD vs linear {fd_err:.1e} (< 1e-4), reflection {refl:.1e} (< 1e-8), "
                 f"gap {gap:.1e} (< 1e-5), linear value rel err {lin_err:.1e} (< 1e-3)",
                 {"phi0": p0, "fd": fd_err, "reflection": refl, "gap": gap, "linear": lin_err})


def check_range(grid: Grid2D, quick: bool = False) -> Check:
    ladder = (0.005, 0.01, 0.02)
    ratios = [range_necessity(gauss_dx(grid, eps))[0] for eps in ladder]
    ok = max(ratios) < 1e-3 and ratios[0] < ratios[1] < ratios[2]
    return Check(9, "Range necessity", ok, "|Phi(g)|/||g|| = " + ", ".join(f"{r:.1e}" for r in ratios)
                 + " (< 1e-3, increasing with eps)", {"ratios": ratios})


def check_seminorm(grid: Grid2D, quick: bool = False, seed: int = 7) -> Check:
    rng = np.random.default_rng(seed)
    eps = 0.01
    n = 4 if quick else 10
    ratios, rowint, ay, lg, agree, resid = [], [], [], [], [], []
    for _ in range(n):
        u = random_small_u(grid, rng, eps)
        out = soliton_add(u, 0.0)
        sn = l2phi_seminorm(out.u_bar)
        alt = l2phi_seminorm_lbfgs(out.u_bar)
        nu = l2(u.values, grid)
        ratios.append(sn.value / nu)
        agree.append(abs(sn.value - alt) / sn.value)
        rowint.append(float(np.abs(out.omega.values.sum(axis=1) * grid.dx).max()))
        ay.append(alpha_y_l2(out.alpha) / eps)
        lg.append(log_growth(out.alpha) / eps)
        resid.append(miura_system_residuals(u, out.v, out.u_bar, out.alpha).max())
    ok = (0.1 <= min(ratios) and max(ratios) <= 10 and max(rowint) < 1e-10
          and max(ay) <= GROWTH_K and max(lg) <= GROWTH_K)
    return Check(10, "L2_phi equivalence", ok,
                 f"{n} runs: ratio in [{min(ratios):.3f}, {max(ratios):.3f}] (within [0.1, 10]), "
                 f"row integral {max(rowint):.0e}, |alpha_y|/eps {max(ay):.2f}, log-growth/eps {max(lg):.2f} "
                 f"(<= {GROWTH_K:g})",
                 {"ratios": ratios, "optimizer_gap": agree, "row_integral": rowint, "alpha_y": ay,
                  "log_growth": lg, "miura_residual": resid})


CHECKS = (check_miura_kink, check_kernel_inverse, check_elementary, check_multikink, check_tau_backlund,
          check_evolver, check_commute, check_phi, check_range, check_seminorm)


def run_one(fn, grid: Grid2D | None = None, quick: bool = False) -> Check:
    grid = default_grid() if grid is None else grid
    t = time.perf_counter()
    c = fn(grid, quick=quick)
    c.seconds = time.perf_counter() - t
    return c


def run_suite(quick: bool = False, grid: Grid2D | None = None, echo=None) -> list[Check]:
    out = []
    for fn in CHECKS:
        c = run_one(fn, grid, quick)
        out.append(c)
        if echo is not None:
            echo(c.line())
    return out


__all__ = ["Check", "CHECKS", "run_suite", "run_one", "gauss_dx", "random_small_u"]
