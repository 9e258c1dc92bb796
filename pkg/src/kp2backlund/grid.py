"""Uniform grids on a truncated (x, y) window, gridded fields, quadrature and norms."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EDGE_TOL = 1e-6
EDGE_COLS = 2


class GridError(ValueError):
    """Raised on invalid grid parameters or fields violating a precondition."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    Lx: float
    Ly: float
    x0: float
    y0: float

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / self.ny

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (X, Y) arrays of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y)

    @property
    def xi(self) -> np.ndarray:
        """Ordinary x-frequencies (cycles per unit length) in FFT order."""
        return np.fft.fftfreq(self.nx, d=self.dx)

    @property
    def eta(self) -> np.ndarray:
        return np.fft.fftfreq(self.ny, d=self.dy)

    def row_index(self, y: float) -> int:
        return int(round((y - self.y0) / self.dy))

    def col_index(self, x: float) -> int:
        return int(round((x - self.x0) / self.dx))


def make_grid(nx: int, ny: int, Lx: float, Ly: float, x0: float, y0: float) -> Grid2D:
    for name, n in (("nx", nx), ("ny", ny)):
        if int(n) != n or not _is_pow2(int(n)):
            raise GridError(f"{name} not power of two")
        if n < 16:
            raise GridError(f"{name} must be at least 16")
    if not (Lx > 0 and Ly > 0):
        raise GridError("window lengths must be positive")
    return Grid2D(int(nx), int(ny), float(Lx), float(Ly), float(x0), float(y0))


def default_grid() -> Grid2D:
    return make_grid(512, 512, 40.0, 40.0, -20.0, -20.0)


@dataclass(frozen=True)
class Field2D:
    """Real samples on a grid, stored as an array of shape (ny, nx).

    ``meta`` records an additive non-decaying background: ``"none"``,
    ``"constant(lam)"``, ``"kink"`` or ``"multikink"``.
    """

    grid: Grid2D
    values: np.ndarray
    meta: str = "none"

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            if vals.size != self.grid.nx * self.grid.ny:
                raise GridError("values size does not match grid")
            vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, meta: str | None = None) -> "Field2D":
        return Field2D(self.grid, values, self.meta if meta is None else meta)

    def __add__(self, other):
        if isinstance(other, Field2D):
            _same_grid(self, other)
            return Field2D(self.grid, self.values + other.values, "none")
        return Field2D(self.grid, self.values + other, "none")

    def __sub__(self, other):
        if isinstance(other, Field2D):
            _same_grid(self, other)
            return Field2D(self.grid, self.values - other.values, "none")
        return Field2D(self.grid, self.values - other, "none")

    def __mul__(self, s: float):
        return Field2D(self.grid, self.values * s, "none")

    __rmul__ = __mul__

    def __neg__(self):
        return Field2D(self.grid, -self.values, "none")


def zeros(grid: Grid2D) -> Field2D:
    return Field2D(grid, np.zeros(grid.shape))


def _same_grid(a: Field2D, b: Field2D) -> None:
    if a.grid != b.grid:
        raise GridError("fields live on different grids")


@dataclass
class ShiftCurve:
    """A real function of y sampled on a grid's y-axis."""

    y: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.y.shape:
            raise GridError("curve length does not match its y-axis")
        if not np.all(np.isfinite(self.values)):
            raise GridError("curve contains non-finite values")

    @classmethod
    def constant(cls, grid: Grid2D, c: float = 0.0) -> "ShiftCurve":
        return cls(grid.y, np.full(grid.ny, float(c)))


@dataclass(frozen=True)
class NormReport:
    l2: float
    l3: float
    linf: float
    h_minus_half_zero: float
    weighted_sech2_l2: float
    integral: float = field(default=0.0)


def edge_excess(values: np.ndarray, tol: float = EDGE_TOL, cols: int = EDGE_COLS) -> float:
    """Largest edge magnitude relative to the field's sup norm (0 for zero fields)."""
    scale = float(np.max(np.abs(values)))
    if scale == 0.0:
        return 0.0
    edge = max(np.max(np.abs(values[..., :cols])), np.max(np.abs(values[..., -cols:])))
    return float(edge) / scale


def check_decaying(f: Field2D | np.ndarray, tol: float = EDGE_TOL, what: str = "field") -> None:
    vals = f.values if isinstance(f, Field2D) else np.asarray(f)
    if edge_excess(vals) >= tol:
        raise GridError(f"{what} does not decay at the x-edges (edge tolerance exceeded)")


def dx_spectral(values: np.ndarray, dx: float, order: int = 1) -> np.ndarray:
    """Spectral x-derivative of a periodic/decaying array along its last axis."""
    n = values.shape[-1]
    k = 2j * np.pi * np.fft.rfftfreq(n, d=dx)
    if order % 2 == 1 and n % 2 == 0:
        k = k.copy()
        k[-1] = 0.0
    return np.fft.irfft(np.fft.rfft(values, axis=-1) * k**order, n=n, axis=-1)


def x_antiderivative(f: Field2D, mode: str = "mean_free_spectral") -> Field2D:
    g = f.grid
    if mode == "mean_free_spectral":
        fh = np.fft.rfft(f.values, axis=-1)
        k = 2j * np.pi * np.fft.rfftfreq(g.nx, d=g.dx)
        k[0] = 1.0
        fh = fh / k
        fh[..., 0] = 0.0
        if g.nx % 2 == 0:
            fh[..., -1] = 0.0
        return Field2D(g, np.fft.irfft(fh, n=g.nx, axis=-1))
    if mode == "cumulative_from_left":
        check_decaying(f)
        v = f.values
        out = np.zeros_like(v)
        out[:, 1:] = np.cumsum(0.5 * (v[:, 1:] + v[:, :-1]), axis=-1) * g.dx
        return Field2D(g, out)
    raise GridError(f"unknown antiderivative mode {mode!r}")


def integrate(f: Field2D | np.ndarray, grid: Grid2D | None = None) -> float:
    if isinstance(f, Field2D):
        grid, vals = f.grid, f.values
    else:
        vals = np.asarray(f)
    return float(np.sum(vals) * grid.dx * grid.dy)


def l2(values: np.ndarray, grid: Grid2D) -> float:
    return float(np.sqrt(np.sum(values**2) * grid.dx * grid.dy))


def integrate_and_norms(f: Field2D) -> NormReport:
    g = f.grid
    v = f.values
    w = g.dx * g.dy
    fh = np.fft.rfft(v - v.mean(axis=-1, keepdims=True), axis=-1)
    # per-row Parseval with rfft weights: interior bins count twice
    xi = np.abs(np.fft.rfftfreq(g.nx, d=g.dx))
    wts = np.full(xi.shape, 2.0)
    wts[0] = 0.0
    if g.nx % 2 == 0:
        wts[-1] = 1.0
    xi[0] = 1.0
    hmh = np.sum(wts * np.abs(fh) ** 2 / (2 * np.pi * xi)) * g.dx / g.nx * g.dy
    sech2 = 1.0 / np.cosh(g.x) ** 2
    return NormReport(
        l2=float(np.sqrt(np.sum(v**2) * w)),
        l3=float(np.sum(np.abs(v) ** 3) * w) ** (1.0 / 3.0),
        linf=float(np.max(np.abs(v))),
        h_minus_half_zero=float(np.sqrt(hmh)),
        weighted_sech2_l2=float(np.sqrt(np.sum(sech2 * v**2) * w)),
        integral=float(np.sum(v) * w),
    )


def l2_parseval(f: Field2D) -> float:
    g = f.grid
    fh = np.fft.fft2(f.values)
    return float(np.sqrt(np.sum(np.abs(fh) ** 2) / (g.nx * g.ny) * g.dx * g.dy))


def interior_mask(grid: Grid2D, margin: float = 0.25) -> tuple[slice, slice]:
    """Row/column slices excluding a fraction ``margin`` of the window on each side."""
    jy = int(grid.ny * margin)
    jx = int(grid.nx * margin)
    return slice(jy, grid.ny - jy), slice(jx, grid.nx - jx)
