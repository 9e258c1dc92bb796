"""Heat-in-x, marching-in-y kernels and the transport kernels built from them.

All kernels solve ``w_y = w_xx - c w_x + f`` from ``w = 0`` below the bottom row.
Each x-Fourier mode is advanced exactly; the source is integrated against the
exponential with a cubic interpolant in y (fourth order).  Fields are embedded
in a wider periodic x-domain so that drift and spreading never wrap around
into the window.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .grid import Field2D, Grid2D, GridError, check_decaying
from .profiles import eta, sech2


# ---------------------------------------------------------------- phi-functions

def phi_functions(z: np.ndarray, kmax: int = 4) -> list[np.ndarray]:
    """Return [phi_0, ..., phi_kmax] evaluated at complex z.

    phi_0 = e^z and phi_{k+1}(z) = (phi_k(z) - 1/k!)/z; small |z| by Taylor series.
    """
    z = np.asarray(z, dtype=np.complex128)
    out = [np.exp(z)]
    small = np.abs(z) < 1.0
    zs = np.where(small, z, 0.0)
    zb = np.where(small, 1.0, z)
    for k in range(1, kmax + 1):
        rec = (out[k - 1] - 1.0 / factorial(k - 1)) / zb
        ser = np.zeros_like(zs)
        term = np.full_like(zs, 1.0 / factorial(k))
        for j in range(1, 30):
            ser = ser + term
            term = term * zs / (j + k)
        out.append(np.where(small, ser, rec))
    return out


# backward node sets (in units of the step): the step [y_k, y_k+1] only reads
# source rows up to y_k+1, which keeps the kernels causal row by row
_NODESETS = ((0.0, 1.0), (-1.0, 0.0, 1.0), (-2.0, -1.0, 0.0, 1.0))


def _lagrange_monomials(nodes) -> np.ndarray:
    """a[j, n] with l_j(t) = sum_n a[j, n] t^n."""
    nodes = np.asarray(nodes)
    a = np.zeros((len(nodes), len(nodes)))
    for j, tj in enumerate(nodes):
        others = np.delete(nodes, j)
        p = np.poly(others) / np.prod(tj - others)
        a[j] = p[::-1]
    return a


def duhamel_weights(m: np.ndarray, h: float):
    """Exponential step and source weights for multipliers m over a step h.

    Returns (E, W) with E = exp(m h) and W[s][j] the weight of node j of
    node set s, so that int_0^h e^{m(h-s)} p(s) ds = sum_j W[s][j] f_j for the
    interpolating polynomial p.
    """
    z = m * h
    ph = phi_functions(z, 4)
    W = []
    for nodes in _NODESETS:
        a = _lagrange_monomials(nodes)
        d = len(nodes)
        W.append([h * sum(a[j, n] * factorial(n) * ph[n + 1] for n in range(d)) for j in range(d)])
    return ph[0], W


def march_modes(src_hat: np.ndarray, m: np.ndarray, h: float, w0: np.ndarray | None = None) -> np.ndarray:
    """Advance w_y = m w + s for every mode, given s at every row (first axis)."""
    ny = src_hat.shape[0]
    E, W = duhamel_weights(m, h)
    out = np.empty_like(src_hat, dtype=np.complex128)
    w = np.zeros(src_hat.shape[1:], dtype=np.complex128) if w0 is None else np.asarray(w0, dtype=np.complex128)
    out[0] = w
    for k in range(ny - 1):
        s = min(k, 2)
        Ws = W[s]
        base = k - s
        acc = E * w
        for j, wt in enumerate(Ws):
            acc = acc + wt * src_hat[base + j]
        w = acc
        out[k + 1] = w
    return out


# ---------------------------------------------------------------- x-extension

@dataclass(frozen=True)
class XExtension:
    """A window grid embedded centrally in an x-periodic domain p times wider."""

    grid: Grid2D
    p: int

    @property
    def nx(self) -> int:
        return self.grid.nx * self.p

    @property
    def dx(self) -> float:
        return self.grid.dx

    @property
    def dy(self) -> float:
        return self.grid.dy

    @property
    def offset(self) -> int:
        return (self.p - 1) * self.grid.nx // 2

    @property
    def x(self) -> np.ndarray:
        return self.grid.x0 + self.dx * (np.arange(self.nx) - self.offset)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers 2*pi*xi for the rfft of the extended rows."""
        return 2 * np.pi * np.fft.rfftfreq(self.nx, d=self.dx)

    def embed(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.float64)
        out = np.zeros(a.shape[:-1] + (self.nx,))
        out[..., self.offset:self.offset + self.grid.nx] = a
        return out

    def crop(self, a: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(a[..., self.offset:self.offset + self.grid.nx])

    def rfft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfft(a, axis=-1)

    def irfft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.irfft(a, n=self.nx, axis=-1)

    def dx_hat(self, order: int = 1) -> np.ndarray:
        k = 1j * self.k
        if order % 2 == 1:
            k = k.copy()
            k[-1] = 0.0
        return k**order


def pad_factor(grid: Grid2D, speed: float, y_span: float | None = None) -> int:
    """Smallest power of two p so that mass starting in the window cannot wrap in."""
    span = grid.Ly if y_span is None else y_span
    reach = abs(speed) * span + 6.0 * np.sqrt(span) + 0.25 * grid.Lx
    p = 1
    while (p - 1) * grid.Lx / 2 < reach:
        p *= 2
    return p


@lru_cache(maxsize=16)
def extension_for(grid: Grid2D, speed: float, y_span: float | None = None) -> XExtension:
    return XExtension(grid, pad_factor(grid, speed, y_span))


def symbol(ext: XExtension, c: float) -> np.ndarray:
    """Multiplier of d_x^2 - c d_x on the extended rfft modes."""
    k = ext.k
    return -k**2 - 1j * c * k


# ---------------------------------------------------------------- slice step

def propagate_slice(w: np.ndarray, c: float, dy: float, source: tuple[np.ndarray, np.ndarray] | None, dx: float) -> np.ndarray:
    """One exact-exponential step of w_y = w_xx - c w_x + f with an ETD2 source rule.

    ``source`` holds f at the start and the end of the step.
    """
    if not dy > 0:
        raise GridError("step must be positive")
    n = w.shape[-1]
    k = 2 * np.pi * np.fft.fftfreq(n, d=dx)
    m = -k**2 - 1j * c * k
    ph = phi_functions(m * dy, 2)
    wh = np.fft.fft(w)
    out = ph[0] * wh
    if source is not None:
        f0, f1 = (np.fft.fft(s) for s in source)
        out = out + dy * ((ph[1] - ph[2]) * f0 + ph[2] * f1)
    res = np.fft.ifft(out)
    return res.real if np.isrealobj(w) and (source is None or all(np.isrealobj(s) for s in source)) else res


# ---------------------------------------------------------------- kernels

def gamma_ext(c: float, src: np.ndarray, ext: XExtension, src_is_hat: bool = False, hat_out: bool = False) -> np.ndarray:
    """Duhamel solution on the extended domain; src has shape (ny, ext.nx)."""
    sh = src if src_is_hat else ext.rfft(src)
    out = march_modes(sh, symbol(ext, c), ext.dy)
    return out if hat_out else ext.irfft(out)


def antideriv_source(src: np.ndarray, ext: XExtension) -> np.ndarray:
    """Row antiderivative anchored at x = 0 in the sense of int_0^x of the kernel.

    Integrating the kernel's antiderivative int_0^{x} G against f equals applying
    the kernel to F - m/2, where F is the running integral from the far left and
    m the row mass.  F is computed spectrally on the mean-free part plus a
    smoothed step for the mass, which avoids trapezoid error.
    """
    n = ext.nx
    fh = np.fft.rfft(src, axis=-1)
    mass = fh[:, 0].real * ext.dx
    k = ext.k.copy()
    k[0] = 1.0
    gh = fh / (1j * k)
    gh[:, 0] = 0.0
    gh[:, -1] = 0.0
    F = np.fft.irfft(gh, n=n, axis=-1)
    # mean-free antiderivative of f - mean is F_true - mass*(x - x_l)/L + const;
    # add the linear ramp back and fix the constant by the far-left value 0
    L = n * ext.dx
    xr = ext.dx * np.arange(n)
    F = F + mass[:, None] * xr[None, :] / L
    F = F - F[:, :1]
    return F - 0.5 * mass[:, None]


def apply_gamma(c: float, f: Field2D, antideriv: bool = False, ext: XExtension | None = None) -> Field2D:
    check_decaying(f, what="source")
    if ext is None:
        ext = extension_for(f.grid, max(abs(c), 2.0 if antideriv else abs(c)))
    src = ext.embed(f.values)
    if antideriv:
        src = antideriv_source(src, ext)
    return Field2D(f.grid, ext.crop(gamma_ext(c, src, ext)))


def ktr_ext(sign: str, src: np.ndarray, ext: XExtension) -> np.ndarray:
    """K_tr+ or K_tr- applied on the extended domain."""
    x = ext.x[None, :]
    ep, em = eta(x, 1), eta(x, -1)
    if sign == "plus":
        out = gamma_ext(2.0, ep * src, ext) + gamma_ext(-2.0, em * src, ext)
        a = antideriv_source(sech2(x) * src, ext)
        out += 0.5 * (gamma_ext(-2.0, a, ext) - gamma_ext(2.0, a, ext))
        return out
    if sign == "minus":
        return ep * gamma_ext(-2.0, src, ext) + em * gamma_ext(2.0, src, ext)
    raise GridError("sign must be 'plus' or 'minus'")


def apply_Ktr(sign: str, f: Field2D, ext: XExtension | None = None) -> Field2D:
    check_decaying(f, what="source")
    if ext is None:
        ext = extension_for(f.grid, 2.0)
    return Field2D(f.grid, ext.crop(ktr_ext(sign, ext.embed(f.values), ext)))
