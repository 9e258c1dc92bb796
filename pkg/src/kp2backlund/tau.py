"""Exact multisoliton fields u = -2 d_x^2 log tau from Wronskian tau functions.

With f_n = sum_m A[n, m] exp(theta_m), the Cauchy-Binet formula gives

    tau = sum_I  Delta_I(A) * V_I(lambda) * exp(sum_{m in I} theta_m),

a sum over N-subsets I of positive terms (Delta_I >= 0, V_I the Vandermonde
product).  Hence log tau is a log-sum-exp and d_x^2 log tau is the variance of
Lambda_I = sum_{m in I} lambda_m under the normalized weights, which is exact
and overflow-free.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .grid import Field2D, Grid2D, GridError


class TauSpecError(ValueError):
    pass


@dataclass(frozen=True)
class TauSpec:
    M: int
    N: int
    A: np.ndarray
    lambdas: np.ndarray
    theta0: np.ndarray = field(default=None)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        lam = np.asarray(self.lambdas, dtype=np.float64)
        th = np.zeros(self.M) if self.theta0 is None else np.asarray(self.theta0, dtype=np.float64)
        if not 0 < self.N < self.M:
            raise TauSpecError("need 0 < N < M")
        if A.shape != (self.N, self.M) or lam.shape != (self.M,) or th.shape != (self.M,):
            raise TauSpecError("shape mismatch between M, N, A, lambdas and theta0")
        if np.any(np.diff(lam) <= 0):
            raise TauSpecError("lambdas must be strictly increasing")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "theta0", th)


@dataclass
class Classification:
    valid: bool
    label: tuple[int, int]
    minors: dict
    offending: tuple | None = None
    rank: int = 0
    message: str = ""


def minors(A: np.ndarray) -> dict:
    N, M = A.shape
    return {I: float(np.linalg.det(A[:, I])) for I in combinations(range(M), N)}


def validate_spec(spec: TauSpec, tol: float = 1e-12) -> Classification:
    mins = minors(spec.A)
    scale = max(max(abs(v) for v in mins.values()), 1e-300)
    rank = int(np.linalg.matrix_rank(spec.A))
    label = (spec.M - spec.N, spec.N)
    if rank < spec.N:
        return Classification(False, label, mins, None, rank, "rank deficient")
    for I, d in mins.items():
        if d < -tol * scale:
            return Classification(False, label, mins, I, rank, f"negative minor on columns {I}: {d:.6g}")
    msg = "Miles resonance" if label == (2, 1) and spec.M == 3 else ""
    return Classification(True, label, mins, None, rank, msg)


def _terms(spec: TauSpec):
    lam = spec.lambdas
    out = []
    for I, d in minors(spec.A).items():
        if d <= 0:
            continue
        V = np.prod([lam[j] - lam[i] for i, j in combinations(I, 2)]) if len(I) > 1 else 1.0
        out.append((np.array(I), np.log(d) + np.log(V)))
    return out


def _log_weights(spec: TauSpec, x, y, t):
    th = (spec.lambdas[:, None, None] * x + spec.lambdas[:, None, None] ** 2 * y
          - 4.0 * spec.lambdas[:, None, None] ** 3 * t + spec.theta0[:, None, None])
    terms = _terms(spec)
    if not terms:
        raise TauSpecError("tau vanishes identically")
    W = np.stack([c + th[I].sum(axis=0) for I, c in terms])
    L = np.array([spec.lambdas[I].sum() for I, _ in terms])
    return W, L


def log_tau_derivatives(spec: TauSpec, x, y, t: float = 0.0):
    """Return (log tau, d_x log tau, d_x^2 log tau) on broadcast arrays x, y."""
    x, y = np.broadcast_arrays(np.atleast_2d(x), np.atleast_2d(y))
    W, L = _log_weights(spec, x, y, t)
    mx = W.max(axis=0)
    z = np.exp(W - mx)
    s = z.sum(axis=0)
    z /= s
    m1 = np.tensordot(L, z, axes=1)
    m2 = np.tensordot(L**2, z, axes=1)
    return mx + np.log(s), m1, np.maximum(m2 - m1**2, 0.0)


def u_from_tau(spec: TauSpec, t: float, grid: Grid2D) -> Field2D:
    cl = validate_spec(spec)
    if not cl.valid:
        raise TauSpecError(f"invalid spec: {cl.message}")
    X, Y = grid.mesh()
    _, _, d2 = log_tau_derivatives(spec, X, Y, t)
    return Field2D(grid, -2.0 * d2)


def tau_wronskian(spec: TauSpec, x: float, y: float, t: float = 0.0) -> float:
    """Direct Wronskian determinant at one point (no rescaling); for checks only."""
    lam = spec.lambdas
    e = np.exp(lam * x + lam**2 * y - 4 * lam**3 * t + spec.theta0)
    W = np.array([[np.sum(spec.A[n] * lam**i * e) for n in range(spec.N)] for i in range(spec.N)])
    return float(np.linalg.det(W))


def reflect_spec(spec: TauSpec) -> TauSpec:
    """Spec whose field is the y-reflection u(x, -y, t) of spec's field.

    The reflected tau uses lambda' = -reversed(lambda) and the complementary
    N' = M - N subsets.  Its Plucker weights are Delta_I * prod_{a in I} D_a with
    D_a = prod_{k != a} |lambda_a - lambda_k|, realized by the orthogonal
    complement of the row space of A diag(D).  The phases flip sign: the
    complement's exp(-sum_{I^c} theta0) equals exp(sum_I theta0) up to a global
    factor, which leaves u unchanged.
    """
    lam = spec.lambdas
    M, N = spec.M, spec.N
    D = np.array([np.prod([abs(lam[a] - lam[k]) for k in range(M) if k != a]) for a in range(M)])
    AD = spec.A * D[None, :]
    _, _, vt = np.linalg.svd(AD)
    B = vt[N:]
    B = B[:, ::-1]
    for signs in (np.ones(M), (-1.0) ** np.arange(M)):
        C = B * signs[None, :]
        mins = np.array(list(minors(C).values()))
        scale = np.max(np.abs(mins))
        if np.all(mins >= -1e-10 * scale):
            break
        if np.all(mins <= 1e-10 * scale):
            C[0] *= -1
            break
    else:
        raise TauSpecError("could not build a nonnegative reflected spec")
    C[np.abs(C) < 1e-14 * np.max(np.abs(C))] = 0.0
    return TauSpec(M, M - N, C, -lam[::-1], -spec.theta0[::-1])


# ---------------------------------------------------------------- text format

def read_tauspec(path: str | Path) -> TauSpec:
    """Parse ``key=value`` lines (M, N, lambdas, theta0) followed by N rows of A.

    A rows may also be given as ``A=`` followed by the rows on later lines.
    """
    kv: dict[str, str] = {}
    rows: list[list[float]] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            k, v = (s.strip() for s in line.split("=", 1))
            if k == "A":
                if v:
                    rows.append([float(t) for t in v.replace(",", " ").split()])
                continue
            kv[k] = v
        else:
            try:
                rows.append([float(t) for t in line.replace(",", " ").split()])
            except ValueError as exc:
                raise TauSpecError(f"malformed spec line: {raw!r}") from exc
    try:
        M, N = int(kv["M"]), int(kv["N"])
        lam = [float(t) for t in kv["lambdas"].replace(",", " ").split()]
    except (KeyError, ValueError) as exc:
        raise TauSpecError("spec needs M, N and lambdas") from exc
    th = [float(t) for t in kv["theta0"].replace(",", " ").split()] if "theta0" in kv else None
    return TauSpec(M, N, np.array(rows), np.array(lam), None if th is None else np.array(th))


def write_tauspec(spec: TauSpec, path: str | Path) -> None:
    lines = [f"M={spec.M}", f"N={spec.N}",
             "lambdas=" + " ".join(repr(float(a)) for a in spec.lambdas),
             "theta0=" + " ".join(repr(float(a)) for a in spec.theta0), "A="]
    lines += [" ".join(repr(float(a)) for a in row) for row in spec.A]
    Path(path).write_text("\n".join(lines) + "\n")
