"""KPF1 field files, CSV curves, trajectory manifests and key=value reports.

A KPF1 field is a bare little-endian float64 array (row-major, x fastest)
with a sidecar ``.hdr`` text file of ``key=value`` lines.  Headers carry no
timestamps so reruns are byte-identical.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import Field2D, GridError, make_grid

FORMAT = "KPF1"
_GRID_KEYS = ("nx", "ny", "Lx", "Ly", "x0", "y0")


def header_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".hdr")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_fmt(float(a)) for a in v)
    return str(v)


def write_kv(path: str | Path, items: dict) -> None:
    lines = []
    for k, v in items.items():
        s = _fmt(v)
        if "\n" in s:
            raise ValueError(f"value for {k!r} spans lines")
        lines.append(f"{k}={s}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_kv(path: str | Path) -> dict[str, str]:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise GridError(f"malformed header line: {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def write_field(path: str | Path, f: Field2D, extra: dict | None = None) -> Path:
    path = Path(path)
    g = f.grid
    np.ascontiguousarray(f.values, dtype="<f8").tofile(path)
    hdr = {"format": FORMAT, "nx": g.nx, "ny": g.ny, "Lx": float(g.Lx), "Ly": float(g.Ly),
           "x0": float(g.x0), "y0": float(g.y0), "meta": f.meta}
    if extra:
        hdr.update({k: v for k, v in extra.items() if k not in hdr})
    write_kv(header_path(path), hdr)
    return path


def read_field(path: str | Path) -> Field2D:
    path = Path(path)
    hp = header_path(path)
    if not hp.exists():
        raise GridError(f"missing header {hp}")
    h = read_kv(hp)
    if h.get("format") != FORMAT:
        raise GridError(f"{hp}: not a {FORMAT} header")
    try:
        nx, ny = int(h["nx"]), int(h["ny"])
        Lx, Ly, x0, y0 = (float(h[k]) for k in _GRID_KEYS[2:])
    except (KeyError, ValueError) as exc:
        raise GridError(f"{hp}: incomplete grid description") from exc
    g = make_grid(nx, ny, Lx, Ly, x0, y0)
    data = np.fromfile(path, dtype="<f8")
    if data.size != nx * ny:
        raise GridError(f"{path}: expected {nx * ny} values, found {data.size}")
    return Field2D(g, data.reshape(ny, nx), meta=h.get("meta", "none"))


def write_curve(path: str | Path, y, values, name: str = "value") -> Path:
    path = Path(path)
    arr = np.column_stack([np.asarray(y, dtype=float), np.asarray(values, dtype=float)])
    with path.open("w") as fh:
        fh.write(f"y,{name}\n")
        for a, b in arr:
            fh.write(f"{float(a)!r},{float(b)!r}\n")
    return path


def read_curve(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return arr[:, 0], arr[:, 1]


def write_series(path: str | Path, columns: dict) -> Path:
    """CSV with one column per key; all columns must have equal length."""
    path = Path(path)
    keys = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in keys]
    n = {c.size for c in cols}
    if len(n) > 1:
        raise ValueError("series columns differ in length")
    with path.open("w") as fh:
        fh.write(",".join(keys) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(a)) for a in row) + "\n")
    return path


def write_trajectory(outdir: str | Path, traj, params: dict | None = None, stem: str = "u") -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = []
    for i, (t, f) in enumerate(zip(traj.times, traj.snapshots)):
        name = f"{stem}_{i:05d}.kpf"
        write_field(outdir / name, f, {"t": float(t)})
        names.append(name)
    man = outdir / "manifest.txt"
    lines = [f"{k}={_fmt(v)}" for k, v in (params or {}).items()]
    lines.append("# index,t,mass,l2,file")
    for i, (t, m, n, name) in enumerate(zip(traj.times, traj.mass, traj.l2, names)):
        lines.append(f"{i},{float(t)!r},{float(m)!r},{float(n)!r},{name}")
    man.write_text("\n".join(lines) + "\n")
    return man
