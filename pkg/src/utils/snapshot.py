"""Column text format for grids and fields.

    # hslab-grid v1
    # N=3
    # kind=half_ball_flat
    # ...
    i j r theta rho z value dirichlet
    0 0 0 0 0 0 0 1
    ...

One row per node in row-major (i, j) order. Reals are written with 17
significant digits, so reading a snapshot back reproduces every value
exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from src.models.domain import AxisymmetricDomain, BoundaryGraph, DomainKind
from src.tools.grid_tools import Grid2D, GridFunction
from src.utils.errors import ParameterError

MAGIC = "# hslab-grid v1"
COLUMNS = ("i", "j", "r", "theta", "rho", "z", "value", "dirichlet")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def snapshot_lines(u: GridFunction) -> list[str]:
    grid = u.grid
    domain = grid.domain
    meta = {
        "N": str(grid.N),
        "kind": domain.kind.value,
        "rmax": _fmt(domain.rmax),
        "alpha": _fmt(grid.alpha),
        "cutoff_radius": _fmt(domain.graph.cutoff_radius) if domain.graph is not None else "none",
        "n_r": str(grid.n_r),
        "n_theta": str(grid.n_theta),
        "gamma": _fmt(grid.gamma),
    }
    lines = [MAGIC]
    lines += [f"# {key}={value}" for key, value in meta.items()]
    lines.append(" ".join(COLUMNS))
    for i in range(grid.n_r + 1):
        for j in range(grid.n_theta + 1):
            lines.append(
                " ".join(
                    (
                        str(i),
                        str(j),
                        _fmt(grid.r[i]),
                        _fmt(grid.theta[j]),
                        _fmt(grid.rho[i, j]),
                        _fmt(grid.z[i, j]),
                        _fmt(u.values[i, j]),
                        "1" if grid.dirichlet[i, j] else "0",
                    )
                )
            )
    return lines


def write_snapshot(u: GridFunction, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(snapshot_lines(u)) + "\n", encoding="utf-8")
    return path


def _parse_header(lines: list[str]) -> tuple[dict[str, str], int]:
    if not lines or lines[0].strip() != MAGIC:
        raise ParameterError("not a grid snapshot (missing header line)")
    meta: dict[str, str] = {}
    index = 1
    while index < len(lines) and lines[index].startswith("#"):
        key, _, value = lines[index][1:].strip().partition("=")
        meta[key.strip()] = value.strip()
        index += 1
    if index >= len(lines) or tuple(lines[index].split()) != COLUMNS:
        raise ParameterError("grid snapshot column header is missing or malformed")
    return meta, index + 1


def _domain_from(meta: dict[str, str]) -> AxisymmetricDomain:
    try:
        kind = DomainKind(meta["kind"])
        N = int(meta["N"])
        rmax = float(meta["rmax"])
        graph = None
        if meta.get("cutoff_radius", "none") != "none":
            graph = BoundaryGraph(alpha=float(meta["alpha"]), cutoff_radius=float(meta["cutoff_radius"]))
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"grid snapshot metadata is incomplete: {exc}") from exc
    return AxisymmetricDomain(kind=kind, N=N, rmax=rmax, graph=graph)


def read_snapshot(path: str | Path) -> GridFunction:
    """Rebuild the grid and field written by write_snapshot."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta, start = _parse_header(lines)
    domain = _domain_from(meta)
    n_r, n_theta = int(meta["n_r"]), int(meta["n_theta"])

    rows = [line.split() for line in lines[start:] if line.strip()]
    if len(rows) != (n_r + 1) * (n_theta + 1):
        raise ParameterError(f"grid snapshot has {len(rows)} rows, expected {(n_r + 1) * (n_theta + 1)}")
    table = np.array([[float(x) for x in row[2:7]] for row in rows])
    r = table[:: n_theta + 1, 0].copy()
    theta = table[: n_theta + 1, 1].copy()
    r.setflags(write=False)
    theta.setflags(write=False)

    grid = Grid2D(domain=domain, r=r, theta=theta, gamma=float(meta["gamma"]))
    return GridFunction(grid, table[:, 4].reshape(grid.shape))
