"""Writers: legacy ASCII VTK, CSV tables and MatrixMarket dumps."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from .mesh import Mesh


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (complex, np.complexfloating)):
        return repr(complex(x))
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """UTF-8, comma separated, header row first; floats are written with ``repr``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_vtk(path, mesh: Mesh, point_data: Mapping[str, np.ndarray] | None = None, title: str = "perron-lab") -> Path:
    """Legacy ASCII ``UNSTRUCTURED_GRID`` (version 3.0) with triangle cells.

    Complex fields are split into ``<name>_re`` and ``<name>_im``.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nv, nt = mesh.n_vertices, mesh.n_triangles
    pts = np.column_stack([mesh.vertices, np.zeros(nv)])
    cells = np.column_stack([np.full(nt, 3), mesh.triangles])
    with path.open("w", encoding="ascii") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {nv} double\n")
        np.savetxt(fh, pts, fmt="%.17g")
        fh.write(f"CELLS {nt} {4 * nt}\n")
        np.savetxt(fh, cells, fmt="%d")
        fh.write(f"CELL_TYPES {nt}\n")
        np.savetxt(fh, np.full(nt, 5), fmt="%d")
        fields = {}
        for name, vals in (point_data or {}).items():
            vals = np.asarray(vals)
            if np.iscomplexobj(vals):
                fields[f"{name}_re"] = vals.real
                fields[f"{name}_im"] = vals.imag
            else:
                fields[name] = vals
        if fields:
            fh.write(f"POINT_DATA {nv}\n")
            for name, vals in fields.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                np.savetxt(fh, vals, fmt="%.17g")
    return path


def write_mesh_csv(prefix, mesh: Mesh) -> tuple[Path, Path]:
    """``<prefix>_vertices.csv`` (id, x, y, boundary) and ``<prefix>_triangles.csv`` (id, v0, v1, v2)."""
    prefix = str(prefix)
    vpath = write_csv(f"{prefix}_vertices.csv", ["id", "x", "y", "boundary"],
                      ((i, x, y, int(b)) for i, ((x, y), b) in enumerate(zip(mesh.vertices, mesh.is_boundary))))
    tpath = write_csv(f"{prefix}_triangles.csv", ["id", "v0", "v1", "v2"],
                      ((i, *map(int, t)) for i, t in enumerate(mesh.triangles)))
    return vpath, tpath


def write_matrix_market(path, A: sp.spmatrix, comment: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), comment=comment)
    return path
