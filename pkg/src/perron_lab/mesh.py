"""Grid-clipped criss triangulations of regions and their exhaustions.

The background grid is anchored at the origin: node ``(i, j)`` sits at
``(i h, j h)``.  A cell is kept when its four corners and its centre clear the
region by more than ``delta`` (``delta = 0`` is plain membership), and each
kept cell is split along its ``(0,0)-(1,1)`` diagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .region import BoundaryProjector, CantorBar, Region


class EmptyMesh(ValueError):
    pass


def _coords(idx: np.ndarray, h: float) -> np.ndarray:
    # exact reciprocal grids (h = 1/N) are evaluated as i/N to keep nodes on
    # exactly representable lines such as x = -1
    inv = 1.0 / h
    n = round(inv)
    if abs(inv - n) < 1e-9 * inv:
        return idx / float(n)
    return idx * h


@dataclass(eq=False)
class Mesh:
    vertices: np.ndarray          # (nv, 2)
    triangles: np.ndarray         # (nt, 3), counterclockwise
    keys: np.ndarray              # (nv, 2) integer grid indices of every vertex
    cells: np.ndarray             # (nc, 2) integer lower-left indices of kept cells
    boundary_edges: np.ndarray    # (nb, 2) vertex pairs
    boundary_lengths: np.ndarray  # (nb,)
    boundary_vertices: np.ndarray
    interior_vertices: np.ndarray
    h: float
    region: Region
    delta: float = 0.0
    region_id: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, bool)
        mask[self.boundary_vertices] = True
        return mask

    def edges(self) -> np.ndarray:
        e = np.vstack([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def projector(self) -> BoundaryProjector:
        if "projector" not in self._cache:
            self._cache["projector"] = BoundaryProjector(self.region, self.h / 8)
        return self._cache["projector"]

    def boundary_projection(self):
        """Nearest points of the true boundary for every boundary vertex.

        Returns ``(points, leaf_ids)`` aligned with ``boundary_vertices``.
        """
        if "bproj" not in self._cache:
            pts, ids, _ = self.projector().project(self.vertices[self.boundary_vertices])
            self._cache["bproj"] = (pts, ids)
        return self._cache["bproj"]

    def edge_components(self) -> np.ndarray:
        """Leaf index of the nearest boundary component for each boundary edge."""
        if "ecomp" not in self._cache:
            mid = self.vertices[self.boundary_edges].mean(axis=1)
            self._cache["ecomp"] = self.projector().project(mid)[1]
        return self._cache["ecomp"]

    # -- point location -------------------------------------------------------

    @cached_property
    def _cell_lookup(self):
        lin = self.cells[:, 0].astype(np.int64) * (1 << 32) + self.cells[:, 1]
        order = np.argsort(lin)
        return lin[order], order

    @cached_property
    def _key_lookup(self):
        lin = self.keys[:, 0].astype(np.int64) * (1 << 32) + self.keys[:, 1]
        order = np.argsort(lin)
        return lin[order], order

    def vertex_index(self, keys: np.ndarray) -> np.ndarray:
        """Indices of vertices with the given grid keys, -1 where absent."""
        keys = np.atleast_2d(keys)
        lin = keys[:, 0].astype(np.int64) * (1 << 32) + keys[:, 1]
        sorted_lin, order = self._key_lookup
        pos = np.clip(np.searchsorted(sorted_lin, lin), 0, len(sorted_lin) - 1)
        return np.where(sorted_lin[pos] == lin, order[pos], -1)

    def locate(self, P) -> tuple[np.ndarray, np.ndarray]:
        """Triangle index and barycentric weights for each point; -1 if outside."""
        P = np.atleast_2d(np.asarray(P, float))
        g = P / self.h
        ij = np.floor(g).astype(np.int64)
        f = g - ij
        # points exactly on a cell's upper/right edge may belong to a neighbour
        tri = np.full(len(P), -1)
        lam = np.zeros((len(P), 3))
        sorted_lin, order = self._cell_lookup
        for di, dj in [(0, 0), (-1, 0), (0, -1), (-1, -1)]:
            todo = tri < 0
            if not todo.any():
                break
            c = ij[todo] + [di, dj]
            fx = f[todo, 0] - di
            fy = f[todo, 1] - dj
            ok = (fx >= -1e-12) & (fx <= 1 + 1e-12) & (fy >= -1e-12) & (fy <= 1 + 1e-12)
            lin = c[:, 0] * (1 << 32) + c[:, 1]
            pos = np.clip(np.searchsorted(sorted_lin, lin), 0, len(sorted_lin) - 1)
            ok &= sorted_lin[pos] == lin
            cell = order[pos]
            lower = fx >= fy
            t = np.where(lower, 2 * cell, 2 * cell + 1)
            # lower triangle (v00, v10, v11); upper (v00, v11, v01)
            l_low = np.column_stack([1 - fx, fx - fy, fy])
            l_up = np.column_stack([1 - fy, fx, fy - fx])
            ll = np.where(lower[:, None], l_low, l_up)
            idx = np.flatnonzero(todo)[ok]
            tri[idx] = t[ok]
            lam[idx] = ll[ok]
        return tri, lam

    def interpolate(self, values: np.ndarray, P) -> np.ndarray:
        tri, lam = self.locate(P)
        if np.any(tri < 0):
            raise ProbeOutside(f"{int(np.sum(tri < 0))} probe point(s) outside the mesh")
        return np.einsum("ij,ij->i", values[self.triangles[tri]], lam)


class ProbeOutside(ValueError):
    pass


def _grid_range(lo: float, hi: float, h: float) -> np.ndarray:
    return np.arange(math.floor(lo / h) - 1, math.ceil(hi / h) + 1)


def _region_id(region: Region) -> str:
    import hashlib

    return hashlib.sha1(repr(region).encode()).hexdigest()[:12]


def build_mesh(region: Region, h: float, delta: float = 0.0, drop_polar: bool = False) -> Mesh:
    """Criss triangulation of the region (``delta = 0``) or of ``{dist_to_complement > delta}``.

    For ``delta = 0`` a cell is kept when its centre lies in the region and its
    corners lie in the closure but on no thin removed set (Cantor bar, point),
    so boundary vertices may sit on the boundary.  For ``delta > 0`` corners and
    centre must all clear the complement by more than ``delta``.

    With ``drop_polar`` isolated points are removed from the region first; a
    point has zero capacity, so the puncture simply goes unresolved.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    region.validate()
    lo, hi = region.finite_bbox()
    if h >= float(np.hypot(*(hi - lo))):
        raise ValueError("h must be smaller than the bounding-box diagonal")
    test = region.without_polar() if drop_polar else region

    gi = _grid_range(lo[0], hi[0], h)
    gj = _grid_range(lo[1], hi[1], h)
    nx, ny = len(gi), len(gj)
    X = _coords(gi.astype(float), h)
    Y = _coords(gj.astype(float), h)
    XX, YY = np.meshgrid(X, Y, indexing="ij")
    nodes = np.column_stack([XX.ravel(), YY.ravel()])
    if delta > 0:
        node_ok = test.inner(nodes) > delta
    else:
        node_ok = test.closure_corner(nodes)
    node_ok = node_ok.reshape(nx, ny)
    del nodes, XX, YY
    cell_ok = node_ok[:-1, :-1] & node_ok[1:, :-1] & node_ok[1:, 1:] & node_ok[:-1, 1:]
    ci, cj = np.nonzero(cell_ok)
    if len(ci):
        cx = (_coords(gi[ci].astype(float), h) + _coords(gi[ci].astype(float) + 1, h)) / 2
        cy = (_coords(gj[cj].astype(float), h) + _coords(gj[cj].astype(float) + 1, h)) / 2
        centre_ok = test.inner(np.column_stack([cx, cy])) > delta
        ci, cj = ci[centre_ok], cj[centre_ok]
    if len(ci) == 0:
        raise EmptyMesh(f"no grid cell of size h={h} lies inside the region (delta={delta})")

    # vertices ordered by (j, i)
    corner_i = np.concatenate([ci, ci + 1, ci + 1, ci])
    corner_j = np.concatenate([cj, cj, cj + 1, cj + 1])
    lin = corner_j.astype(np.int64) * (nx + 1) + corner_i
    uniq, inv = np.unique(lin, return_inverse=True)
    nc = len(ci)
    v00, v10, v11, v01 = inv[:nc], inv[nc:2 * nc], inv[2 * nc:3 * nc], inv[3 * nc:]
    vi = (uniq % (nx + 1)).astype(np.int64)
    vj = (uniq // (nx + 1)).astype(np.int64)
    keys = np.column_stack([gi[0] + vi, gj[0] + vj])
    vertices = np.column_stack([_coords(keys[:, 0].astype(float), h), _coords(keys[:, 1].astype(float), h)])

    # cells sorted by (j, i) as well, triangles 2c (lower) and 2c+1 (upper)
    corder = np.lexsort((ci, cj))
    ci, cj = ci[corder], cj[corder]
    v00, v10, v11, v01 = v00[corder], v10[corder], v11[corder], v01[corder]
    tris = np.empty((2 * nc, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([v00, v10, v11])
    tris[1::2] = np.column_stack([v00, v11, v01])
    cells = np.column_stack([gi[ci], gj[cj]])

    e = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e = np.sort(e, axis=1)
    elin = e[:, 0] * len(vertices) + e[:, 1]
    ue, counts = np.unique(elin, return_counts=True)
    bl = ue[counts == 1]
    bedges = np.column_stack([bl // len(vertices), bl % len(vertices)])
    blen = np.hypot(*(vertices[bedges[:, 1]] - vertices[bedges[:, 0]]).T)
    bverts = np.unique(bedges)
    mask = np.ones(len(vertices), bool)
    mask[bverts] = False
    return Mesh(
        vertices=vertices,
        triangles=tris,
        keys=keys,
        cells=cells,
        boundary_edges=bedges,
        boundary_lengths=blen,
        boundary_vertices=bverts,
        interior_vertices=np.flatnonzero(mask),
        h=h,
        region=region,
        delta=delta,
        region_id=_region_id(region),
    )


def exhaustion_mesh(region: Region, h: float, delta: float) -> Mesh:
    """Mesh of the interior level set ``{dist_to_complement > delta}``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return build_mesh(region, h, delta=delta)


def boundary_sigma(mesh: Mesh) -> float:
    """Total length of the mesh boundary."""
    return float(math.fsum(mesh.boundary_lengths))


@dataclass
class SigmaComponent:
    leaf: Region
    mesh_length: float
    exact: float | None  # analytic Hausdorff measure when known


def sigma_by_component(mesh: Mesh) -> dict[int, SigmaComponent]:
    """Boundary length grouped by the nearest leaf of the region tree.

    Cantor bars also carry their analytic two-sided measure."""
    comp = mesh.edge_components()
    leaves = mesh.region.leaves()
    out = {}
    for leaf_id in np.unique(comp):
        leaf = leaves[leaf_id]
        exact = leaf.sigma if isinstance(leaf, CantorBar) else None
        out[int(leaf_id)] = SigmaComponent(leaf, float(math.fsum(mesh.boundary_lengths[comp == leaf_id])), exact)
    return out


def cantor_sigma(generation: int, a: float = -1.0, b: float = 1.0) -> float:
    """Two-sided measure of the generation-k bar: ``2 (b - a) (2/3)^k``."""
    return CantorBar(generation, a, b).sigma
