"""Boundary L2 traces with the arc-length measure and the Cantor-bar demonstration.

On a finite mesh a field "has trace 0" when its boundary values are small in
the sigma-weighted L2(boundary) norm, and "vanishes on the boundary" when every
boundary nodal value is small.  The two notions differ exactly when boundary
parts of zero measure carry nonzero values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .assembly import CoefficientSet
from .capacity import Annulus, condenser_solve
from .dirichlet import BoundaryData, DirichletSolver, Field
from .mesh import Mesh, boundary_sigma, build_mesh, cantor_sigma
from .region import CantorBar, Disk


class MeshMismatch(ValueError):
    pass


class UnderResolved(ValueError):
    pass


class TraceClass(str, Enum):
    IN_H10 = "InH10"
    IN_V_NOT_H10 = "InVNotH10"
    NONZERO_TRACE = "NonzeroTrace"


def _boundary_values(values, mesh: Mesh) -> np.ndarray:
    v = np.zeros(mesh.n_vertices, dtype=np.result_type(values, float))
    v[mesh.boundary_vertices] = values
    return v


def trace_l2_distance(field: Field, phi: BoundaryData | None, mesh: Mesh, weights: np.ndarray | None = None) -> float:
    """Trapezoidal ``||u - phi||_{L2(boundary)}`` over boundary edges.

    ``weights`` rescales the measure of each boundary edge (default 1).
    ``phi=None`` measures the trace of ``u`` itself.
    """
    if field.mesh is not mesh or (phi is not None and phi.mesh is not mesh):
        raise MeshMismatch("field, boundary data and mesh must share one mesh")
    diff = field.values.copy()
    if phi is not None:
        diff = diff - _boundary_values(phi.values, mesh)
    e = mesh.boundary_edges
    sq = np.abs(diff[e[:, 0]]) ** 2 + np.abs(diff[e[:, 1]]) ** 2
    w = mesh.boundary_lengths if weights is None else mesh.boundary_lengths * weights
    return math.sqrt(float(np.sum(w * sq) / 2))


def limit_weights(mesh: Mesh) -> np.ndarray:
    """Edge weights sending the measure of every Cantor-bar edge to its limit 0."""
    comp = mesh.edge_components()
    leaves = mesh.region.leaves()
    is_bar = np.array([isinstance(leaves[c], CantorBar) for c in comp])
    return np.where(is_bar, 0.0, 1.0)


def vanishing_trace_test(field: Field, mesh: Mesh, tol: float = 1e-8,
                         weights: np.ndarray | None = None) -> TraceClass:
    """Classify boundary behaviour relative to ``scale = sup|u| sqrt(sigma)``."""
    if field.mesh is not mesh:
        raise MeshMismatch("field lives on another mesh")
    sup = float(np.abs(field.values).max()) if mesh.n_vertices else 0.0
    scale = max(sup, 1e-300) * math.sqrt(boundary_sigma(mesh))
    if trace_l2_distance(field, None, mesh, weights) > tol * scale:
        return TraceClass.NONZERO_TRACE
    if np.all(np.abs(field.values[mesh.boundary_vertices]) <= tol * max(sup, 1e-300)):
        return TraceClass.IN_H10
    return TraceClass.IN_V_NOT_H10


@dataclass
class TraceReport:
    sigma_total: float
    trace_l2: float
    field_l2: float
    field_sup: float
    capacity_floor: float
    generation: int
    sigma_bar: float = 0.0
    sigma_bar_mesh: float = 0.0
    h: float = 0.0


@dataclass
class CantorRun:
    report: TraceReport
    mesh: Mesh
    field: Field
    limit_class: TraceClass


def cantor_region(k: int, radius: float = 2.0):
    return Disk((0.0, 0.0), radius) - CantorBar(k, -1.0, 1.0)


def _min_gap(k: int) -> float:
    return 2.0 * 3.0 ** -k if k > 0 else math.inf


def cantor_demo_run(k: int, h: float, coeffs: CoefficientSet | None = None, method: str = "auto") -> CantorRun:
    """Dirichlet problem on ``B(0,2)`` minus the generation-k bar over ``[-1, 1]``.

    Boundary data is 1 on the bar and 0 on the outer circle.  The mesh removes
    every cell touching the bar, so each bar is widened by ``h`` on all sides;
    ``h`` must keep the smallest gaps (``2 3^-k``) open by at least two cells.
    """
    if 2 * h > _min_gap(k) / 2 + 1e-15 or h > 0.25:
        raise UnderResolved(f"h={h:g} does not resolve generation {k} (need h <= {min(_min_gap(k) / 4, 0.25):g})")
    coeffs = coeffs or CoefficientSet.laplacian()
    region = cantor_region(k)
    bar = region.parts[1].part
    mesh = build_mesh(region, h)
    phi = BoundaryData.from_function(mesh, lambda P: (bar.outer(P) <= 0).astype(float))
    if method == "auto":
        method = "amg" if mesh.n_vertices > 400_000 and coeffs.is_coercive(mesh.centroids[:1]) else "lu"
    solver = DirichletSolver(mesh, coeffs, method=method)
    rep = solver.solve(phi)
    laplace = coeffs.name == "laplace"
    cap = rep.energy if laplace else condenser_solve(bar, Annulus((0.0, 0.0), 1.0, 2.0), h, method=method).value
    comp = mesh.edge_components()
    bar_leaf = 1  # leaves are [outer disk, bar]
    weights = limit_weights(mesh)
    report = TraceReport(
        sigma_total=boundary_sigma(mesh),
        trace_l2=trace_l2_distance(rep.field, None, mesh),
        field_l2=rep.l2_norm,
        field_sup=rep.sup_norm,
        capacity_floor=cap,
        generation=k,
        sigma_bar=cantor_sigma(k),
        sigma_bar_mesh=float(math.fsum(mesh.boundary_lengths[comp == bar_leaf])),
        h=h,
    )
    return CantorRun(report, mesh, rep.field, vanishing_trace_test(rep.field, mesh, weights=weights))


def cantor_demo(k: int, h: float, coeffs: CoefficientSet | None = None, method: str = "auto") -> TraceReport:
    return cantor_demo_run(k, h, coeffs, method).report
