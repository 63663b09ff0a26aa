"""Perron solutions by variational decomposition and by interior exhaustion.

For boundary data ``phi`` the discrete solution is ``u = Phi - v`` where
``Phi`` is any nodal extension with boundary values ``phi`` and ``v`` vanishes
on the boundary with ``a(v, w) = a(Phi, w)`` for every interior hat ``w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .assembly import CoefficientSet, Functional, SparseSystem, assemble, stiffness_matrix
from .linsolve import Factorization, GateFailed, SpectralReport, coercive_gate, spectral_gate
from .mesh import Mesh, ProbeOutside, build_mesh, exhaustion_mesh
from .region import Region

BoundaryFunction = Callable[[np.ndarray], np.ndarray]


class BoundaryMismatch(ValueError):
    pass


class UnresolvedProbe(ValueError):
    pass


@dataclass
class BoundaryData:
    """Values at ``mesh.boundary_vertices`` (in that order)."""

    mesh: Mesh
    values: np.ndarray
    generator: BoundaryFunction | None = None

    @classmethod
    def from_function(cls, mesh: Mesh, g: BoundaryFunction, project: bool = True) -> "BoundaryData":
        """Sample ``g`` on the boundary.

        With ``project`` each boundary vertex is first moved to its nearest
        point of the true boundary; otherwise ``g`` is evaluated at the vertex
        itself (the right choice for exhaustion levels, whose boundary lies
        inside the region).
        """
        P = mesh.boundary_projection()[0] if project else mesh.vertices[mesh.boundary_vertices]
        vals = np.asarray(g(P))
        vals = np.broadcast_to(vals, (len(P),)).copy()
        return cls(mesh, vals, g)

    @classmethod
    def constant(cls, mesh: Mesh, value: complex) -> "BoundaryData":
        return cls.from_function(mesh, lambda P: np.full(len(P), value))

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max()) if len(self.values) else 0.0

    def extension(self) -> np.ndarray:
        """Nodal extension with zero interior values."""
        Phi = np.zeros(self.mesh.n_vertices, dtype=self.values.dtype)
        Phi[self.mesh.boundary_vertices] = self.values
        return Phi

    def at(self, z) -> complex:
        """Boundary value at a point of the boundary."""
        z = np.asarray(z, float).reshape(1, 2)
        if self.generator is not None:
            return complex(np.asarray(self.generator(z)).ravel()[0])
        d = np.hypot(*(self.mesh.vertices[self.mesh.boundary_vertices] - z).T)
        return complex(self.values[np.argmin(d)])

    def __add__(self, other: "BoundaryData") -> "BoundaryData":
        _same_mesh(self.mesh, other.mesh)
        return BoundaryData(self.mesh, self.values + other.values)

    def __rmul__(self, alpha) -> "BoundaryData":
        return BoundaryData(self.mesh, alpha * self.values)


@dataclass
class Field:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.mesh.n_vertices:
            raise ValueError("field length does not match the mesh vertex count")

    def __call__(self, P) -> np.ndarray:
        return self.mesh.interpolate(self.values, P)


@dataclass
class SolveReport:
    field: Field
    phi: BoundaryData
    sup_norm: float
    h1_seminorm: float
    l2_norm: float
    interior_residual: float
    residual_scale: float
    operator_norm_ratio: float
    gate: SpectralReport | None = None

    @property
    def u(self) -> np.ndarray:
        return self.field.values

    @property
    def energy(self) -> float:
        return self.h1_seminorm ** 2


def _same_mesh(a: Mesh, b: Mesh):
    if a is not b:
        raise BoundaryMismatch("objects live on different meshes")


def _gate(system: SparseSystem, factor: Factorization, gate_tol: float) -> SpectralReport:
    coeffs = system.coeffs
    P = system.mesh.centroids
    if coeffs is not None and coeffs.is_coercive(P) and system.lam >= 0:
        return coercive_gate(system, system.mesh.region.diameter_bound())
    return spectral_gate(system, gate_tol, factor=factor)


class DirichletSolver:
    """Assembled system, interior factorization and gate for one mesh and operator.

    Reused across boundary data: every :meth:`solve` is a single back
    substitution.  ``gate="auto"`` certifies coercive operators analytically
    and runs shift-invert Arnoldi otherwise; ``gate="arpack"`` always runs it.
    """

    def __init__(self, mesh: Mesh, coeffs: CoefficientSet, method: str = "lu", gate: str = "auto",
                 gate_tol: float = 1e-6):
        self.mesh = mesh
        self.coeffs = coeffs
        self.system = assemble(mesh, coeffs)
        A_II, _ = self.system.interior()
        self.factor = Factorization(A_II, method=method)
        if gate == "arpack":
            self.gate = spectral_gate(self.system, gate_tol, factor=self.factor)
        else:
            self.gate = _gate(self.system, self.factor, gate_tol)
        if not self.gate.gate_passed:
            raise GateFailed(self.gate)
        self._K = None

    @property
    def stiffness(self):
        if self._K is None:
            plain = self.coeffs.name == "laplace" and self.system.lam == 0
            self._K = self.system.A if plain else stiffness_matrix(self.mesh)
        return self._K

    def solve_extension(self, Phi: np.ndarray) -> np.ndarray:
        """``u = Phi - v`` with ``v`` interior-supported and ``a(v, w) = a(Phi, w)``."""
        I = self.mesh.interior_vertices
        rhs = (self.system.A @ Phi)[I]
        u = np.array(Phi, dtype=np.result_type(Phi, rhs, self.system.A.dtype))
        if len(I):
            u[I] -= self.factor.solve(rhs)
        return u

    def solve_with_rhs(self, phi: BoundaryData, F: np.ndarray | None = None) -> np.ndarray:
        Phi = phi.extension()
        if F is None:
            return self.solve_extension(Phi)
        I = self.mesh.interior_vertices
        rhs = F[I] - (self.system.A @ Phi)[I]
        u = np.array(Phi, dtype=np.result_type(Phi, rhs, self.system.A.dtype))
        if len(I):
            u[I] = self.factor.solve(rhs)
        return u

    def report(self, u: np.ndarray, phi: BoundaryData, F: np.ndarray | None = None) -> SolveReport:
        I = self.mesh.interior_vertices
        r = self.system.A @ u
        if F is not None:
            r = r - F
        res = float(np.abs(r[I]).max()) if len(I) else 0.0
        normA = float(abs(self.system.A).sum(axis=1).max())
        sup = float(np.abs(u).max())
        K, M = self.stiffness, self.system.M
        h1 = math.sqrt(max(float(np.real(np.vdot(u, K @ u))), 0.0))
        l2 = math.sqrt(max(float(np.real(np.vdot(u, M @ u))), 0.0))
        ratio = sup / phi.sup_norm if phi.sup_norm > 0 else (0.0 if sup == 0 else math.inf)
        return SolveReport(Field(self.mesh, u), phi, sup, h1, l2, res, normA * sup, ratio, self.gate)

    def solve(self, phi: BoundaryData) -> SolveReport:
        _same_mesh(self.mesh, phi.mesh)
        return self.report(self.solve_extension(phi.extension()), phi)


def variational_solve(mesh: Mesh, coeffs: CoefficientSet, phi: BoundaryData, **kw) -> SolveReport:
    """Discrete Perron solution ``T phi`` on ``mesh``."""
    return DirichletSolver(mesh, coeffs, **kw).solve(phi)


def extension_independence_check(mesh: Mesh, coeffs: CoefficientSet, Phi1: Field, Phi2: Field,
                                 tol: float = 1e-12, solver: DirichletSolver | None = None):
    """Decompose from two extensions with equal boundary values.

    Returns ``(passed, sup |u1 - u2|)``.
    """
    _same_mesh(Phi1.mesh, mesh)
    _same_mesh(Phi2.mesh, mesh)
    B = mesh.boundary_vertices
    if not np.array_equal(Phi1.values[B], Phi2.values[B]):
        bad = int(np.flatnonzero(Phi1.values[B] != Phi2.values[B])[0])
        raise BoundaryMismatch(f"extensions differ at boundary vertex {int(B[bad])}")
    solver = solver or DirichletSolver(mesh, coeffs)
    u1 = solver.solve_extension(Phi1.values)
    u2 = solver.solve_extension(Phi2.values)
    diff = float(np.abs(u1 - u2).max())
    return diff <= tol, diff


def inhomogeneous_solve(mesh: Mesh, coeffs: CoefficientSet, phi: BoundaryData, F: Functional,
                        solver: DirichletSolver | None = None) -> SolveReport:
    """``u = H(phi, F)``: boundary values ``phi`` and ``a(u, w) = F(w)`` for interior hats."""
    _same_mesh(mesh, phi.mesh)
    solver = solver or DirichletSolver(mesh, coeffs)
    Fv = np.asarray(F.assembled)
    u = solver.solve_with_rhs(phi, Fv)
    return solver.report(u, phi, Fv)


# -- exhaustion ----------------------------------------------------------------


@dataclass
class ExhaustionLevel:
    delta: float
    n_vertices: int
    max_diff: float
    probe_values: np.ndarray
    report: SolveReport | None
    error: str = ""


@dataclass
class ExhaustionResult:
    reference: SolveReport
    probes: np.ndarray
    levels: list[ExhaustionLevel] = field(default_factory=list)

    @property
    def diffs(self) -> np.ndarray:
        return np.array([lv.max_diff for lv in self.levels])


def default_probes(mesh: Mesh, deltas: Sequence[float]) -> np.ndarray:
    """Reference vertices at distance at least ``4 max(deltas)`` from the complement."""
    d = mesh.region.inner(mesh.vertices)
    K = mesh.vertices[d >= 4 * max(deltas)]
    if len(K) == 0:
        raise ProbeOutside(f"no vertex at distance >= {4 * max(deltas):g}; pass probes explicitly")
    return K


def perron_exhaustion(region: Region, coeffs: CoefficientSet, Phi_gen: BoundaryFunction, h: float,
                      deltas: Sequence[float], K=None,
                      level_region: Callable[[float], Region] | None = None,
                      drop_polar: bool = False) -> ExhaustionResult:
    """Solve on exhaustion levels and compare with the full solve on probes ``K``.

    Levels are ``{dist_to_complement > delta}`` with ``Phi_gen`` evaluated at
    their boundary vertices.  ``level_region(delta)`` replaces them by explicit
    open subsets, whose data is then projected onto their own boundary.
    A level whose gate fails is recorded with ``max_diff = nan``.
    """
    ref_mesh = build_mesh(region, h, drop_polar=drop_polar)
    ref = variational_solve(ref_mesh, coeffs, BoundaryData.from_function(ref_mesh, Phi_gen))
    K = default_probes(ref_mesh, deltas) if K is None else np.atleast_2d(np.asarray(K, float))
    u_ref = ref.field(K)
    out = ExhaustionResult(ref, K)
    for delta in deltas:
        if level_region is None:
            mesh = exhaustion_mesh(region, h, delta)
            phi = BoundaryData.from_function(mesh, Phi_gen, project=False)
        else:
            mesh = build_mesh(level_region(delta), h)
            phi = BoundaryData.from_function(mesh, Phi_gen)
        try:
            rep = variational_solve(mesh, coeffs, phi)
        except GateFailed as exc:
            out.levels.append(ExhaustionLevel(delta, mesh.n_vertices, math.nan, np.full(len(K), np.nan), None,
                                              str(exc)))
            continue
        vals = rep.field(K)  # raises ProbeOutside if K leaves the level
        out.levels.append(ExhaustionLevel(delta, mesh.n_vertices, float(np.abs(vals - u_ref).max()), vals, rep))
    return out


# -- energy ----------------------------------------------------------------------


def hadamard_data(N: int) -> BoundaryFunction:
    """``phi_N(theta) = sum_{n=1}^N 2^{-n/2} cos(2^n theta)``."""

    def g(P):
        theta = np.arctan2(P[:, 1], P[:, 0])
        return sum(2.0 ** (-n / 2) * np.cos(2 ** n * theta) for n in range(1, N + 1))

    return g


def mode_data(k: int, amplitude: float = 1.0) -> BoundaryFunction:
    return lambda P: amplitude * np.cos(k * np.arctan2(P[:, 1], P[:, 0]))


@dataclass
class EnergyRow:
    index: int
    h: float
    energy: float


def energy_diagnostic(region: Region, coeffs: CoefficientSet, phi_family: Callable[[int], BoundaryFunction],
                      indices: Sequence[int], h_list: Sequence[float]) -> list[EnergyRow]:
    """Discrete Dirichlet energy ``int |grad T phi_N|^2`` per family index and mesh."""
    rows = []
    for h in h_list:
        mesh = build_mesh(region, h)
        solver = DirichletSolver(mesh, coeffs)
        for N in indices:
            rep = solver.solve(BoundaryData.from_function(mesh, phi_family(N)))
            rows.append(EnergyRow(N, h, rep.energy))
    return rows


def energy_increments(rows: Sequence[EnergyRow]) -> np.ndarray:
    """Successive energy differences at one mesh size, starting from index 0 (energy 0)."""
    e = np.array([0.0] + [r.energy for r in sorted(rows, key=lambda r: r.index)])
    return np.diff(e)


# -- boundary attainment ---------------------------------------------------------


@dataclass
class AttainmentRow:
    z: tuple[float, float]
    radius: float
    gap: float
    n_points: int


@dataclass
class AttainmentProbe:
    z: tuple[float, float]
    rows: list[AttainmentRow]

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])

    @property
    def attained(self) -> bool:
        """Gaps shrink with the radius and end below half the first one."""
        g = self.gaps
        return bool(np.all(np.diff(g) <= 0) and g[-1] <= 0.5 * g[0])

    @property
    def final_gap(self) -> float:
        return float(self.rows[-1].gap)


def boundary_attainment(report: SolveReport, region: Region, probes) -> list[AttainmentProbe]:
    """``max |u(x) - phi(z)|`` over vertices ``x`` of the region within ``r`` of ``z``.

    ``probes`` is a list of ``(z, radii)``; radii are processed largest first.
    """
    mesh = report.field.mesh
    inside = region.contains(mesh.vertices)
    out = []
    for z, radii in probes:
        z = tuple(float(t) for t in z)
        phi_z = report.phi.at(z)
        rows = []
        for r in sorted(radii, reverse=True):
            if r < 2 * mesh.h:
                raise UnresolvedProbe(f"radius {r:g} below 2h = {2 * mesh.h:g}")
            sel = inside & (np.hypot(mesh.vertices[:, 0] - z[0], mesh.vertices[:, 1] - z[1]) < r)
            if not sel.any():
                raise UnresolvedProbe(f"no mesh vertex within {r:g} of {z}")
            gap = float(np.abs(report.u[sel] - phi_z).max())
            rows.append(AttainmentRow(z, float(r), gap, int(sel.sum())))
        out.append(AttainmentProbe(z, rows))
    return out
