"""Condenser capacities and dyadic Wiener sums in the plane.

The capacity of a compact ``K`` relative to the ball ``B(z, r_out)`` is the
Dirichlet energy of the discrete equilibrium potential: the P1 harmonic
function on ``B(z, r_out) minus K`` that equals 1 on the mesh boundary facing
``K`` and 0 on the boundary facing the outer circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .assembly import CoefficientSet, assemble
from .linsolve import Factorization
from .mesh import Mesh, build_mesh
from .region import Complement, Disk, Intersection, Region


class Degenerate(ValueError):
    pass


class NotOnBoundary(ValueError):
    pass


@dataclass(frozen=True)
class Annulus:
    center: tuple[float, float]
    r_in: float
    r_out: float

    def __post_init__(self):
        if not 0 <= self.r_in < self.r_out:
            raise ValueError("annulus needs 0 <= r_in < r_out")


@dataclass
class CapacityResult:
    value: float
    mesh: Mesh | None
    potential: np.ndarray | None


def condenser_domain(K: Region, shell: Annulus) -> Region:
    """``B(z, r_out)`` with the closure of ``K`` removed."""
    return Intersection(Disk(shell.center, shell.r_out), Complement(K))


def condenser_solve(K: Region, shell: Annulus, h: float, drop_polar: bool = True,
                    method: str = "lu") -> CapacityResult:
    """Equilibrium potential and its energy; see :func:`condenser_capacity`."""
    if (shell.r_out - shell.r_in) / h < 4 - 1e-9:
        raise ValueError("h must resolve r_out - r_in by at least 4 cells")
    D = condenser_domain(K, shell)
    n = max(64, int(math.ceil(2 * math.pi * shell.r_out / h)))
    t = 2 * math.pi * np.arange(n) / n
    circle = np.column_stack([shell.center[0] + shell.r_out * np.cos(t),
                              shell.center[1] + shell.r_out * np.sin(t)])
    if np.any(K.outer(circle) <= 0):
        raise Degenerate("K touches the outer circle of the shell")
    mesh = build_mesh(D, h, drop_polar=drop_polar)
    proj, _ = mesh.boundary_projection()
    # boundary points off the outer circle belong to the boundary of K
    rho = np.hypot(proj[:, 0] - shell.center[0], proj[:, 1] - shell.center[1])
    ub = (rho < shell.r_out * (1 - 1e-9)).astype(float)
    if not ub.any():
        return CapacityResult(0.0, mesh, np.zeros(mesh.n_vertices))
    system = assemble(mesh, CoefficientSet.laplacian())
    u = np.zeros(mesh.n_vertices)
    u[mesh.boundary_vertices] = ub
    I = mesh.interior_vertices
    if len(I):
        A_II, _ = system.interior()
        u[I] = -Factorization(A_II, method=method).solve(system.interior_boundary() @ ub)
    energy = float(u @ (system.A @ u))
    return CapacityResult(max(energy, 0.0), mesh, u)


def condenser_capacity(K: Region, shell: Annulus, h: float, drop_polar: bool = True, method: str = "lu") -> float:
    """Capacity of ``K`` (given as a region whose closure is the compact) in ``B(z, r_out)``.

    Isolated points have zero capacity in the plane; with ``drop_polar`` they
    are removed before meshing, so a purely polar ``K`` gives exactly 0.
    Without it a point is resolved as a hole of four cells.
    """
    return condenser_solve(K, shell, h, drop_polar, method).value


class Verdict(str, Enum):
    REGULAR = "Regular"
    IRREGULAR = "Irregular"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class WienerLevel:
    j: int
    radius: float
    cap: float


@dataclass
class WienerReport:
    point: tuple[float, float]
    levels: list[WienerLevel] = field(default_factory=list)
    partial_sums: np.ndarray = field(default_factory=lambda: np.zeros(0))
    slope_estimate: float = 0.0
    verdict: Verdict = Verdict.INCONCLUSIVE

    def rows(self):
        """``(j, r, cap_j, W_j)`` rows."""
        return [(lv.j, lv.radius, lv.cap, float(W)) for lv, W in zip(self.levels, self.partial_sums)]


def _check_on_boundary(region: Region, z, scale: float):
    z = np.asarray(z, float)
    if region.contains(z):
        raise NotOnBoundary(f"{tuple(z)} lies inside the region")
    eps = 1e-9 * scale
    ang = np.arange(8) * (np.pi / 4)
    near = z + eps * np.column_stack([np.cos(ang), np.sin(ang)])
    if not region.contains(near).any():
        raise NotOnBoundary(f"{tuple(z)} is not a boundary point of the region")


def classify(caps: np.ndarray, slope: float, J_max: int) -> Verdict:
    """Slope heuristic: thresholds ``0.1 cap_1``, ``0.01 cap_1`` and ``0.2 J_max cap_1``.

    When the first level has zero capacity the scale falls back to the largest
    level value; a sum that is identically zero is Irregular.
    """
    W = float(np.sum(caps))
    scale = caps[0] if caps[0] > 0 else float(np.max(caps))
    if scale <= 0:
        return Verdict.IRREGULAR
    if slope >= 0.1 * scale:
        return Verdict.REGULAR
    if W <= 0.2 * J_max * scale and slope <= 0.01 * scale:
        return Verdict.IRREGULAR
    return Verdict.INCONCLUSIVE


def wiener_sum(region: Region, z, J_max: int, h_ratio: float = 1 / 32, drop_polar: bool = True,
               method: str = "lu") -> WienerReport:
    """Dyadic Wiener sum ``W_J = sum_{j <= J} cap(B(z, 2^-j) minus region, B(z, 2^{1-j}))``."""
    if J_max < 2:
        raise ValueError("J_max must be at least 2")
    z = tuple(float(t) for t in z)
    _check_on_boundary(region, z, region.diameter_bound())
    levels = []
    for j in range(1, J_max + 1):
        r = 2.0 ** -j
        K = Intersection(Disk(z, r), Complement(region))
        cap = condenser_capacity(K, Annulus(z, r, 2 * r), h_ratio * r, drop_polar=drop_polar, method=method)
        levels.append(WienerLevel(j, r, cap))
    caps = np.array([lv.cap for lv in levels])
    W = np.cumsum(caps)
    J = np.arange(1, J_max + 1)
    half = J_max // 2
    slope = float(np.polyfit(J[half:], W[half:], 1)[0]) if J_max - half >= 2 else float(caps[-1])
    return WienerReport(z, levels, W, slope, classify(caps, slope, J_max))
