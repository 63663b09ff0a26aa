"""P1 assembly of the sesquilinear form

    a(u, v) = sum_kl int a_kl d_l u conj(d_k v) + sum_k int b_k u conj(d_k v)
              + sum_k int c_k d_k u conj(v) + int c0 u conj(v)

and its shifted variants.  Coefficients are sampled once per triangle at the
centroid; with P1 factors the remaining polynomial integrals are exact, so the
discrete form is the exact form of the piecewise-constant sampled operator.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh

Coefficient = Callable[[np.ndarray], np.ndarray] | complex | float

PROBES = np.array(
    [[1, 0], [0, 1], [1, 1], [1, -1], [1, 1j], [1, -1j]], dtype=complex
)


class EllipticityViolated(ValueError):
    def __init__(self, point, value, mu):
        super().__init__(f"ellipticity fails at {tuple(np.round(point, 12))}: {value:.6g} < mu={mu}")
        self.point = point


def _sample(coef, P: np.ndarray, shape=()) -> np.ndarray:
    v = np.asarray(coef(P) if callable(coef) else coef)
    target = (len(P), *shape)
    return v if v.shape == target else np.broadcast_to(v, target)


def _vec(coefs, P) -> np.ndarray:
    """Sample a 2-vector of coefficients into an (n, 2) array."""
    if callable(coefs):
        return _sample(coefs, P, (2,))
    return np.column_stack([_sample(c, P) for c in coefs])


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficient fields; each entry is a constant or a function of ``(n, 2)`` points."""

    a: Coefficient | Sequence = ((1.0, 0.0), (0.0, 1.0))
    b: Sequence[Coefficient] = (0.0, 0.0)
    c: Sequence[Coefficient] = (0.0, 0.0)
    c0: Coefficient = 0.0
    mu: float = 1.0
    name: str = ""

    @classmethod
    def laplacian(cls, shift: float = 0.0) -> "CoefficientSet":
        """``-Laplace - shift``."""
        return cls(c0=-float(shift), name="laplace" if shift == 0 else f"laplace-{shift:g}")

    # -- sampling ---------------------------------------------------------

    def sample_a(self, P) -> np.ndarray:
        if callable(self.a):
            return _sample(self.a, P, (2, 2)).astype(float)
        rows = [[_sample(self.a[k][l], P) for l in range(2)] for k in range(2)]
        return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2).astype(float)

    def sample_b(self, P) -> np.ndarray:
        return _vec(self.b, P).astype(complex)

    def sample_c(self, P) -> np.ndarray:
        return _vec(self.c, P)

    def sample_c0(self, P) -> np.ndarray:
        return _sample(self.c0, P).astype(complex)

    def has_first_order(self, P) -> bool:
        return bool(np.any(self.sample_b(P) != 0) or np.any(self.sample_c(P) != 0))

    # -- checks -----------------------------------------------------------

    def check_ellipticity(self, P) -> None:
        A = self.sample_a(P)
        # Re sum_kl a_kl xi_k conj(xi_l) for each probe
        q = np.einsum("nkl,pk,pl->np", A, PROBES, PROBES.conj()).real
        norms = (np.abs(PROBES) ** 2).sum(axis=1)
        bad = q < self.mu * norms[None, :] * (1 - 1e-12)
        if bad.any():
            n, p = np.argwhere(bad)[0]
            raise EllipticityViolated(P[n], q[n, p] / norms[p], self.mu)

    def lambda0(self, P) -> float:
        """Coercivity shift ``1 + |c0| + d/mu (sum |b_k|^2 + |c_k|^2)`` from sampled sup norms."""
        b = np.abs(self.sample_b(P)).max(axis=0)
        c = np.abs(self.sample_c(P)).max(axis=0)
        c0 = np.abs(self.sample_c0(P)).max()
        return float(1 + c0 + 2 / self.mu * (np.sum(b ** 2) + np.sum(c ** 2)))

    def is_coercive(self, P) -> bool:
        """No first-order terms and ``Re c0 >= 0``: the form is coercive on H^1_0."""
        return (not self.has_first_order(P)) and bool(np.all(self.sample_c0(P).real >= 0))


def transform_imaginary_ck(coeffs: CoefficientSet, im_ck, d_im_ck) -> CoefficientSet:
    """Move ``i Im c_k`` from the gradient term onto ``b_k`` and ``c0``.

    Uses ``int Im c_k d_k u conj(v) = -int Im c_k u conj(d_k v) - int (d_k Im c_k) u conj(v)``
    for test functions vanishing on the boundary, so the returned set has
    real ``c_k = Re c_k`` and defines the same operator.
    """
    imc = [im_ck[k] for k in range(2)]
    dimc = [d_im_ck[k] for k in range(2)]

    def newb(k):
        return lambda P: coeffs.sample_b(P)[:, k] - 1j * _sample(imc[k], P)

    def newc(k):
        return lambda P: coeffs.sample_c(P)[:, k].real

    def newc0(P):
        return coeffs.sample_c0(P) - 1j * (_sample(dimc[0], P) + _sample(dimc[1], P))

    return replace(coeffs, b=(newb(0), newb(1)), c=(newc(0), newc(1)), c0=newc0)


@dataclass
class SparseSystem:
    A: sp.csr_matrix
    M: sp.csr_matrix
    interior_idx: np.ndarray
    boundary_idx: np.ndarray
    lam: float
    mesh: Mesh
    coeffs: CoefficientSet | None = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def interior(self):
        """``(A_II, M_II)`` restricted to interior vertices."""
        I = self.interior_idx
        return self.A[I][:, I].tocsc(), self.M[I][:, I].tocsc()

    def interior_boundary(self) -> sp.csr_matrix:
        return self.A[self.interior_idx][:, self.boundary_idx]


def p1_gradients(mesh: Mesh) -> np.ndarray:
    """Gradients of the three barycentric hats on each triangle, shape (nt, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    area2 = 2 * mesh.areas
    # grad lambda_i = rot(p_{i+2} - p_{i+1}) / (2|T|), rot(x, y) = (y, -x)
    G = np.empty((mesh.n_triangles, 3, 2))
    for i in range(3):
        e = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        G[:, i, 0] = -e[:, 1] / area2
        G[:, i, 1] = e[:, 0] / area2
    return G


def _scatter(mesh: Mesh, local: np.ndarray, chunk: int = 500_000) -> sp.csr_matrix:
    """Sum per-triangle 3x3 blocks ``local[t, i, j]`` into row i, column j."""
    T = mesh.triangles.astype(np.int32)
    n = mesh.n_vertices
    out = sp.csr_matrix((n, n), dtype=local.dtype)
    for s in range(0, len(T), chunk):
        Tc = T[s:s + chunk]
        rows = np.repeat(Tc, 3, axis=1).ravel()
        cols = np.tile(Tc, (1, 3)).ravel()
        out = out + sp.csr_matrix((local[s:s + chunk].reshape(-1), (rows, cols)), shape=(n, n))
    out.sum_duplicates()
    return out


def _local_mass(mesh: Mesh) -> np.ndarray:
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return mesh.areas[:, None, None] * base[None]


def mass_matrix(mesh: Mesh) -> sp.csr_matrix:
    return _scatter(mesh, _local_mass(mesh))


def stiffness_matrix(mesh: Mesh) -> sp.csr_matrix:
    """P1 matrix of ``int grad u . grad v``."""
    G = p1_gradients(mesh)
    return _scatter(mesh, mesh.areas[:, None, None] * np.einsum("tik,tjk->tij", G, G, optimize=True))


def _real_if_possible(x: np.ndarray) -> np.ndarray:
    return x.real.astype(float) if np.iscomplexobj(x) and not np.any(x.imag) else x


def _local_form(mesh: Mesh, coeffs: CoefficientSet, lam: float, first_b: bool = True, zeroth: bool = True):
    P = mesh.centroids
    G = p1_gradients(mesh)
    area = mesh.areas
    A = coeffs.sample_a(P)
    b = _real_if_possible(coeffs.sample_b(P)) if first_b else np.zeros((len(P), 2))
    c = _real_if_possible(np.asarray(coeffs.sample_c(P)))
    shift = np.full(len(P), float(lam))
    if zeroth:
        shift = shift + _real_if_possible(coeffs.sample_c0(P))
    dtype = np.result_type(b, c, shift, float)
    # row i = test function, column j = trial function
    AG = np.einsum("tkl,tjl->tjk", A, G, optimize=True)
    local = (area[:, None, None] * np.einsum("tjk,tik->tij", AG, G, optimize=True)).astype(dtype)
    del AG
    if np.any(b != 0):
        # int b_k phi_j d_k phi_i = |T|/3 b . grad phi_i
        local += (area / 3)[:, None, None] * np.einsum("tk,tik->ti", b, G)[:, :, None]
    if np.any(c != 0):
        # int c_k d_k phi_j phi_i = |T|/3 c . grad phi_j
        local += (area / 3)[:, None, None] * np.einsum("tk,tjk->tj", c, G)[:, None, :]
    if np.any(shift != 0):
        local += shift[:, None, None] * _local_mass(mesh)
    return local


def _finish(mesh, coeffs, local, lam) -> SparseSystem:
    A = _scatter(mesh, local)
    return SparseSystem(A=A, M=mass_matrix(mesh), interior_idx=mesh.interior_vertices,
                        boundary_idx=mesh.boundary_vertices, lam=float(lam), mesh=mesh, coeffs=coeffs)


def assemble(mesh: Mesh, coeffs: CoefficientSet, lam: float = 0.0) -> SparseSystem:
    """``A[i, j] = a_lam(phi_j, phi_i)`` over all vertices."""
    coeffs.check_ellipticity(mesh.centroids)
    return _finish(mesh, coeffs, _local_form(mesh, coeffs, lam), lam)


def assemble_b_form(mesh: Mesh, coeffs: CoefficientSet, lam: float = 0.0) -> SparseSystem:
    """Same as :func:`assemble` without the ``b_k`` and ``c0`` terms."""
    coeffs.check_ellipticity(mesh.centroids)
    return _finish(mesh, coeffs, _local_form(mesh, coeffs, lam, first_b=False, zeroth=False), lam)


@dataclass
class Functional:
    f0: Coefficient
    f: Sequence[Coefficient]
    assembled: np.ndarray


def assemble_functional(mesh: Mesh, f0: Coefficient = 0.0, f: Sequence[Coefficient] = (0.0, 0.0)) -> Functional:
    """``F_i = int f0 conj(phi_i) + sum_k int f_k conj(d_k phi_i)`` with centroid sampling."""
    P = mesh.centroids
    G = p1_gradients(mesh)
    area = mesh.areas
    v0 = _sample(f0, P).astype(complex)
    fv = _vec(f, P).astype(complex)
    local = (area / 3)[:, None] * v0[:, None] + area[:, None] * np.einsum("tk,tik->ti", fv, G)
    out = np.zeros(mesh.n_vertices, dtype=complex)
    np.add.at(out, mesh.triangles.ravel(), local.ravel())
    if not np.any(out.imag):
        out = out.real.copy()
    return Functional(f0=f0, f=f, assembled=out)


def form_by_quadrature(mesh: Mesh, coeffs: CoefficientSet, lam: float, u: np.ndarray, v: np.ndarray) -> complex:
    """``a_lam(u, v)`` by an element loop with edge-midpoint quadrature.

    Independent of the matrix path; centroid-sampled coefficients, P1 fields.
    """
    total = 0j
    P = mesh.centroids
    A = coeffs.sample_a(P)
    b = coeffs.sample_b(P)
    c = coeffs.sample_c(P)
    c0 = coeffs.sample_c0(P)
    for t, tri in enumerate(mesh.triangles):
        x = mesh.vertices[tri]
        J = np.column_stack([x[1] - x[0], x[2] - x[0]])
        area = 0.5 * abs(np.linalg.det(J))
        Jinv_T = np.linalg.inv(J).T
        gu = Jinv_T @ np.array([u[tri[1]] - u[tri[0]], u[tri[2]] - u[tri[0]]])
        gv = Jinv_T @ np.array([v[tri[1]] - v[tri[0]], v[tri[2]] - v[tri[0]]])
        # midpoint rule on the three edges is exact for quadratics
        mids = [(0, 1), (1, 2), (2, 0)]
        um = np.array([(u[tri[i]] + u[tri[j]]) / 2 for i, j in mids])
        vm = np.array([(v[tri[i]] + v[tri[j]]) / 2 for i, j in mids])
        total += area * (gv.conj() @ A[t] @ gu)
        total += area * np.mean(um) * (b[t] @ gv.conj())
        total += area * (c[t] @ gu) * np.mean(vm.conj())
        total += area * (c0[t] + lam) * np.mean(um * vm.conj())
    return total
