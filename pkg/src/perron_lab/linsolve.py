"""Sparse solves and the spectral gate for ``0`` not being a Dirichlet eigenvalue."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .assembly import SparseSystem

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


class SingularSystem(RuntimeError):
    pass


class GateFailed(RuntimeError):
    def __init__(self, report: "SpectralReport"):
        super().__init__(f"spectral gate failed: nearest eigenvalue {report.nearest_eigenvalue:.6g}, "
                         f"distance {report.distance_to_zero:.3g} <= {report.threshold:.3g}")
        self.report = report


class Factorization:
    """Reusable solver for one sparse matrix.

    ``method`` is ``"lu"`` (SuperLU, default), ``"bicgstab"`` (ILU-preconditioned
    BiCGStab) or ``"amg"`` (pyamg smoothed aggregation as a CG/BiCGStab
    preconditioner, for real matrices only).
    """

    def __init__(self, A: sp.spmatrix, method: str = "lu"):
        self.A = sp.csc_matrix(A)
        self.method = method
        self.shape = self.A.shape
        if method == "lu":
            try:
                self._lu = sla.splu(self.A, permc_spec="MMD_AT_PLUS_A")
            except RuntimeError as exc:  # "Factor is exactly singular"
                raise SingularSystem(str(exc)) from exc
        elif method == "bicgstab":
            self._ilu = sla.spilu(self.A, drop_tol=1e-5, fill_factor=20)
            self._prec = sla.LinearOperator(self.shape, self._ilu.solve, dtype=self.A.dtype)
        elif method == "amg":
            import pyamg

            if np.iscomplexobj(self.A):
                raise ValueError("amg route supports real matrices only")
            self._amg = pyamg.smoothed_aggregation_solver(sp.csr_matrix(self.A))
            self._prec = self._amg.aspreconditioner(cycle="V")
            self._symmetric = abs(self.A - self.A.T).max() <= 1e-14 * abs(self.A).max()
        else:
            raise ValueError(f"unknown solver method {method!r}")

    def _raw(self, b, trans="N"):
        if self.method == "lu":
            return self._lu.solve(b, trans=trans)
        if trans != "N":
            op = self.A.T if trans == "T" else self.A.conj().T
            return sla.spsolve(sp.csc_matrix(op), b)
        tol = RESIDUAL_TOL * 1e-2
        if self.method == "amg" and self._symmetric:
            x, info = sla.cg(self.A, b, rtol=tol, atol=0.0, M=self._prec, maxiter=500)
        else:
            x, info = sla.bicgstab(self.A, b, rtol=tol, atol=0.0, M=self._prec, maxiter=2000)
        if info != 0:
            raise SingularSystem(f"{self.method} stagnated (info={info})")
        return x

    def solve(self, b, trans: str = "N", check: bool = True) -> np.ndarray:
        b = np.asarray(b)
        if np.iscomplexobj(b) and not np.iscomplexobj(self.A):
            return self.solve(b.real, trans, check) + 1j * self.solve(b.imag, trans, check)
        x = self._raw(b, trans)
        if check:
            op = {"N": self.A, "T": self.A.T, "H": self.A.conj().T}[trans]
            nb = np.linalg.norm(b)
            if nb > 0:
                r = b - op @ x
                rel = np.linalg.norm(r) / nb
                if rel > RESIDUAL_TOL:
                    x = x + self._raw(r, trans)  # one refinement step
                    rel = np.linalg.norm(b - op @ x) / nb
                if not np.isfinite(rel) or rel > RESIDUAL_TOL:
                    raise SingularSystem(f"relative residual {rel:.3g} exceeds {RESIDUAL_TOL}")
        return x


@dataclass(frozen=True)
class SpectralReport:
    nearest_eigenvalue: complex
    distance_to_zero: float
    iterations: int
    converged: bool
    gate_passed: bool
    threshold: float = 0.0
    method: str = "arpack"


def interior_factor(system: SparseSystem, method: str = "lu") -> Factorization:
    A_II, _ = system.interior()
    return Factorization(A_II, method=method)


def solve(system: SparseSystem, rhs, restrict_to_interior: bool = True, method: str = "lu",
          factor: Factorization | None = None, gate: SpectralReport | None = None) -> np.ndarray:
    """Solve ``A x = rhs``; with ``restrict_to_interior`` only the interior block
    is used and the returned full-length vector vanishes on boundary vertices."""
    if gate is not None and not gate.gate_passed:
        raise SingularSystem("spectral gate failed for this system; refusing to solve")
    rhs = np.asarray(rhs)
    if restrict_to_interior:
        if factor is None:
            factor = interior_factor(system, method)
        x = np.zeros(system.n, dtype=np.result_type(rhs, system.A.dtype))
        x[system.interior_idx] = factor.solve(rhs)
        return x
    if factor is None:
        factor = Factorization(system.A, method=method)
    return factor.solve(rhs)


def pencil_scale(A_II: sp.spmatrix, M_II: sp.spmatrix) -> float:
    """Eigenvalue scale of the pencil; the gate tolerance is relative to it."""
    return float(sp.linalg.norm(A_II) / sp.linalg.norm(M_II))


def spectral_gate(system: SparseSystem, gate_tol: float = 1e-6, factor: Factorization | None = None,
                  maxiter: int = 2000) -> SpectralReport:
    """Eigenvalue of the interior pencil ``(A_II, M_II)`` nearest to 0.

    Shift-invert Arnoldi with shift exactly 0.  The gate passes when the
    iteration converged and ``|lambda| > gate_tol * ||A_II||_F / ||M_II||_F``.
    """
    A_II, M_II = system.interior()
    n = A_II.shape[0]
    if n == 0:
        return SpectralReport(np.inf, np.inf, 0, True, True, 0.0, "empty")
    threshold = gate_tol * pencil_scale(A_II, M_II)
    if n <= 60:
        w = scipy.linalg.eigvals(A_II.toarray(), M_II.toarray())
        lam = complex(w[np.argmin(np.abs(w))])
        return SpectralReport(lam, abs(lam), 1, True, abs(lam) > threshold, threshold, "dense")
    if factor is None:
        try:
            factor = Factorization(A_II)
        except SingularSystem:
            return SpectralReport(0j, 0.0, 0, True, False, threshold, "singular")
    counter = {"n": 0}
    dtype = np.result_type(A_II.dtype, float)

    def op(x):
        counter["n"] += 1
        return factor.solve(x, check=False)

    OPinv = sla.LinearOperator((n, n), matvec=op, dtype=dtype)
    M = M_II.astype(dtype)
    v0 = np.ones(n, dtype=dtype)  # deterministic start
    try:
        w = sla.eigs(A_II, k=1, M=M, sigma=0, OPinv=OPinv, which="LM", v0=v0, maxiter=maxiter, tol=1e-10,
                     return_eigenvectors=False)
    except sla.ArpackNoConvergence as exc:
        w = exc.eigenvalues
        if len(w) == 0:
            return SpectralReport(complex(np.nan), float("nan"), counter["n"], False, False, threshold)
        lam = complex(w[np.argmin(np.abs(w))])
        return SpectralReport(lam, abs(lam), counter["n"], False, False, threshold)
    lam = complex(w[0])
    return SpectralReport(lam, abs(lam), counter["n"], True, abs(lam) > threshold, threshold)


def coercive_gate(system: SparseSystem, diam: float) -> SpectralReport:
    """Analytic gate for forms without first-order terms and ``Re c0 >= 0``.

    Poincare gives ``Re a(v) >= mu ||grad v||^2 >= mu / diam^2 ||v||^2``, so every
    Dirichlet eigenvalue has real part at least ``mu / diam^2``.
    """
    mu = system.coeffs.mu if system.coeffs is not None else 1.0
    bound = mu / diam ** 2
    return SpectralReport(complex(bound), bound, 0, True, True, 0.0, "coercive")


@dataclass
class ResolventLevel:
    delta: float
    n_vertices: int
    difference_l2: float
    resolvent_norm: float
    gate: SpectralReport
    error: str = ""


def resolvent_norm(system: SparseSystem, factor: Factorization | None = None) -> float:
    """Estimate ``||(A^D)^{-1}||`` in the lumped-mass L2 norm by a singular value solve."""
    A_II, M_II = system.interior()
    factor = factor or Factorization(A_II)
    d = np.asarray(M_II.sum(axis=1)).ravel()
    s = np.sqrt(d)
    n = len(d)
    dtype = np.result_type(A_II.dtype, float)
    op = sla.LinearOperator((n, n), dtype=dtype,
                            matvec=lambda x: s * factor.solve(s * np.ravel(x), check=False),
                            rmatvec=lambda x: s * factor.solve(s * np.ravel(x), trans="H", check=False))
    if n <= 2:
        dense = op @ np.eye(n)
        return float(np.linalg.norm(dense, 2))
    val = sla.svds(op, k=1, which="LM", return_singular_vectors=False, v0=np.ones(n, dtype=dtype), tol=1e-8,
                   random_state=0)
    return float(val[0])


def resolvent_exhaustion_check(region, coeffs, f, deltas, h: float, gate_tol: float = 1e-6):
    """Compare ``(A_delta^D)^{-1} f`` on exhaustion meshes with the full solve.

    Returns the reference resolvent norm and one :class:`ResolventLevel` per
    delta; differences are L2 norms of the zero-extended fields on the full mesh.
    """
    from .assembly import assemble, assemble_functional
    from .mesh import build_mesh, exhaustion_mesh

    full = build_mesh(region, h)
    sys_full = assemble(full, coeffs)
    fac = interior_factor(sys_full)
    gate = spectral_gate(sys_full, gate_tol, factor=fac)
    if not gate.gate_passed:
        raise GateFailed(gate)
    F = assemble_functional(full, f0=f).assembled
    u_ref = solve(sys_full, F[full.interior_vertices], factor=fac)
    M = sys_full.M
    levels = []
    for delta in deltas:
        mesh = exhaustion_mesh(region, h, delta)
        system = assemble(mesh, coeffs)
        try:
            fac_d = interior_factor(system)
            g = spectral_gate(system, gate_tol, factor=fac_d)
            if not g.gate_passed:
                raise GateFailed(g)
        except (SingularSystem, GateFailed) as exc:
            levels.append(ResolventLevel(delta, mesh.n_vertices, float("nan"), float("nan"),
                                         getattr(exc, "report", None), str(exc)))
            continue
        Fd = assemble_functional(mesh, f0=f).assembled
        u = solve(system, Fd[mesh.interior_vertices], factor=fac_d)
        ext = np.zeros_like(u_ref, dtype=np.result_type(u, u_ref))
        idx = full.vertex_index(mesh.keys)
        ext[idx] = u
        d = ext - u_ref
        diff = float(np.sqrt(abs(np.vdot(d, M @ d))))
        levels.append(ResolventLevel(delta, mesh.n_vertices, diff, resolvent_norm(system, fac_d), g))
    return resolvent_norm(sys_full, fac), levels
