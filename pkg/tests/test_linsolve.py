import math

import numpy as np
import pytest

from perron_lab import oracles
from perron_lab.assembly import CoefficientSet, assemble, assemble_functional
from perron_lab.linsolve import (Factorization, SingularSystem, coercive_gate, resolvent_exhaustion_check, solve,
                                 spectral_gate)
from perron_lab.mesh import build_mesh
from perron_lab.region import Disk, Rect

SQUARE = Rect((0, 0), (1, 1))


def test_mass_system_recovers_data():
    m = build_mesh(SQUARE, 1 / 16)
    s = assemble(m, CoefficientSet.laplacian())
    _, M_II = s.interior()
    g = np.random.default_rng(0).standard_normal(M_II.shape[0])
    assert np.allclose(Factorization(M_II).solve(M_II @ g), g, atol=1e-10)


def test_manufactured_solution_is_second_order():
    errs = []
    for n in (8, 16, 32):
        m = build_mesh(SQUARE, 1 / n)
        s = assemble(m, CoefficientSet.laplacian())
        F = assemble_functional(m, f0=oracles.manufactured_f).assembled
        u = solve(s, F[m.interior_vertices])
        e = u - oracles.manufactured_u(m.vertices)
        errs.append(math.sqrt(e @ (s.M @ e)))
        assert np.all(u[m.boundary_vertices] == 0)
    assert 3.4 < errs[0] / errs[1] < 4.6 and 3.4 < errs[1] / errs[2] < 4.6


def test_resonant_shift_is_refused():
    m = build_mesh(SQUARE, 1 / 64)
    s = assemble(m, CoefficientSet.laplacian(oracles.square_eigenvalue(1, 1)))
    gate = spectral_gate(s)
    assert not gate.gate_passed
    rhs = np.random.default_rng(1).standard_normal(len(m.interior_vertices))
    with pytest.raises(SingularSystem):
        solve(s, rhs, gate=gate)


def test_exactly_singular_factorization_raises():
    import scipy.sparse as sp

    with pytest.raises(SingularSystem):
        Factorization(sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]])))


def test_gate_examples():
    m = build_mesh(SQUARE, 1 / 32)
    r0 = spectral_gate(assemble(m, CoefficientSet.laplacian()))
    assert r0.gate_passed and r0.converged
    assert r0.nearest_eigenvalue.real == pytest.approx(2 * math.pi ** 2, rel=0.02)
    r30 = spectral_gate(assemble(m, CoefficientSet.laplacian(30)))
    assert r30.gate_passed
    assert r30.nearest_eigenvalue.real == pytest.approx(2 * math.pi ** 2 - 30, rel=0.05)
    assert r30.gate_passed == (r30.converged and r30.distance_to_zero > r30.threshold)


def test_gate_non_self_adjoint_pencil():
    # -Laplace + b . grad with constant b = (beta, 0): eigenvalues shift by beta^2 / 4
    m = build_mesh(SQUARE, 1 / 24)
    beta = 2.0
    s = assemble(m, CoefficientSet(c=(beta, 0.0)))
    r = spectral_gate(s)
    assert r.gate_passed
    assert r.nearest_eigenvalue.real == pytest.approx(2 * math.pi ** 2 + beta ** 2 / 4, rel=0.03)


def test_coercive_gate_bound_is_below_the_spectrum():
    m = build_mesh(Disk((0, 0), 1), 1 / 16)
    s = assemble(m, CoefficientSet.laplacian())
    assert coercive_gate(s, m.region.diameter_bound()).distance_to_zero < spectral_gate(s).distance_to_zero


def test_solve_linearity():
    m = build_mesh(Disk((0, 0), 1), 1 / 16)
    s = assemble(m, CoefficientSet(b=(1j, 0.0), c0=-5.0))
    r = np.random.default_rng(2)
    n = len(m.interior_vertices)
    r1, r2 = r.standard_normal(n) + 1j * r.standard_normal(n), r.standard_normal(n)
    a = 0.3 - 2j
    lhs = solve(s, a * r1 + r2)
    rhs = a * solve(s, r1) + solve(s, r2)
    assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(lhs).max()


def test_gate_solve_coherence():
    m = build_mesh(SQUARE, 1 / 16)
    lam1 = spectral_gate(assemble(m, CoefficientSet.laplacian())).nearest_eigenvalue.real
    s = assemble(m, CoefficientSet.laplacian(lam1))
    gate = spectral_gate(s)
    assert not gate.gate_passed
    rhs = np.random.default_rng(3).standard_normal(len(m.interior_vertices))
    with pytest.raises(SingularSystem):
        solve(s, rhs, gate=gate)


def test_eigenvalue_converges_at_second_order():
    exact = 2 * math.pi ** 2
    errs = [abs(spectral_gate(assemble(build_mesh(SQUARE, 1 / n), CoefficientSet.laplacian())).nearest_eigenvalue
                - exact) for n in (16, 32, 64)]
    assert 3.4 < errs[0] / errs[1] < 4.6
    assert 3.4 < errs[1] / errs[2] < 4.6


def test_bicgstab_and_amg_routes_agree_with_lu():
    m = build_mesh(Disk((0, 0), 1), 1 / 32)
    s = assemble(m, CoefficientSet.laplacian())
    A_II, _ = s.interior()
    b = np.random.default_rng(4).standard_normal(A_II.shape[0])
    x = Factorization(A_II).solve(b)
    for method in ("bicgstab", "amg"):
        assert np.allclose(Factorization(A_II, method).solve(b), x, rtol=1e-8, atol=1e-10)


def test_resolvent_exhaustion():
    ref, levels = resolvent_exhaustion_check(SQUARE, CoefficientSet.laplacian(), lambda P: np.ones(len(P)),
                                             [0.2, 0.1, 0.05], 1 / 32)
    d = [lv.difference_l2 for lv in levels]
    assert d[0] > d[1] > d[2] > 0
    norms = [lv.resolvent_norm for lv in levels] + [ref]
    assert ref == pytest.approx(1 / (2 * math.pi ** 2), rel=0.01)
    assert max(norms) <= 1.01 * ref  # smaller domains have larger first eigenvalues
    _, tiny = resolvent_exhaustion_check(SQUARE, CoefficientSet.laplacian(), lambda P: np.ones(len(P)), [1e-18],
                                         1 / 16)
    assert tiny[0].difference_l2 > 0  # the level drops the boundary cell layer
