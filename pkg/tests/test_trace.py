import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perron_lab.assembly import CoefficientSet
from perron_lab.dirichlet import BoundaryData, DirichletSolver, Field
from perron_lab.mesh import boundary_sigma, build_mesh
from perron_lab.region import Disk, Rect
from perron_lab.trace import (MeshMismatch, TraceClass, UnderResolved, cantor_demo, cantor_demo_run, limit_weights,
                              trace_l2_distance, vanishing_trace_test)

SQUARE = Rect((0, 0), (1, 1))


@pytest.fixture(scope="module")
def square_mesh():
    return build_mesh(SQUARE, 1 / 32)


def test_exact_boundary_values_give_zero(square_mesh):
    m = square_mesh
    phi = BoundaryData.from_function(m, lambda P: P[:, 0] * P[:, 1])
    u = DirichletSolver(m, CoefficientSet.laplacian()).solve(phi).field
    assert trace_l2_distance(u, phi, m) == 0.0


def test_constant_one_against_zero(square_mesh):
    m = square_mesh
    assert trace_l2_distance(Field(m, np.ones(m.n_vertices)), BoundaryData.constant(m, 0.0), m) == \
        pytest.approx(2.0, rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(re=st.integers(-10 ** 6, 10 ** 6), im=st.integers(-10 ** 6, 10 ** 6), seed=st.integers(0, 999))
def test_homogeneity(re, im, seed):
    alpha = complex(re, im) / 1000
    m = build_mesh(SQUARE, 1 / 8)
    r = np.random.default_rng(seed)
    u = r.standard_normal(m.n_vertices)
    phi = BoundaryData(m, r.standard_normal(len(m.boundary_vertices)))
    base = trace_l2_distance(Field(m, u), phi, m)
    scaled = trace_l2_distance(Field(m, alpha * u), alpha * phi, m)
    assert scaled == pytest.approx(abs(alpha) * base, rel=1e-12)


def test_mesh_mismatch(square_mesh):
    other = build_mesh(SQUARE, 1 / 16)
    with pytest.raises(MeshMismatch):
        trace_l2_distance(Field(other, np.zeros(other.n_vertices)), None, square_mesh)
    with pytest.raises(MeshMismatch):
        vanishing_trace_test(Field(other, np.zeros(other.n_vertices)), square_mesh)


def test_vanishing_trace_classes(square_mesh):
    m = square_mesh
    x, y = m.vertices.T
    bump = Field(m, np.sin(np.pi * x) * np.sin(np.pi * y) * np.isin(np.arange(m.n_vertices), m.interior_vertices))
    assert vanishing_trace_test(bump, m) is TraceClass.IN_H10
    assert vanishing_trace_test(Field(m, np.ones(m.n_vertices)), m) is TraceClass.NONZERO_TRACE


def test_trace_bound_by_sup_and_sigma():
    m = build_mesh(Disk((0, 0), 1), 1 / 24)
    u = np.random.default_rng(5).standard_normal(m.n_vertices)
    assert trace_l2_distance(Field(m, u), None, m) <= np.abs(u).max() * math.sqrt(boundary_sigma(m))


def test_cantor_demo_small():
    run = cantor_demo_run(1, 1 / 24)
    rep = run.report
    assert rep.sigma_bar == pytest.approx(8 / 3)
    assert rep.field_sup == pytest.approx(1.0)
    assert 0 <= rep.trace_l2 <= rep.field_sup * math.sqrt(rep.sigma_total)
    assert rep.capacity_floor > 0 and rep.field_l2 > 0
    # with the true measures the bar carries weight and the trace does not vanish
    assert vanishing_trace_test(run.field, run.mesh) is TraceClass.NONZERO_TRACE
    assert run.limit_class is TraceClass.IN_V_NOT_H10
    w = limit_weights(run.mesh)
    assert set(np.unique(w)) == {0.0, 1.0}


def test_cantor_capacity_route_for_shifted_operator_agrees():
    a = cantor_demo(1, 1 / 24)
    b = cantor_demo(1, 1 / 24, coeffs=CoefficientSet.laplacian(0.5))
    assert b.capacity_floor == pytest.approx(a.capacity_floor, rel=1e-9)
    assert b.field_l2 > a.field_l2  # the shift raises the solution


def test_under_resolved():
    with pytest.raises(UnderResolved):
        cantor_demo(3, 1 / 27)
    with pytest.raises(UnderResolved):
        cantor_demo(0, 0.5)


def test_sup_bound_when_discrete_v_equals_h10():
    # on the square V and H^1_0 agree; sup |u| is bounded by twice the measured ratio times sup |phi|
    m = build_mesh(SQUARE, 1 / 32)
    solver = DirichletSolver(m, CoefficientSet.laplacian(10))
    r = np.random.default_rng(6)
    ratios, sups = [], []
    for _ in range(10):
        phi = BoundaryData(m, r.uniform(-1, 1, len(m.boundary_vertices)))
        rep = solver.solve(phi)
        ratios.append(rep.operator_norm_ratio)
        sups.append((rep.sup_norm, phi.sup_norm))
    C = max(ratios)
    assert all(s <= 2 * C * p for s, p in sups)
    bump = Field(m, np.where(m.is_boundary, 0.0, 1.0))
    assert vanishing_trace_test(bump, m) is TraceClass.IN_H10
