import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perron_lab.mesh import EmptyMesh, ProbeOutside, boundary_sigma, build_mesh, cantor_sigma, exhaustion_mesh, \
    sigma_by_component
from perron_lab.region import CantorBar, Disk, Point, Rect, Union


def check_mesh_invariants(mesh, region):
    assert np.all(mesh.areas > 0)
    e = np.sort(np.vstack([mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]], mesh.triangles[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert set(counts) <= {1, 2}
    assert np.sum(counts == 1) == len(mesh.boundary_edges)
    both = np.concatenate([mesh.boundary_vertices, mesh.interior_vertices])
    assert np.array_equal(np.sort(both), np.arange(mesh.n_vertices))
    assert np.all(region.contains(mesh.centroids))
    assert np.all(region.contains(mesh.vertices[mesh.interior_vertices]))
    assert np.all(region.closure_corner(mesh.vertices))


def test_single_cell():
    m = build_mesh(Rect((0, 0), (1, 1)), 1.0)
    assert (m.n_triangles, m.n_vertices) == (2, 4)


def test_two_by_two_cells():
    m = build_mesh(Rect((0, 0), (1, 1)), 0.5)
    assert (m.n_triangles, m.n_vertices) == (8, 9)
    assert list(m.interior_vertices) == [4]


def test_disk_mesh_inside():
    d = Disk((0, 0), 1)
    m = build_mesh(d, 0.05)
    check_mesh_invariants(m, d)
    assert np.all(np.hypot(*m.vertices.T) <= 1 + 1e-15)


@pytest.mark.parametrize("region", [Rect((0, 0), (1, 1)), Disk((0, 0), 2) - CantorBar(2, -1, 1),
                                    Disk((0, 0), 1) - Point((0, 0)),
                                    Union(Disk((0, 0), 1), Rect((0.5, -0.25), (1.75, 0.25)))])
def test_mesh_invariants(region):
    check_mesh_invariants(build_mesh(region, 1 / 18), region)


def test_counterclockwise_orientation():
    m = build_mesh(Rect((0, 0), (1, 1)), 0.25)
    p = m.vertices[m.triangles]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    assert np.all(cross > 0)


def test_precondition_and_empty():
    with pytest.raises(ValueError):
        build_mesh(Rect((0, 0), (1, 1)), 2.0)
    with pytest.raises(ValueError):
        build_mesh(Rect((0, 0), (1, 1)), -0.1)
    with pytest.raises(EmptyMesh):
        build_mesh(Disk((0.5, 0.5), 0.3), 0.5)


@settings(max_examples=15, deadline=None)
@given(n=st.integers(2, 24), x1=st.integers(1, 4), y1=st.integers(1, 4))
def test_euler_characteristic(n, x1, y1):
    m = build_mesh(Rect((0, 0), (x1, y1)), 1 / n)
    assert m.n_vertices - len(m.edges()) + m.n_triangles == 1


def test_euler_annulus_has_one_hole():
    m = build_mesh(Disk((0, 0), 1) - Disk((0, 0), 0.3), 1 / 32)
    assert m.n_vertices - len(m.edges()) + m.n_triangles == 0


@pytest.mark.parametrize("n", [2, 5, 8])
def test_refinement_subset(n):
    r = Rect((0, 0), (2, 1))
    coarse = {tuple(v) for v in build_mesh(r, 1 / n).vertices}
    fine = {tuple(v) for v in build_mesh(r, 1 / (2 * n)).vertices}
    assert coarse <= fine


def test_exhaustion_example():
    m = exhaustion_mesh(Rect((0, 0), (1, 1)), 1 / 8, 0.3)
    assert m.n_triangles == 8
    assert np.all((m.vertices >= 0.3 - 1e-15) & (m.vertices <= 0.7 + 1e-15))


def test_exhaustion_nested_and_tiny_delta():
    sq = Rect((0, 0), (1, 1))
    c2 = {tuple(c) for c in exhaustion_mesh(sq, 1 / 32, 0.2).cells}
    c3 = {tuple(c) for c in exhaustion_mesh(sq, 1 / 32, 0.3).cells}
    assert c3 <= c2
    full = build_mesh(sq, 1 / 16)
    tiny = exhaustion_mesh(sq, 1 / 16, 1e-18)
    touching = full.keys[full.boundary_vertices]
    tset = {tuple(t) for t in touching}
    keep = {tuple(c) for c in full.cells
            if not ({(c[0], c[1]), (c[0] + 1, c[1]), (c[0], c[1] + 1), (c[0] + 1, c[1] + 1)} & tset)}
    assert {tuple(c) for c in tiny.cells} == keep
    with pytest.raises(ValueError):
        exhaustion_mesh(sq, 1 / 16, 0.0)


def test_boundary_sigma_square_and_disk():
    for n in (4, 16, 64):
        assert boundary_sigma(build_mesh(Rect((0, 0), (1, 1)), 1 / n)) == pytest.approx(4.0, abs=1e-12)
    # whole-cell meshes have axis-aligned staircase boundaries, whose length tends to the
    # total variation 8 of the unit circle rather than to 2 pi
    perims = [boundary_sigma(build_mesh(Disk((0, 0), 1), 1 / n)) for n in (32, 128)]
    assert perims[1] == pytest.approx(8.0, rel=0.02)
    assert abs(perims[1] - 8) <= abs(perims[0] - 8)


def test_cantor_sigma_values():
    assert cantor_sigma(0) == 4.0
    assert cantor_sigma(3) == pytest.approx(32 / 27, rel=1e-15)
    assert [cantor_sigma(k) for k in range(1, 12)] == sorted([cantor_sigma(k) for k in range(1, 12)], reverse=True)


def test_sigma_additivity():
    region = Disk((0, 0), 2) - CantorBar(2, -1, 1)
    m = build_mesh(region, 1 / 54)
    parts = sigma_by_component(m)
    assert math.fsum(p.mesh_length for p in parts.values()) == pytest.approx(boundary_sigma(m), rel=1e-15)
    assert parts[1].exact == cantor_sigma(2)


def test_interpolation_reproduces_linear_field():
    m = build_mesh(Disk((0, 0), 1), 1 / 16)
    f = 2 * m.vertices[:, 0] - 3 * m.vertices[:, 1] + 1
    P = np.array([[0.1, 0.2], [-0.3, 0.05], [0.0, 0.0]])
    assert np.allclose(m.interpolate(f, P), 2 * P[:, 0] - 3 * P[:, 1] + 1)
    with pytest.raises(ProbeOutside):
        m.interpolate(f, [[2.0, 0.0]])


def test_deterministic_build():
    a = build_mesh(Disk((0, 0), 2) - CantorBar(2, -1, 1), 1 / 27)
    b = build_mesh(Disk((0, 0), 2) - CantorBar(2, -1, 1), 1 / 27)
    assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.triangles, b.triangles)
    assert a.region_id == b.region_id
