import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CENTER, RADIUS
from ivem import (
    CircleInterface,
    FunctionInterface,
    Label,
    LineInterface,
    build_uniform_mesh,
    classify_elements,
    compute_cut,
    cut_mesh,
)
from ivem.errors import GeometryError
from ivem.mesh_geometry import dump_mesh, hausdorff_to_circle, vertex_signs
from ivem.quadrature import polygon_area


@pytest.mark.parametrize("n", [2, 3, 8, 16])
def test_uniform_mesh_counts(n):
    mesh = build_uniform_mesh(n=n)
    assert mesh.n_vertices == (n + 1) ** 2
    assert mesh.n_triangles == 2 * n * n
    assert mesh.n_edges == 3 * n * n + 2 * n
    assert np.count_nonzero(mesh.boundary_edges) == 4 * n
    assert mesh.h == pytest.approx(np.sqrt(2.0) / n)
    assert mesh.triangle_areas().sum() == pytest.approx(1.0)
    assert np.all(mesh.triangle_areas() > 0)


def test_uniform_mesh_rejects_n1():
    with pytest.raises(ValueError):
        build_uniform_mesh(n=1)


def test_edge_connectivity_consistent():
    mesh = build_uniform_mesh(n=4)
    for t, tri in enumerate(mesh.triangles):
        for k in range(3):
            e = mesh.tri_edges[t, k]
            assert set(mesh.edges[e]) == {tri[k], tri[(k + 1) % 3]}
            assert t in mesh.edge_tris[e]


def brute_force_labels(mesh, ls, samples=12):
    """Sign of the level set on a dense barycentric lattice of every triangle."""
    lam = [(i, j, samples - i - j) for i in range(samples + 1) for j in range(samples + 1 - i)]
    bary = np.array(lam, dtype=float) / samples
    pts = np.einsum("qk,tkd->tqd", bary, mesh.vertices[mesh.triangles])
    vals = ls.evaluate(pts.reshape(-1, 2)).reshape(pts.shape[:2])
    out = np.full(len(mesh.triangles), int(Label.INTERFACE))
    out[np.all(vals > 0, axis=1)] = Label.PLUS
    out[np.all(vals < 0, axis=1)] = Label.MINUS
    return out


def test_classification_matches_sampling(circle):
    mesh = build_uniform_mesh(n=16)
    labels = classify_elements(mesh, circle)
    assert np.array_equal(labels, brute_force_labels(mesh, circle))
    assert np.count_nonzero(labels == Label.INTERFACE) > 0


def test_line_cut_example():
    mesh = build_uniform_mesh(n=2)
    line = LineInterface((0.0, 0.25), (0.0, 1.0))
    imesh = cut_mesh(mesh, line)
    for cut in imesh.cuts.values():
        assert cut.area_plus + cut.area_minus == pytest.approx(cut.area, abs=1e-15)
        assert np.allclose(cut.n_bar, [0.0, 1.0])
        assert np.allclose(cut.cut_points[:, 1], 0.25)
    t = 0
    cut = imesh.cuts[t]
    # lower-left triangle (0,0),(0.5,0),(0.5,0.5): the line y = 0.25 halves its height
    assert cut.area == pytest.approx(0.125)
    assert cut.area_plus == pytest.approx(0.125 / 4)
    assert cut.area_minus == pytest.approx(0.125 * 3 / 4)


def test_single_triangle_line_example():
    from ivem.mesh_geometry import BackgroundMesh, _connectivity

    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2]])
    edges, tri_edges, edge_tris = _connectivity(tris, 3)
    mesh = BackgroundMesh(verts, tris, edges, tri_edges, edge_tris, (0.0, 1.0, 0.0, 1.0), np.sqrt(2.0))
    cut = compute_cut(mesh, 0, LineInterface((0.0, 0.5), (0.0, 1.0)))
    assert np.allclose(cut.nodes, [[0, 0], [1, 0], [0.5, 0.5], [0, 1], [0, 0.5]])
    assert cut.area_plus == pytest.approx(0.125)
    assert cut.area_minus == pytest.approx(0.375)
    assert np.allclose(cut.n_bar, [0.0, 1.0])
    assert np.allclose(cut.t_bar, [-1.0, 0.0])


def test_cut_points_on_circle(imesh16):
    for cut in imesh16.cuts.values():
        r = np.hypot(*(cut.cut_points - np.asarray(CENTER)).T)
        assert np.allclose(r, RADIUS, atol=1e-13)


def test_segment_hausdorff_is_second_order(circle):
    dists = []
    for n in (8, 16, 32):
        imesh = cut_mesh(build_uniform_mesh(n=n), circle)
        dists.append(max(hausdorff_to_circle(c, CENTER, RADIUS) for c in imesh.cuts.values()))
    rates = np.log2(np.array(dists[:-1]) / np.array(dists[1:]))
    assert np.all(rates > 1.7)


def test_subpolygons_partition_element(imesh16):
    for cut in imesh16.cuts.values():
        assert polygon_area(cut.sub_plus) > 0 and polygon_area(cut.sub_minus) > 0
        assert cut.area_plus + cut.area_minus == pytest.approx(cut.area, rel=1e-13)
        # n_bar points into the plus region
        cen_p = cut.sub_plus.mean(axis=0)
        assert (cen_p - cut.x_m) @ cut.n_bar > 0
        assert abs((cut.cut_points[1] - cut.cut_points[0]) @ cut.n_bar) < 1e-14


def test_cut_cache_is_canonical(imesh16):
    """Neighbouring elements share bit-identical cut points on their common edge."""
    seen = {}
    for cut in imesh16.cuts.values():
        for key, node in zip(cut.node_keys, cut.nodes):
            if key < 0:
                if key in seen:
                    assert np.array_equal(seen[key], node)
                seen[key] = node


def test_vertex_snapping_gives_four_node_element():
    mesh = build_uniform_mesh(n=4)
    # a line through the mesh vertex (0.25, 0.25) that crosses no mesh edge along its length
    line = LineInterface((0.25, 0.25), (1.0, 0.2))
    sign, _ = vertex_signs(mesh, line)
    v = np.argmin(np.hypot(*(mesh.vertices - [0.25, 0.25]).T))
    assert sign[v] == 0
    imesh = cut_mesh(mesh, line)
    with_vertex = [c for c in imesh.cuts.values() if v in c.node_keys]
    assert with_vertex
    assert any(c.n_nodes == 4 for c in with_vertex)


def test_compute_cut_rejects_uncut(circle):
    mesh = build_uniform_mesh(n=8)
    labels = classify_elements(mesh, circle)
    t = int(np.nonzero(labels == Label.PLUS)[0][0])
    with pytest.raises(GeometryError):
        compute_cut(mesh, t, circle)


def test_function_interface_matches_circle(circle):
    c = np.asarray(CENTER)
    f = FunctionInterface(lambda x: np.hypot(*(np.asarray(x) - c).T) - RADIUS,
                          lambda x: (np.asarray(x) - c) / np.hypot(*(np.asarray(x) - c).T)[:, None])
    mesh = build_uniform_mesh(n=8)
    assert np.array_equal(classify_elements(mesh, f), classify_elements(mesh, circle))


def test_dump_format(imesh8):
    text = dump_mesh(imesh8)
    lines = text.splitlines()
    kinds = [ln.split()[0] for ln in lines]
    assert kinds.count("v") == imesh8.mesh.n_vertices
    assert kinds.count("t") == imesh8.mesh.n_triangles
    assert kinds.count("cut") == len(imesh8.cuts)
    assert all(len(ln.split()) == 6 for ln in lines if ln.startswith("cut"))
    assert text.endswith("\n")


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 0.8), st.floats(0.2, 0.8), st.floats(0.05, 0.35))
def test_random_circles_partition(cx, cy, r):
    imesh = cut_mesh(build_uniform_mesh(n=8), CircleInterface((cx, cy), r))
    total_minus = sum(c.area_minus for c in imesh.cuts.values())
    total_minus += imesh.mesh.triangle_areas()[imesh.labels == Label.MINUS].sum()
    # area inside Gamma_h approximates the disk area (clipped to the square) to O(h^2)
    if cx - r > 0 and cx + r < 1 and cy - r > 0 and cy + r < 1:
        assert total_minus == pytest.approx(np.pi * r * r, abs=2 * np.pi * r * imesh.h**2)
