import numpy as np
import pytest

from quadcurl.mesh import (NonDivisibleMesh, build_mesh, classify_boundary,
                           macro_partition)


@pytest.mark.parametrize("n,cells,verts,edges,faces", [
    (1, 1, 8, 12, 6),
    (2, 8, 27, 54, 36),
    (6, 216, 343, 882, 756),
])
def test_entity_counts(n, cells, verts, edges, faces):
    m = build_mesh(n)
    assert (m.n_cells, m.n_vertices, m.n_edges, m.n_faces) == \
        (cells, verts, edges, faces)


def test_closed_form_counts_small_n():
    for n in range(1, 9):
        m = build_mesh(n)
        assert m.n_edges == 3 * n * (n + 1) ** 2
        assert m.n_faces == 3 * n**2 * (n + 1)
        assert m.h_diag == pytest.approx(np.sqrt(3.0) / n)


@pytest.mark.parametrize("n,iv,ie,iface", [
    (1, 0, 0, 0),
    (2, 1, 6, 12),
    (3, 8, 36, 54),
])
def test_interior_counts(n, iv, ie, iface):
    m = build_mesh(n)
    flags = classify_boundary(m)
    assert (~flags["vertices"]).sum() == iv
    assert (~flags["edges"]).sum() == ie
    assert (~flags["faces"]).sum() == iface
    # per-axis closed forms
    for axis in range(3):
        sel = m.edge_table[:, 0] == axis
        assert (~m.edge_is_boundary[sel]).sum() == n * (n - 1) ** 2
        self_f = m.face_table[:, 0] == axis
        assert (~m.face_is_boundary[self_f]).sum() == n**2 * (n - 1)


def test_rejects_empty_mesh():
    with pytest.raises(ValueError):
        build_mesh(0)


def test_interior_edge_shared_by_four_cells():
    m = build_mesh(3)
    counts = np.zeros(m.n_edges, dtype=int)
    for row in m.cell_edges:
        counts[row] += 1
    interior = ~m.edge_is_boundary
    assert np.all(counts[interior] == 4)


def test_interior_face_shared_by_two_cells():
    m = build_mesh(3)
    counts = np.zeros(m.n_faces, dtype=int)
    for row in m.cell_faces:
        counts[row] += 1
    assert np.all(counts[~m.face_is_boundary] == 2)
    assert np.all(counts[m.face_is_boundary] == 1)


def test_macro_partition_single_block():
    m = build_mesh(3)
    part = macro_partition(m)
    assert part.n_macros == 1
    assert part.macro_edges.shape == (1, 144)
    assert part.macro_faces.shape == (1, 108)
    assert sorted(part.macro_cells[0]) == list(range(27))


def test_macro_partition_eight_blocks():
    part = macro_partition(build_mesh(6))
    assert part.n_macros == 8
    # disjoint cover
    all_cells = np.sort(part.macro_cells.reshape(-1))
    assert np.array_equal(all_cells, np.arange(216))


def test_macro_partition_rejects_nondivisible():
    with pytest.raises(NonDivisibleMesh):
        macro_partition(build_mesh(4))


def test_cell_tables_consistent_with_entity_tables():
    m = build_mesh(2)
    # the first cell's low-corner vertex is (0,0,0) and its x-edges sit at
    # lattice (0, dy, dz)
    assert m.cell_vertices[0, 0] == m.vertex_id(0, 0, 0)
    assert m.cell_edges[0, 0] == m.edge_id(0, 0, 0, 0)
    assert m.cell_faces[0, 0] == m.face_id(0, 0, 0, 0)
    assert m.cell_faces[0, 1] == m.face_id(0, 1, 0, 0)


def test_centers_and_sizes():
    m = build_mesh(4)
    assert m.h_axis == (0.25, 0.25, 0.25)
    c0 = m.cell_centers[m.cell_id(1, 2, 3)]
    assert np.allclose(c0, [0.375, 0.625, 0.875])
