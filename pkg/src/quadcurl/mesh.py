"""Structured uniform brick partition of the unit cube.

Global entity numbering is axis-major and lexicographic so DoF layouts are
reproducible.  Orientation is fixed globally: every edge tangent and face
normal is the positive coordinate axis direction, which keeps shared DoFs
single-valued without sign bookkeeping.
"""

from __future__ import annotations

import numpy as np


class NonDivisibleMesh(Exception):
    """Macroelement partition requested on a mesh with n not divisible by 3."""


def edge_lattice_order(n):
    """Canonical edge enumeration of an n x n x n partition.

    Returns an integer array of rows ``(axis, i, j, k)`` where the coordinate
    along ``axis`` runs over ``[0, n)`` and the two transverse coordinates over
    ``[0, n]``.  Row position equals the global edge id.
    """
    rows = []
    for axis in range(3):
        dims = [n + 1, n + 1, n + 1]
        dims[axis] = n
        for i in range(dims[0]):
            for j in range(dims[1]):
                for k in range(dims[2]):
                    rows.append((axis, i, j, k))
    return np.array(rows, dtype=np.int64)


def face_lattice_order(n):
    """Canonical face enumeration; ``axis`` is the normal direction.

    The normal coordinate runs over ``[0, n]`` and the two in-plane
    coordinates over ``[0, n)``.  Row position equals the global face id.
    """
    rows = []
    for axis in range(3):
        dims = [n, n, n]
        dims[axis] = n + 1
        for i in range(dims[0]):
            for j in range(dims[1]):
                for k in range(dims[2]):
                    rows.append((axis, i, j, k))
    return np.array(rows, dtype=np.int64)


class BrickMesh:
    """Uniform n x n x n partition of [0,1]^3 with indexed entities.

    Immutable after construction; all index tables are plain numpy arrays.
    """

    def __init__(self, n):
        if n < 1:
            raise ValueError("mesh subdivisions must be >= 1")
        self.n = int(n)
        h = 1.0 / n
        self.h_axis = (h, h, h)
        self.h_diag = float(np.sqrt(3.0)) * h

        self.n_cells = n**3
        self.n_vertices = (n + 1) ** 3
        self.edges_per_axis = n * (n + 1) ** 2
        self.faces_per_axis = n**2 * (n + 1)
        self.n_edges = 3 * self.edges_per_axis
        self.n_faces = 3 * self.faces_per_axis

        self._build_entity_tables()
        self._build_cell_tables()
        flags = classify_boundary(self)
        self.vertex_is_boundary = flags["vertices"]
        self.edge_is_boundary = flags["edges"]
        self.face_is_boundary = flags["faces"]

    # -- entity lattice tables -------------------------------------------

    def _build_entity_tables(self):
        n = self.n
        self.edge_table = edge_lattice_order(n)   # (n_edges, 4): axis,i,j,k
        self.face_table = face_lattice_order(n)   # (n_faces, 4)
        iv, jv, kv = np.meshgrid(np.arange(n + 1), np.arange(n + 1),
                                 np.arange(n + 1), indexing="ij")
        self.vertex_table = np.stack(
            [iv.reshape(-1), jv.reshape(-1), kv.reshape(-1)], axis=1)

    def vertex_id(self, i, j, k):
        n1 = self.n + 1
        return (np.asarray(i) * n1 + np.asarray(j)) * n1 + np.asarray(k)

    def cell_id(self, i, j, k):
        n = self.n
        return (np.asarray(i) * n + np.asarray(j)) * n + np.asarray(k)

    def edge_id(self, axis, i, j, k):
        """Global id of the edge parallel to ``axis`` at lattice (i, j, k)."""
        n = self.n
        dims = [n + 1, n + 1, n + 1]
        dims[axis] = n
        within = (np.asarray(i) * dims[1] + np.asarray(j)) * dims[2] + np.asarray(k)
        return axis * self.edges_per_axis + within

    def face_id(self, axis, i, j, k):
        """Global id of the face with normal ``axis`` at lattice (i, j, k)."""
        n = self.n
        dims = [n, n, n]
        dims[axis] = n + 1
        within = (np.asarray(i) * dims[1] + np.asarray(j)) * dims[2] + np.asarray(k)
        return axis * self.faces_per_axis + within

    # -- per-cell connectivity ---------------------------------------------

    def _build_cell_tables(self):
        n = self.n
        ci, cj, ck = np.meshgrid(np.arange(n), np.arange(n), np.arange(n),
                                 indexing="ij")
        ci = ci.reshape(-1)
        cj = cj.reshape(-1)
        ck = ck.reshape(-1)
        self.cell_lattice = np.stack([ci, cj, ck], axis=1)
        h = self.h_axis[0]
        self.cell_centers = (self.cell_lattice + 0.5) * h

        # 12 edges, axis-major; transverse offsets in lexicographic order
        cols = []
        for d1 in (0, 1):
            for d2 in (0, 1):
                cols.append(self.edge_id(0, ci, cj + d1, ck + d2))
        for d1 in (0, 1):
            for d2 in (0, 1):
                cols.append(self.edge_id(1, ci + d1, cj, ck + d2))
        for d1 in (0, 1):
            for d2 in (0, 1):
                cols.append(self.edge_id(2, ci + d1, cj + d2, ck))
        self.cell_edges = np.stack(cols, axis=1)

        # 6 faces: (low, high) per axis
        self.cell_faces = np.stack([
            self.face_id(0, ci, cj, ck), self.face_id(0, ci + 1, cj, ck),
            self.face_id(1, ci, cj, ck), self.face_id(1, ci, cj + 1, ck),
            self.face_id(2, ci, cj, ck), self.face_id(2, ci, cj, ck + 1),
        ], axis=1)

        # 8 vertices, local id = dx*4 + dy*2 + dz
        cols = []
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    cols.append(self.vertex_id(ci + dx, cj + dy, ck + dz))
        self.cell_vertices = np.stack(cols, axis=1)


def build_mesh(n):
    """Build the uniform n x n x n brick mesh of the unit cube."""
    if n < 1:
        raise ValueError("mesh subdivisions must be >= 1")
    return BrickMesh(n)


def classify_boundary(mesh):
    """Boundary flags per entity; an entity is boundary iff it lies in the
    closure of the cube boundary."""
    n = mesh.n
    vt = mesh.vertex_table
    v_bdry = np.any((vt == 0) | (vt == n), axis=1)

    et = mesh.edge_table
    e_bdry = np.zeros(mesh.n_edges, dtype=bool)
    for axis in range(3):
        sel = et[:, 0] == axis
        trans = [a for a in range(3) if a != axis]
        lat = et[sel][:, 1:]
        flag = np.zeros(sel.sum(), dtype=bool)
        for t in trans:
            flag |= (lat[:, t] == 0) | (lat[:, t] == n)
        e_bdry[sel] = flag

    ft = mesh.face_table
    f_bdry = np.zeros(mesh.n_faces, dtype=bool)
    for axis in range(3):
        sel = ft[:, 0] == axis
        lat = ft[sel][:, 1:]
        f_bdry[sel] = (lat[:, axis] == 0) | (lat[:, axis] == n)

    return {"vertices": v_bdry, "edges": e_bdry, "faces": f_bdry}


class MacroPartition:
    """Disjoint tiling of the mesh into 3 x 3 x 3 macroelements.

    ``macro_edges`` and ``macro_faces`` list the fine entities of each macro in
    the canonical local order of :func:`edge_lattice_order` /
    :func:`face_lattice_order` at n = 3, which is the DoF order of the macro
    element spaces.
    """

    def __init__(self, mesh):
        n = mesh.n
        if n % 3 != 0:
            raise NonDivisibleMesh(
                f"macro partition needs n divisible by 3, got n={n}")
        m = n // 3
        self.mesh = mesh
        self.n_macros = m**3
        self.m = m

        mi, mj, mk = np.meshgrid(np.arange(m), np.arange(m), np.arange(m),
                                 indexing="ij")
        self.macro_lattice = np.stack(
            [mi.reshape(-1), mj.reshape(-1), mk.reshape(-1)], axis=1)
        base = self.macro_lattice * 3
        H = 3.0 * mesh.h_axis[0]
        self.macro_centers = (self.macro_lattice + 0.5) * H
        self.macro_size = H

        # 27 cells per macro, local (a,b,c) lexicographic
        cells = []
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    cells.append(mesh.cell_id(base[:, 0] + a, base[:, 1] + b,
                                              base[:, 2] + c))
        self.macro_cells = np.stack(cells, axis=1)

        eorder = edge_lattice_order(3)
        cols = [mesh.edge_id(int(ax), base[:, 0] + i, base[:, 1] + j,
                             base[:, 2] + k)
                for ax, i, j, k in eorder]
        self.macro_edges = np.stack(cols, axis=1)

        forder = face_lattice_order(3)
        cols = [mesh.face_id(int(ax), base[:, 0] + i, base[:, 1] + j,
                             base[:, 2] + k)
                for ax, i, j, k in forder]
        self.macro_faces = np.stack(cols, axis=1)


def macro_partition(mesh):
    """Macroelement partition of the mesh; raises NonDivisibleMesh unless
    n is a multiple of 3."""
    return MacroPartition(mesh)
