"""Discrete error norms, superclose/superconvergence quantities and EOC tables.

Errors against the exact (trigonometric) solution are integrated per cell with
tensor Gauss rules; differences of two discrete fields are integrated exactly
through the reference Gram matrices, which keeps quadrature noise out of the
superclose quantity (the smallest number in the study).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import NonDivisibleMesh
from .polyquad import gauss_rule
from .spaces import (dual_curl_table, dual_gradcurl_table, dual_gram_matrices,
                     dual_value_table, reference_spaces)


class DegenerateError(Exception):
    """EOC undefined: an error value is zero or negative."""


@dataclass(frozen=True)
class ErrorTriple:
    """(|curl_h e|_{1,h}, ||curl_h e||_0, ||e||_0)."""

    curl_h1: float
    curl_l2: float
    l2: float

    def as_tuple(self):
        return (self.curl_h1, self.curl_l2, self.l2)


_TABLE_CACHE = {}


def _cell_tables(q):
    """Reference VK dual tables at the q^3 box points, cached per order."""
    key = ("cell", q)
    if key not in _TABLE_CACHE:
        pts, wts = gauss_rule(q).box((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))
        vk = reference_spaces()["VK"]
        _TABLE_CACHE[key] = {
            "pts": pts, "wts": wts,
            "val": dual_value_table(vk, pts),
            "curl": dual_curl_table(vk, pts),
            "gc": dual_gradcurl_table(vk, pts),
        }
    return _TABLE_CACHE[key]


def _macro_tables(q):
    """VM dual tables at every fine-cell quadrature point of the macro frame.

    Arrays are indexed (fine cell 0..26, dof, point, ...); fine cells follow
    the (a, b, c) lexicographic order of MacroPartition.macro_cells.
    """
    key = ("macro", q)
    if key not in _TABLE_CACHE:
        pts, wts = gauss_rule(q).box((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))
        vm = reference_spaces()["VM"]
        nq = len(pts)
        # all 27 fine-cell grids stacked into one evaluation per dual field
        grids = []
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    lat = np.array([a, b, c], dtype=float)
                    grids.append((lat + 0.5) / 3.0 - 0.5 + pts / 3.0)
        mpts = np.concatenate(grids, axis=0)

        def split(table, extra):
            return np.moveaxis(table.reshape((vm.dim, 27, nq) + extra), 0, 1)

        val = split(dual_value_table(vm, mpts), (3,))
        curl = split(dual_curl_table(vm, mpts), (3,))
        gc = split(dual_gradcurl_table(vm, mpts), (3, 3))
        _TABLE_CACHE[key] = {"pts": pts, "wts": wts, "val": val,
                             "curl": curl, "gc": gc}
    return _TABLE_CACHE[key]


def _gather_ref_coeffs(u_vec, gmap, cells):
    """Per-cell reference DoF values; eliminated boundary DoFs read as zero."""
    cols = gmap.cell_vdofs[cells]
    vals = np.where(cols >= 0, u_vec[np.clip(cols, 0, None)], 0.0)
    return vals


def error_vs_exact(u_vec, exact, mesh, gmap, q=6, chunk=1024):
    """Error triple of a V_h coefficient vector against the exact solution."""
    tab = _cell_tables(q)
    h = mesh.h_axis[0]
    pts, wts = tab["pts"], tab["wts"]
    acc = np.zeros(3)
    for start in range(0, mesh.n_cells, chunk):
        cells = slice(start, min(start + chunk, mesh.n_cells))
        d = _gather_ref_coeffs(u_vec, gmap, cells) / h   # reference dof values
        centers = mesh.cell_centers[cells]
        P = (centers[:, None, :] + h * pts[None, :, :]).reshape(-1, 3)

        uh = np.einsum("ci,igk->cgk", d, tab["val"])
        diff = uh - exact.u_value(P).reshape(uh.shape)
        acc[2] += h**3 * np.einsum("cgk,g->", diff**2, wts)

        ch = np.einsum("ci,igk->cgk", d, tab["curl"]) / h
        diff = ch - exact.curl_u_value(P).reshape(ch.shape)
        acc[1] += h**3 * np.einsum("cgk,g->", diff**2, wts)

        gch = np.einsum("ci,igkl->cgkl", d, tab["gc"]) / h**2
        diff = gch - exact.grad_curl_u_value(P).reshape(gch.shape)
        acc[0] += h**3 * np.einsum("cgkl,g->", diff**2, wts)
    return ErrorTriple(*np.sqrt(acc))


def discrete_norms(vec, mesh, gmap):
    """Exact norms of a V_h coefficient vector via the reference Gram triple."""
    vk = reference_spaces()["VK"]
    M0, M1, M2 = dual_gram_matrices(vk)
    h = mesh.h_axis[0]
    d = _gather_ref_coeffs(vec, gmap, slice(None)) / h
    n0 = h**3 * np.einsum("ci,ij,cj->", d, M0, d)
    n1 = h * np.einsum("ci,ij,cj->", d, M1, d)
    n2 = (1.0 / h) * np.einsum("ci,ij,cj->", d, M2, d)
    return ErrorTriple(math.sqrt(max(n2, 0.0)), math.sqrt(max(n1, 0.0)),
                       math.sqrt(max(n0, 0.0)))


def superclose_error(u_vec, ihu_vec, mesh, gmap):
    """Norms of I_h u - u_h, exact in coefficient space."""
    return discrete_norms(ihu_vec - u_vec, mesh, gmap)


def superconvergent_error(macro_field, exact, mesh, q=6, chunk=64):
    """Error triple of the postprocessed field against the exact solution,
    integrated per fine cell."""
    part = macro_field.partition
    if part.mesh.n != mesh.n:
        raise NonDivisibleMesh("macro partition does not match the mesh")
    tab = _macro_tables(q)
    h = mesh.h_axis[0]
    H = part.macro_size
    pts, wts = tab["pts"], tab["wts"]
    acc = np.zeros(3)
    for start in range(0, part.n_macros, chunk):
        macros = slice(start, min(start + chunk, part.n_macros))
        coef = macro_field.coeffs[macros]
        centers = part.macro_centers[macros]
        cell_ids = part.macro_cells[macros]
        centers_fine = mesh.cell_centers[cell_ids]       # (M, 27, 3)
        P = (centers_fine[:, :, None, :] + h * pts[None, None, :, :]).reshape(-1, 3)

        vals = np.einsum("mi,cigk->mcgk", coef, tab["val"])
        diff = vals - exact.u_value(P).reshape(vals.shape)
        acc[2] += h**3 * np.einsum("mcgk,g->", diff**2, wts)

        curls = np.einsum("mi,cigk->mcgk", coef, tab["curl"]) / H
        diff = curls - exact.curl_u_value(P).reshape(curls.shape)
        acc[1] += h**3 * np.einsum("mcgk,g->", diff**2, wts)

        gcs = np.einsum("mi,cigkl->mcgkl", coef, tab["gc"]) / H**2
        diff = gcs - exact.grad_curl_u_value(P).reshape(gcs.shape)
        acc[0] += h**3 * np.einsum("mcgkl,g->", diff**2, wts)
    return ErrorTriple(*np.sqrt(acc))


def compute_eoc(rows):
    """EOC columns between consecutive rows of (n, ErrorTriple).

    eoc = log(e1 / e2) / log(n2 / n1); the first row gets NaNs.
    """
    if len(rows) < 1:
        raise DegenerateError("need at least one row")
    out = [np.full(3, np.nan)]
    for (n1, e1), (n2, e2) in zip(rows, rows[1:]):
        cols = []
        for a, b in zip(e1.as_tuple(), e2.as_tuple()):
            if a <= 0.0 or b <= 0.0:
                raise DegenerateError(f"nonpositive error in EOC: {a}, {b}")
            cols.append(math.log(a / b) / math.log(n2 / n1))
        out.append(np.array(cols))
    return out


@dataclass
class ConvergenceReport:
    """Per-n error triples with EOC columns, serializable to CSV/Markdown."""

    scheme: str
    quantity: str
    rows: list = field(default_factory=list)   # [(n, ErrorTriple)]

    def add(self, n, triple):
        self.rows.append((int(n), triple))

    @property
    def eocs(self):
        return compute_eoc(self.rows)

    def to_csv(self):
        lines = ["n,err1,eoc1,err2,eoc2,err3,eoc3"]
        for (n, e), eoc in zip(self.rows, self.eocs):
            cells = [str(n)]
            for val, order in zip(e.as_tuple(), eoc):
                cells.append(f"{val:.6E}")
                cells.append("" if np.isnan(order) else f"{order:.4f}")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_markdown(self):
        heads = {
            "errors": ("|curl_h(u-u_h)|_{1,h}", "||curl_h(u-u_h)||_0",
                       "||u-u_h||_0"),
            "superclose": ("|curl_h(I_h u-u_h)|_{1,h}",
                           "||curl_h(I_h u-u_h)||_0", "||I_h u-u_h||_0"),
            "superconv": ("|curl_h(u-I3h u_h)|_{1,h}",
                          "||curl_h(u-I3h u_h)||_0", "||u-I3h u_h||_0"),
        }
        h1, h2, h3 = heads.get(self.quantity,
                               ("err1", "err2", "err3"))
        lines = [f"| n | {h1} | order | {h2} | order | {h3} | order |",
                 "|---|---|---|---|---|---|---|"]
        for (n, e), eoc in zip(self.rows, self.eocs):
            cells = [str(n)]
            for val, order in zip(e.as_tuple(), eoc):
                cells.append(f"{val:.3E}")
                cells.append("" if np.isnan(order) else f"{order:.2f}")
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    def save(self, directory, fmt="both"):
        """Write report files; returns the list of paths written."""
        import os
        os.makedirs(directory, exist_ok=True)
        stem = f"{self.scheme}_{self.quantity}"
        written = []
        if fmt in ("csv", "both"):
            path = os.path.join(directory, stem + ".csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(self.to_csv())
            written.append(path)
        if fmt in ("markdown", "both"):
            path = os.path.join(directory, stem + ".md")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(self.to_markdown())
            written.append(path)
        return written
