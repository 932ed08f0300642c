"""Element spaces on the scaled reference cell, with DoF functionals and dual bases.

Six spaces are built here:

* ``WK``  -- the 18-dim nonconforming brick space with face-integral DoFs,
* ``VK``  -- the 24-dim grad-curl brick space (12 edge + 12 face-curl DoFs),
* ``NedelecK`` -- lowest-order edge element (12 edge DoFs),
* ``Q1K`` -- trilinear scalar space (8 vertex values),
* ``VM`` / ``WM`` -- macroelement spaces on a 3x3x3 block, determined by the
  144 fine-edge tangential integrals / 108 fine-face normal integrals.

Everything lives on the cell-centered scaled frame ``[-1/2, 1/2]^3``
(macro spaces on the same frame subdivided 3x3x3).  Physical DoFs on a cell
of edge length ``h`` are the reference DoFs times ``h**dof_scale_power``, the
same factor for every DoF of a space, so a single Vandermonde factorization
serves every cell of the uniform mesh.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import edge_lattice_order, face_lattice_order
from .polyquad import (Poly, PolyField, coefficient_matrix, integrate_exact,
                       legendre_poly)


class DegenerateSpan(Exception):
    """Spanning set has lower numerical rank than the space dimension."""


class SingularVandermonde(Exception):
    """DoF/spanning-set mismatch: the Vandermonde matrix is not invertible."""


# transverse axes in ascending order
def _others(axis):
    return tuple(a for a in range(3) if a != axis)


@dataclass(frozen=True)
class DofFunctional:
    """A canonical (uncorrected) DoF functional in reference coordinates.

    kind:
      'edge_tangential'  int_E v.t ds           (axis = tangent direction)
      'face_curl'        int_F curl v . t dF    (axis = normal, direction = tangent)
      'face_tangential'  int_F w . t dF
      'face_normal'      int_F w . n dF         (direction = axis)
      'vertex'           point value            (scalar spaces)

    Geometry: ``span`` is the integration interval(s); ``fixed`` the frozen
    coordinates.  For edges, span = (lo, hi) along ``axis`` and fixed holds the
    two transverse coordinates in ascending axis order.  For faces, fixed is
    the normal coordinate and span = ((lo1, hi1), (lo2, hi2)) over the two
    in-plane axes in ascending order.  The h^2/12 correction used by the
    modified interpolation is applied in quadcurl.interp, never here.
    """

    kind: str
    axis: int = 0
    direction: int = 0
    span: tuple = ()
    fixed: tuple = ()

    def apply(self, field):
        """Exact evaluation on a Poly (vertex kind) or PolyField."""
        if self.kind == "vertex":
            return float(field(*self.fixed))
        if self.kind == "edge_tangential":
            comp = field.comps[self.axis]
            t1, t2 = _others(self.axis)
            comp = comp.substitute(t1, self.fixed[0]).substitute(t2, self.fixed[1])
            lo = [0.0, 0.0, 0.0]
            hi = [1.0, 1.0, 1.0]
            lo[self.axis], hi[self.axis] = self.span
            return comp.integrate_box(lo, hi)
        if self.kind == "face_curl":
            g = field.curl().comps[self.direction]
        elif self.kind == "face_tangential":
            g = field.comps[self.direction]
        elif self.kind == "face_normal":
            g = field.comps[self.axis]
        else:
            raise ValueError(f"unknown DoF kind {self.kind!r}")
        g = g.substitute(self.axis, self.fixed)
        t1, t2 = _others(self.axis)
        lo = [0.0, 0.0, 0.0]
        hi = [1.0, 1.0, 1.0]
        lo[t1], hi[t1] = self.span[0]
        lo[t2], hi[t2] = self.span[1]
        return g.integrate_box(lo, hi)


@dataclass
class ElementSpace:
    """A shape-function space with its DoFs and the Vandermonde-inverted dual basis."""

    tag: str
    span: list
    dofs: list
    vandermonde: np.ndarray
    dual_coeffs: np.ndarray     # column j = coefficients of dual_j over span
    dual: list
    cond: float
    dof_scale_power: int

    @property
    def dim(self):
        return len(self.span)

    def identity_defect(self):
        """max |DoF_i(dual_j) - delta_ij|; small iff the dual basis is sound."""
        eye = self.vandermonde @ self.dual_coeffs
        return float(np.abs(eye - np.eye(self.dim)).max())


def dual_basis(span, dofs, tag, dof_scale_power, cond_limit=1e12):
    """Invert the DoF Vandermonde matrix to produce the nodal (dual) basis."""
    ndof, nspan = len(dofs), len(span)
    if ndof != nspan:
        raise SingularVandermonde(
            f"{tag}: {ndof} DoFs vs {nspan} spanning fields")
    V = np.empty((ndof, nspan))
    for i, dof in enumerate(dofs):
        for j, field in enumerate(span):
            V[i, j] = dof.apply(field)
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularVandermonde(f"{tag}: Vandermonde condition {cond:.3e}")
    C = np.linalg.solve(V, np.eye(ndof))
    dual = []
    for j in range(ndof):
        acc = span[0].scale(C[0, j]) if isinstance(span[0], PolyField) \
            else span[0].scale(C[0, j])
        for m in range(1, nspan):
            acc = acc + span[m].scale(C[m, j])
        dual.append(acc)
    return ElementSpace(tag=tag, span=list(span), dofs=list(dofs),
                        vandermonde=V, dual_coeffs=C, dual=dual,
                        cond=cond, dof_scale_power=dof_scale_power)


# ---------------------------------------------------------------------------
# reference-cell entity enumerations (match quadcurl.mesh cell tables)
# ---------------------------------------------------------------------------

def ref_edges():
    """12 edges of [-1/2,1/2]^3: (axis, fixed transverse coords), axis-major,
    transverse offsets lexicographic."""
    out = []
    for axis in range(3):
        for d1 in (-0.5, 0.5):
            for d2 in (-0.5, 0.5):
                out.append((axis, (d1, d2)))
    return out


def ref_faces():
    """6 faces: (normal axis, coordinate), low side first."""
    return [(axis, side) for axis in range(3) for side in (-0.5, 0.5)]


def ref_vertices():
    return [(-0.5 + dx, -0.5 + dy, -0.5 + dz)
            for dx in (0, 1) for dy in (0, 1) for dz in (0, 1)]


def _edge_dof(axis, fixed, span=(-0.5, 0.5)):
    return DofFunctional("edge_tangential", axis=axis, direction=axis,
                         span=span, fixed=fixed)


def _face_dofs_full(kind_pair):
    """DoFs over the 6 whole faces: kind_pair selects the per-face list."""
    dofs = []
    full = ((-0.5, 0.5), (-0.5, 0.5))
    for axis, coord in ref_faces():
        t1, t2 = _others(axis)
        if kind_pair == "curl":
            dofs.append(DofFunctional("face_curl", axis=axis, direction=t1,
                                      span=full, fixed=coord))
            dofs.append(DofFunctional("face_curl", axis=axis, direction=t2,
                                      span=full, fixed=coord))
        elif kind_pair == "tangential_normal":
            dofs.append(DofFunctional("face_tangential", axis=axis,
                                      direction=t1, span=full, fixed=coord))
            dofs.append(DofFunctional("face_tangential", axis=axis,
                                      direction=t2, span=full, fixed=coord))
            dofs.append(DofFunctional("face_normal", axis=axis, direction=axis,
                                      span=full, fixed=coord))
    return dofs


# ---------------------------------------------------------------------------
# spanning sets
# ---------------------------------------------------------------------------

def _p1_scalars():
    return [Poly.const(1.0), Poly.monomial(1, 0, 0), Poly.monomial(0, 1, 0),
            Poly.monomial(0, 0, 1)]


def span_WK():
    """[P1]^3 plus the transverse squares: 18 fields."""
    fields = []
    for comp in range(3):
        for p in _p1_scalars():
            fields.append(PolyField.unit(comp, p))
    for comp in range(3):
        for other in _others(comp):
            mono = [0, 0, 0]
            mono[other] = 2
            fields.append(PolyField.unit(comp, Poly.monomial(*mono)))
    return fields


def _q1_scalars():
    exps = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
            (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1)]
    return [Poly.monomial(*e) for e in exps]


def span_VK(perturb=None):
    """Spanning set of the 24-dim grad-curl space: grad Q1 + x cross WK.

    The cross-product generators overlap in one direction (x itself), so the
    18 of them are compressed to 17 by rank-revealing SVD in coefficient
    space.  ``perturb=(index, delta)`` is a debug fault-injection hook: it
    bumps one quadratic coefficient of one spanning field, which drives the
    curl of the span outside WK.
    """
    grads = []
    for q in _q1_scalars()[1:]:
        grads.append(PolyField((q.diff(0), q.diff(1), q.diff(2))))

    x_field = PolyField((Poly.monomial(1, 0, 0), Poly.monomial(0, 1, 0),
                         Poly.monomial(0, 0, 1)))
    crosses = [x_field.cross(w) for w in span_WK()]
    mat, monos = coefficient_matrix(crosses)
    u, s, vt = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-9))
    if rank != 17:
        raise DegenerateSpan(f"x cross WK rank {rank}, expected 17")
    reduced = []
    for r in range(17):
        comps = [Poly.zero(), Poly.zero(), Poly.zero()]
        for (comp, mono), c in zip(monos, vt[r]):
            if c != 0.0:
                comps[comp] = comps[comp] + Poly.monomial(*mono, coef=c)
        reduced.append(PolyField(comps))

    fields = grads + reduced
    full_mat, _ = coefficient_matrix(fields)
    if np.linalg.matrix_rank(full_mat, tol=1e-9 * np.abs(full_mat).max()) != 24:
        raise DegenerateSpan("grad Q1 + x cross WK span is rank deficient")

    if perturb is not None:
        idx, delta = perturb
        comps = list(fields[idx].comps)
        c0 = comps[0].copy()
        c0.coeffs[(1, 2, 0)] = c0.coeffs.get((1, 2, 0), 0.0) + delta
        comps[0] = c0
        fields[idx] = PolyField(comps)
    return fields


def span_nedelec():
    """Lowest-order edge element: Q_{0,1,1} x Q_{1,0,1} x Q_{1,1,0}."""
    fields = []
    for comp in range(3):
        t1, t2 = _others(comp)
        for e1 in (0, 1):
            for e2 in (0, 1):
                mono = [0, 0, 0]
                mono[t1], mono[t2] = e1, e2
                fields.append(PolyField.unit(comp, Poly.monomial(*mono)))
    return fields


def _tensor_legendre(degs):
    """All Legendre products with per-axis degree bounds ``degs``."""
    out = []
    for a in range(degs[0] + 1):
        for b in range(degs[1] + 1):
            for c in range(degs[2] + 1):
                out.append(legendre_poly(a, 0) * legendre_poly(b, 1)
                           * legendre_poly(c, 2))
    return out


def span_VM():
    """Macro space Q_{2,3,3} x Q_{3,2,3} x Q_{3,3,2} in tensor Legendre form."""
    fields = []
    for comp in range(3):
        degs = [3, 3, 3]
        degs[comp] = 2
        for p in _tensor_legendre(degs):
            fields.append(PolyField.unit(comp, p))
    return fields


def span_WM():
    """Macro space Q_{3,2,2} x Q_{2,3,2} x Q_{2,2,3} in tensor Legendre form."""
    fields = []
    for comp in range(3):
        degs = [2, 2, 2]
        degs[comp] = 3
        for p in _tensor_legendre(degs):
            fields.append(PolyField.unit(comp, p))
    return fields


# macro fine-entity DoFs ------------------------------------------------------

def macro_edge_dofs():
    """144 fine-edge tangential integrals on the 3x3x3 subdivided reference cell."""
    dofs = []
    for axis, i, j, k in edge_lattice_order(3):
        lat = (int(i), int(j), int(k))
        lo = lat[axis] / 3.0 - 0.5
        span = (lo, lo + 1.0 / 3.0)
        t1, t2 = _others(axis)
        fixed = (lat[t1] / 3.0 - 0.5, lat[t2] / 3.0 - 0.5)
        dofs.append(_edge_dof(int(axis), fixed, span))
    return dofs


def macro_face_dofs():
    """108 fine-face normal integrals on the subdivided reference cell."""
    dofs = []
    for axis, i, j, k in face_lattice_order(3):
        axis = int(axis)
        lat = (int(i), int(j), int(k))
        coord = lat[axis] / 3.0 - 0.5
        t1, t2 = _others(axis)
        spans = tuple((lat[t] / 3.0 - 0.5, lat[t] / 3.0 - 0.5 + 1.0 / 3.0)
                      for t in (t1, t2))
        dofs.append(DofFunctional("face_normal", axis=axis, direction=axis,
                                  span=spans, fixed=coord))
    return dofs


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def _cell_edge_dofs():
    return [_edge_dof(axis, fixed) for axis, fixed in ref_edges()]


def build_WK():
    return dual_basis(span_WK(), _face_dofs_full("tangential_normal"),
                      "WK", dof_scale_power=2)


def build_VK(perturb=None):
    dofs = _cell_edge_dofs() + _face_dofs_full("curl")
    return dual_basis(span_VK(perturb), dofs, "VK", dof_scale_power=1)


def build_nedelec():
    return dual_basis(span_nedelec(), _cell_edge_dofs(), "NedelecK",
                      dof_scale_power=1)


def build_Q1():
    dofs = [DofFunctional("vertex", fixed=v) for v in ref_vertices()]
    return dual_basis(_q1_scalars(), dofs, "Q1K", dof_scale_power=0)


def build_VM():
    return dual_basis(span_VM(), macro_edge_dofs(), "VM", dof_scale_power=1)


def build_WM():
    return dual_basis(span_WM(), macro_face_dofs(), "WM", dof_scale_power=2)


@lru_cache(maxsize=None)
def reference_spaces():
    """All six reference spaces, built once and shared."""
    return {
        "WK": build_WK(),
        "VK": build_VK(),
        "NedelecK": build_nedelec(),
        "Q1K": build_Q1(),
        "VM": build_VM(),
        "WM": build_WM(),
    }


# ---------------------------------------------------------------------------
# curl inclusion
# ---------------------------------------------------------------------------

def curl_inclusion_residual(v_space, w_space):
    """Largest least-squares residual of curl(dual of V) against span(W),
    normalized by the curl coefficient magnitude."""
    w_mat, monos = coefficient_matrix([f for f in w_space.span])
    worst = 0.0
    for v in v_space.dual:
        c = v.curl()
        cvec = np.zeros(len(monos))
        extra = 0.0
        for comp in range(3):
            for mono, coef in c.comps[comp].coeffs.items():
                key = (comp, mono)
                if key in _mono_index(tuple(monos)):
                    cvec[_mono_index(tuple(monos))[key]] = coef
                else:
                    extra += coef**2
        sol, res, *_ = np.linalg.lstsq(w_mat.T, cvec, rcond=None)
        r = np.linalg.norm(w_mat.T @ sol - cvec) ** 2 + extra
        scale = max(1.0, float(np.linalg.norm(cvec)))
        worst = max(worst, np.sqrt(r) / scale)
    return worst


@lru_cache(maxsize=None)
def _mono_index(monos):
    return {m: i for i, m in enumerate(monos)}


def check_curl_inclusion(v_space, w_space, tol=1e-12):
    """True iff curl of every dual of ``v_space`` lies in span of ``w_space``."""
    return curl_inclusion_residual(v_space, w_space) <= tol


# ---------------------------------------------------------------------------
# dual-basis evaluation tables and exact Gram matrices
# ---------------------------------------------------------------------------

def dual_value_table(space, pts):
    """Values of all dual fields at reference points: (ndof, npts, 3)."""
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    return np.stack([f(x, y, z) for f in space.dual])


def dual_curl_table(space, pts):
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    return np.stack([f.curl()(x, y, z) for f in space.dual])


def dual_gradcurl_table(space, pts):
    """Jacobians of the curls of all duals: (ndof, npts, 3, 3); entry
    [..., i, j] is d(curl f)_i / d x_j."""
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    out = np.empty((space.dim, len(pts), 3, 3))
    for n, f in enumerate(space.dual):
        g = f.curl().grad()
        for i in range(3):
            for j in range(3):
                out[n, :, i, j] = g[i][j](x, y, z)
    return out


def scalar_value_table(space, pts):
    """Values of a scalar space's duals: (ndof, npts)."""
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    return np.stack([p(x, y, z) for p in space.dual])


def scalar_grad_table(space, pts):
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    out = np.empty((space.dim, len(pts), 3))
    for n, p in enumerate(space.dual):
        for j in range(3):
            out[n, :, j] = p.diff(j)(x, y, z)
    return out


def _span_gram(fields_a, fields_b, pairing):
    n, m = len(fields_a), len(fields_b)
    G = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            G[i, j] = pairing(fields_a[i], fields_b[j])
    return G


def _l2_pair(a, b):
    return integrate_exact(a.dot(b)) if isinstance(a, PolyField) \
        else integrate_exact(a * b)


def _gradcurl_pair(a, b):
    total = 0.0
    ga, gb = a.grad(), b.grad()
    for i in range(3):
        for j in range(3):
            total += integrate_exact(ga[i][j] * gb[i][j])
    return total


_GRAM_CACHE = {}


def dual_gram_matrices(space):
    """Exact reference Gram matrices of the dual basis:

    ``M0[i,j] = (dual_i, dual_j)``, ``M1`` the same for curls, ``M2`` for curl
    Jacobians (Frobenius pairing).  Computed once per space tag via span-level
    integration and the dual coefficient transform.
    """
    key = space.tag
    if key not in _GRAM_CACHE:
        span = space.span
        curls = [f.curl() for f in span]
        G0 = _span_gram(span, span, _l2_pair)
        G1 = _span_gram(curls, curls, _l2_pair)
        G2 = _span_gram(curls, curls, _gradcurl_pair)
        C = space.dual_coeffs
        trip = []
        for G in (G0, G1, G2):
            M = C.T @ G @ C
            trip.append((M + M.T) / 2.0)
        _GRAM_CACHE[key] = tuple(trip)
    return _GRAM_CACHE[key]


def vector_scalar_grad_matrix(vspace, qspace):
    """Exact reference matrix ``(dual_i, grad qdual_m)``: (vdim, qdim)."""
    grads = [PolyField((p.diff(0), p.diff(1), p.diff(2))) for p in qspace.span]
    G = _span_gram(vspace.span, grads, _l2_pair)
    return vspace.dual_coeffs.T @ G @ qspace.dual_coeffs


def scalar_stiffness_matrix(qspace):
    """Exact reference Q1 stiffness: ``(grad qdual_m, grad qdual_l)``."""
    grads = [PolyField((p.diff(0), p.diff(1), p.diff(2))) for p in qspace.span]
    G = _span_gram(grads, grads, _l2_pair)
    C = qspace.dual_coeffs
    M = C.T @ G @ C
    return (M + M.T) / 2.0
