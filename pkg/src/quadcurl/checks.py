"""Exact-identity battery: unisolvence, inclusions, commuting diagrams,
orthogonality identities, jump integrals, the manufactured-solution
cross-checks and the dense solver oracle.

Everything here is an independent verification path: the finite-difference
load oracle evaluates the velocity directly from sin/cos products (never
through the series algebra it checks), and the dense solve uses a plain LAPACK
factorization of the full saddle matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import interp, mms, system
from .mesh import build_mesh, macro_partition
from .polyquad import Poly, PolyField, coefficient_matrix, integrate_exact
from .spaces import build_VK, curl_inclusion_residual, reference_spaces


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _result(name, value, bound, extra=""):
    detail = f"max defect {value:.3e} (bound {bound:.1e})"
    if extra:
        detail += f"; {extra}"
    return CheckResult(name, bool(value <= bound), detail)


# ---------------------------------------------------------------------------
# space-level identities
# ---------------------------------------------------------------------------

def check_unisolvence(bound=1e-8):
    worst = 0.0
    conds = []
    for tag, sp in reference_spaces().items():
        worst = max(worst, sp.identity_defect())
        conds.append(f"{tag}:{sp.cond:.1e}")
    return _result("unisolvence DoF_i(dual_j)=delta", worst, bound,
                   "cond " + " ".join(conds))


def check_curl_inclusions(bound=1e-12, vk_perturbation=None):
    spcs = reference_spaces()
    vk = spcs["VK"]
    if vk_perturbation is not None:
        from .spaces import dual_basis, _cell_edge_dofs, _face_dofs_full
        span = build_VK(perturb=vk_perturbation).span
        vk = dual_basis(span, _cell_edge_dofs() + _face_dofs_full("curl"),
                        "VK*", dof_scale_power=1)
    r1 = curl_inclusion_residual(vk, spcs["WK"])
    r2 = curl_inclusion_residual(spcs["VM"], spcs["WM"])
    return _result("curl VK in WK / curl VM in WM", max(r1, r2), bound,
                   f"cell {r1:.2e} macro {r2:.2e}")


def _random_polyfield(rng, deg):
    comps = []
    for _ in range(3):
        p = Poly.zero()
        for a in range(deg + 1):
            for b in range(deg + 1):
                for c in range(deg + 1):
                    p = p + Poly.monomial(a, b, c, coef=rng.standard_normal())
        comps.append(p)
    return PolyField(comps)


def _field_difference(a, b):
    mat, _ = coefficient_matrix([a, b])
    scale = max(1.0, float(np.abs(mat).max()))
    return float(np.abs(mat[0] - mat[1]).max()) / scale


def check_commuting_cell(rng=None, bound=1e-8, trials=5):
    """Cell-level commuting diagram: interpolating the curl equals the curl of
    the interpolant, on random polynomial fields."""
    rng = np.random.default_rng(11) if rng is None else rng
    worst = 0.0
    for _ in range(trials):
        v = _random_polyfield(rng, 3)
        lhs = interp.interp_PiK(v.curl()).as_polyfield()
        rhs = interp.interp_IK(v).as_polyfield().curl()
        worst = max(worst, _field_difference(lhs, rhs))
    return _result("commuting curl/interp on cells", worst, bound)


def _patch_fields(rng):
    """Random discrete field on a 3x3x3 patch: single-valued DoFs on the patch
    entities (no boundary elimination), returned as per-cell reference
    PolyFields plus the shared DoF tables."""
    patch = build_mesh(3)
    vk = reference_spaces()["VK"]
    h = 1.0 / 3.0
    edge_vals = rng.standard_normal(patch.n_edges)
    face_vals = rng.standard_normal((patch.n_faces, 2))
    cell_fields = []
    for c in range(patch.n_cells):
        phys = np.empty(24)
        phys[:12] = edge_vals[patch.cell_edges[c]]
        for f in range(6):
            phys[12 + 2 * f:14 + 2 * f] = face_vals[patch.cell_faces[c, f]]
        ref = phys / h**vk.dof_scale_power
        acc = vk.dual[0].scale(ref[0])
        for i in range(1, 24):
            acc = acc + vk.dual[i].scale(ref[i])
        cell_fields.append(acc)
    return patch, cell_fields, edge_vals


def check_commuting_macro(rng=None, bound=1e-8):
    """Macro commuting diagram on a random discrete field over one macro: the
    macro face interpolation of the piecewise curl equals the curl of the
    macro edge interpolation."""
    rng = np.random.default_rng(12) if rng is None else rng
    patch, fields, edge_vals = _patch_fields(rng)
    spcs = reference_spaces()
    vm, wm = spcs["VM"], spcs["WM"]
    h = 1.0 / 3.0

    # macro frame = patch shifted to [-1/2,1/2]^3; fine-edge integrals of the
    # field are the edge DoF values themselves (in patch units)
    im_ref = edge_vals.copy()     # reference VM dofs (macro size H=1)
    f_im = vm.dual[0].scale(im_ref[0])
    for i in range(1, vm.dim):
        f_im = f_im + vm.dual[i].scale(im_ref[i])
    curl_im = f_im.curl()

    # fine-face normal integrals of the piecewise curl, one adjacent cell each
    pim_ref = np.zeros(wm.dim)
    owner = np.full(patch.n_faces, -1)
    for c in range(patch.n_cells):
        for f in patch.cell_faces[c]:
            if owner[f] < 0:
                owner[f] = c
    for fid in range(patch.n_faces):
        c = owner[fid]
        axis = patch.face_table[fid, 0]
        lat = patch.face_table[fid, 1:]
        side = lat[axis] - patch.cell_lattice[c][axis]    # 0 or 1
        curl_c = fields[c].curl().comps[axis]
        g = curl_c.substitute(axis, side - 0.5)
        lo = [0.0, 0.0, 0.0]
        hi = [1.0, 1.0, 1.0]
        t1, t2 = [a for a in range(3) if a != axis]
        lo[t1], hi[t1] = -0.5, 0.5
        lo[t2], hi[t2] = -0.5, 0.5
        # cell-frame curl integral -> macro units: one h factor for the area
        # scaling (h^2) times the 1/h from the piecewise curl
        pim_ref[fid] = h * g.integrate_box(lo, hi)
    f_pim = wm.dual[0].scale(pim_ref[0])
    for i in range(1, wm.dim):
        f_pim = f_pim + wm.dual[i].scale(pim_ref[i])

    return _result("commuting curl/interp on macros",
                   _field_difference(curl_im, f_pim), bound)


# ---------------------------------------------------------------------------
# orthogonality and structure identities
# ---------------------------------------------------------------------------

def _grad_pair(a, b):
    total = 0.0
    ga, gb = a.grad(), b.grad()
    for i in range(3):
        for j in range(3):
            total += integrate_exact(ga[i][j] * gb[i][j])
    return total


def check_gradient_orthogonality_quadratics(bound=1e-12):
    """For every quadratic field w and every WK dual, the corrected
    interpolation error is gradient-orthogonal: (grad(w - Pi w), grad w_h) = 0."""
    wk = reference_spaces()["WK"]
    monos = [(a, b, c) for a in range(3) for b in range(3) for c in range(3)
             if a + b + c <= 2]
    worst = 0.0
    for comp in range(3):
        for mono in monos:
            w = PolyField.unit(comp, Poly.monomial(*mono))
            piw = interp.interp_PiK(w).as_polyfield()
            diff = w - piw
            for wh in wk.dual:
                worst = max(worst, abs(_grad_pair(diff, wh)))
    return _result("quadratic gradient orthogonality of corrected interp",
                   worst, bound)


def check_l2_orthogonality_linears(bound=1e-12):
    """For every linear field v and trilinear q, the canonical interpolation
    error is orthogonal to grad q: (v - I0 v, grad q) = 0."""
    q1 = reference_spaces()["Q1K"]
    monos = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    worst = 0.0
    for comp in range(3):
        for mono in monos:
            v = PolyField.unit(comp, Poly.monomial(*mono))
            iv = interp.interp_I0K(v).as_polyfield()
            diff = v - iv
            for q in q1.dual:
                gq = PolyField((q.diff(0), q.diff(1), q.diff(2)))
                worst = max(worst, abs(integrate_exact(diff.dot(gq))))
    return _result("linear L2 orthogonality of canonical interp", worst, bound)


def check_mean_curl_preservation(bound=1e-12):
    """The edge reconstruction preserves the cell mean of the curl:
    integral of curl(v - IC v) vanishes for every VK dual."""
    vk = reference_spaces()["VK"]
    worst = 0.0
    for v in vk.dual:
        icv = interp.interp_nedelec(v).as_polyfield()
        c = (v - icv).curl()
        for comp in range(3):
            worst = max(worst, abs(integrate_exact(c.comps[comp])))
    return _result("mean curl preserved by edge reconstruction", worst, bound)


def check_face_jumps(rng=None, bound=1e-10, n=3):
    """Face integrals of the jump of each component of a random interior
    W_h field vanish across every interior face."""
    rng = np.random.default_rng(13) if rng is None else rng
    mesh = build_mesh(n)
    wk = reference_spaces()["WK"]
    h = mesh.h_axis[0]
    face_vals = rng.standard_normal((mesh.n_faces, 3))
    face_vals[mesh.face_is_boundary] = 0.0

    cell_ref = np.empty((mesh.n_cells, 18))
    for c in range(mesh.n_cells):
        phys = np.empty(18)
        for f in range(6):
            phys[3 * f:3 * f + 3] = face_vals[mesh.cell_faces[c, f]]
        cell_ref[c] = phys / h**wk.dof_scale_power

    # local DoF order per face is (t1, t2, n); check with exact face integrals
    worst = 0.0
    for fid in np.where(~mesh.face_is_boundary)[0]:
        axis = mesh.face_table[fid, 0]
        cells = np.where(mesh.cell_faces == fid)[0]
        ints = []
        for c in cells:
            side = 0.5 if mesh.cell_faces[c, 2 * axis + 1] == fid else -0.5
            acc = wk.dual[0].scale(cell_ref[c, 0])
            for i in range(1, 18):
                acc = acc + wk.dual[i].scale(cell_ref[c, i])
            vals = []
            for comp in range(3):
                g = acc.comps[comp].substitute(axis, side)
                lo = [-0.5, -0.5, -0.5]
                hi = [0.5, 0.5, 0.5]
                lo[axis], hi[axis] = 0.0, 1.0
                vals.append(g.integrate_box(lo, hi) * h**2)
            ints.append(vals)
        jump = np.abs(np.array(ints[0]) - np.array(ints[1])).max()
        worst = max(worst, jump)
    return _result("face jump integrals of W_h vanish", worst, bound)


def check_univariate_structure():
    """Each component of every WK spanning field is a sum of univariate
    polynomials: no mixed monomials may appear."""
    wk = reference_spaces()["WK"]
    mixed = 0
    for f in wk.span:
        for comp in f.comps:
            for (a, b, c) in comp.coeffs:
                if sum(e > 0 for e in (a, b, c)) > 1:
                    mixed += 1
    return CheckResult("WK components are sums of univariate polynomials",
                       mixed == 0, f"{mixed} mixed monomials")


# ---------------------------------------------------------------------------
# manufactured solution cross-checks
# ---------------------------------------------------------------------------

def check_divergence_free(rng=None, bound=1e-10, npts=50):
    rng = np.random.default_rng(14) if rng is None else rng
    ex = mms.build_exact_fields()
    pts = rng.uniform(0.05, 0.95, size=(npts, 3))
    div_u = ex.u.div()
    div_f = ex.f.div()
    vals = 0.0
    for fdiv in (div_u, div_f):
        vals = max(vals, float(np.abs(
            fdiv.eval(pts[:, 0], pts[:, 1], pts[:, 2])).max()))
    extra = "series cancel exactly" if div_u.is_zero and div_f.is_zero else ""
    return _result("div u = div f = 0", vals, bound, extra)


def _u_direct(P):
    """Velocity evaluated straight from sin/cos products (independent of the
    series algebra)."""
    x, y, z = P[..., 0], P[..., 1], P[..., 2]
    s = lambda t: np.sin(np.pi * t) ** 3
    ds = lambda t: 3.0 * np.pi * np.sin(np.pi * t) ** 2 * np.cos(np.pi * t)
    return np.stack([s(x) * ds(y) * s(z), -ds(x) * s(y) * s(z),
                     np.zeros_like(x)], axis=-1)


def _fd_weights(order, npts):
    """Weights of a centered finite-difference stencil for one derivative:
    sum_j w_j f(x + o_j dt) = f^(order)(x) * dt**order, exact on polynomials
    of degree < npts."""
    offsets = np.arange(npts) - (npts - 1) / 2.0
    V = np.vander(offsets, npts, increasing=True).T
    rhs = np.zeros(npts)
    rhs[order] = math.factorial(order)
    return offsets, np.linalg.solve(V, rhs)


def _curl_power_terms(power):
    """Expand curl^power into derivative terms: maps (out component, source
    component, multi-index) -> coefficient."""
    eps = {(0, 1, 2): 1.0, (1, 2, 0): 1.0, (2, 0, 1): 1.0,
           (0, 2, 1): -1.0, (2, 1, 0): -1.0, (1, 0, 2): -1.0}
    terms = {(i, i, (0, 0, 0)): 1.0 for i in range(3)}
    for _ in range(power):
        new = {}
        for (comp, src, alpha), coef in terms.items():
            for (i, j, k), s in eps.items():
                if k == comp:
                    a = list(alpha)
                    a[j] += 1
                    key = (i, src, tuple(a))
                    new[key] = new.get(key, 0.0) + s * coef
        terms = {k: v for k, v in new.items() if v != 0.0}
    return terms


def fd_curl4(field, pts, dt=0.02, accuracy=8):
    """curl^4 of a vector field by nested tensor finite differences.

    High-order centered stencils per axis; the composition is expanded
    algebraically so each term is a single mixed fourth derivative.
    """
    pts = np.asarray(pts, dtype=float)
    out = np.zeros((len(pts), 3))
    for (comp, src, alpha), coef in _curl_power_terms(4).items():
        axes = [(ax, alpha[ax]) for ax in range(3) if alpha[ax] > 0]
        grids, weights = [], []
        for ax, order in axes:
            npts = order + accuracy + (order + accuracy) % 2 + 1
            offs, w = _fd_weights(order, npts)
            grids.append(offs * dt)
            weights.append(w / dt**order)
        mesh = np.meshgrid(*grids, indexing="ij") if grids else []
        wmesh = weights[0]
        for w in weights[1:]:
            wmesh = np.multiply.outer(wmesh, w)
        stencil = np.zeros((wmesh.size if grids else 1, 3))
        if grids:
            for dim, (ax, _) in enumerate(axes):
                stencil[:, ax] = mesh[dim].reshape(-1)
        P = pts[:, None, :] + stencil[None, :, :]
        vals = field(P.reshape(-1, 3)).reshape(len(pts), -1, 3)[:, :, src]
        out[:, comp] += coef * (vals @ (wmesh.reshape(-1) if grids else
                                        np.ones(1)))
    return out


def check_load_fd_oracle(rng=None, bound=1e-6, npts=10):
    """The series load f equals a finite-difference curl^4 of the directly
    evaluated velocity, to relative accuracy."""
    rng = np.random.default_rng(15) if rng is None else rng
    ex = mms.build_exact_fields()
    pts = rng.uniform(0.25, 0.75, size=(npts, 3))
    f_series = ex.f_value(pts)
    f_fd = fd_curl4(_u_direct, pts)
    scale = np.abs(f_series).max()
    rel = float(np.abs(f_series - f_fd).max()) / scale
    return _result("load matches FD curl^4 oracle", rel, bound,
                   f"|f| scale {scale:.3e}")


# ---------------------------------------------------------------------------
# global identities and the solver oracle
# ---------------------------------------------------------------------------

def check_i3h_collapse(bound=1e-10):
    """Postprocessing the interpolant equals postprocessing the field itself
    (both reduce to the same fine-edge integrals), at n = 3."""
    ex = mms.build_exact_fields()
    mesh = build_mesh(3)
    gmap = system.build_dof_map(mesh)
    part = macro_partition(mesh)
    ihu = interp.global_interp_Ih(ex, mesh, gmap)
    m1 = interp.global_I3h(ihu, mesh, gmap, part)

    # direct fine-edge integrals of u (boundary edges stay zero: the exact
    # tangential trace vanishes there)
    from .polyquad import gauss_rule
    rule = gauss_rule(6)
    h = mesh.h_axis[0]
    vals = np.zeros(mesh.n_edges)
    for eid in np.where(~mesh.edge_is_boundary)[0]:
        axis, i, j, k = mesh.edge_table[eid]
        origin = np.array([i, j, k]) * h
        t1, t2 = [a for a in range(3) if a != axis]
        P, W = rule.edge(axis, (origin[t1], origin[t2]),
                         origin[axis], origin[axis] + h)
        vals[eid] = W @ ex.u_value(P)[:, axis]
    direct = vals[part.macro_edges[0]] / part.macro_size
    scale = max(1.0, float(np.abs(direct).max()))
    defect = float(np.abs(m1.coeffs[0] - direct).max()) / scale
    return _result("postprocessing collapses through interpolation",
                   defect, bound)


def check_solver_oracle(bound=1e-8, p_bound=1e-8):
    """At n = 3 the Krylov solution matches a dense factorization coefficient
    by coefficient, and the pressure vanishes for the divergence-free load,
    in both schemes."""
    ex = mms.build_exact_fields()
    mesh = build_mesh(3)
    gmap = system.build_dof_map(mesh)
    worst = 0.0
    worst_p = 0.0
    for mode in ("original", "modified"):
        sys_ = system.build_system(mesh, gmap, ex.f_value, mode=mode)
        u_it, p_it, _ = system.solve_saddle(sys_, method="minres")
        K = sys_.full_matrix().toarray()
        z = scipy.linalg.solve(K, sys_.full_rhs())
        nv = gmap.n_vdofs
        scale = max(1.0, float(np.abs(z).max()))
        worst = max(worst, float(np.abs(
            np.concatenate([u_it.values, p_it.values]) - z).max()) / scale)
        worst_p = max(worst_p, float(np.abs(p_it.values).max()),
                      float(np.abs(z[nv:]).max()))
    ok_p = worst_p <= p_bound
    res = _result("iterative solve matches dense oracle", worst, bound,
                  f"|p|_inf {worst_p:.2e}")
    res.passed = res.passed and ok_p
    return res


# ---------------------------------------------------------------------------
# the battery
# ---------------------------------------------------------------------------

def run_battery(seed=0, vk_perturbation=None):
    """Run every exact-identity check; returns a list of CheckResult."""
    rng = np.random.default_rng(seed)
    return [
        check_unisolvence(),
        check_curl_inclusions(vk_perturbation=vk_perturbation),
        check_commuting_cell(rng),
        check_commuting_macro(rng),
        check_gradient_orthogonality_quadratics(),
        check_l2_orthogonality_linears(),
        check_mean_curl_preservation(),
        check_face_jumps(rng),
        check_univariate_structure(),
        check_divergence_free(rng),
        check_load_fd_oracle(rng),
        check_i3h_collapse(),
        check_solver_oracle(),
    ]
