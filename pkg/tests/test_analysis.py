import numpy as np
import pytest

from quadcurl import analysis, mms, system
from quadcurl.analysis import (ConvergenceReport, DegenerateError, ErrorTriple,
                               compute_eoc, discrete_norms)
from quadcurl.mesh import build_mesh
from quadcurl.polyquad import gauss_rule
from quadcurl.spaces import (dual_curl_table, dual_gradcurl_table,
                             dual_value_table, reference_spaces)


@pytest.fixture(scope="module")
def setup3():
    mesh = build_mesh(3)
    return mesh, system.build_dof_map(mesh)


def test_zero_difference_gives_zero_triple(setup3):
    mesh, gmap = setup3
    v = np.random.default_rng(0).standard_normal(gmap.n_vdofs)
    trip = analysis.superclose_error(v, v.copy(), mesh, gmap)
    assert trip.as_tuple() == (0.0, 0.0, 0.0)


def test_discrete_norms_match_quadrature(setup3):
    # Gram-based exact norms against per-cell Gauss integration of the same
    # discrete field
    mesh, gmap = setup3
    rng = np.random.default_rng(1)
    v = rng.standard_normal(gmap.n_vdofs)
    trip = discrete_norms(v, mesh, gmap)

    vk = reference_spaces()["VK"]
    pts, wts = gauss_rule(6).box((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))
    val = dual_value_table(vk, pts)
    curl = dual_curl_table(vk, pts)
    gc = dual_gradcurl_table(vk, pts)
    h = mesh.h_axis[0]
    cols = gmap.cell_vdofs
    d = np.where(cols >= 0, v[np.clip(cols, 0, None)], 0.0) / h
    n0 = h**3 * np.einsum("ci,igk,cj,jgk,g->", d, val, d, val, wts)
    n1 = h * np.einsum("ci,igk,cj,jgk,g->", d, curl, d, curl, wts)
    n2 = (1 / h) * np.einsum("ci,igkl,cj,jgkl,g->", d, gc, d, gc, wts)
    assert trip.l2 == pytest.approx(np.sqrt(n0), rel=1e-10)
    assert trip.curl_l2 == pytest.approx(np.sqrt(n1), rel=1e-10)
    assert trip.curl_h1 == pytest.approx(np.sqrt(n2), rel=1e-10)


def test_triangle_inequality_spot_checks(setup3):
    mesh, gmap = setup3
    rng = np.random.default_rng(2)
    for _ in range(5):
        a = rng.standard_normal(gmap.n_vdofs)
        b = rng.standard_normal(gmap.n_vdofs)
        na = discrete_norms(a, mesh, gmap)
        nb = discrete_norms(b, mesh, gmap)
        nab = discrete_norms(a + b, mesh, gmap)
        for x, y, z in zip(nab.as_tuple(), na.as_tuple(), nb.as_tuple()):
            assert x <= y + z + 1e-12


def test_eoc_exact_ratio():
    rows = [(6, ErrorTriple(4.0, 4.0, 4.0)), (12, ErrorTriple(1.0, 1.0, 1.0))]
    eocs = compute_eoc(rows)
    assert np.isnan(eocs[0]).all()
    assert np.allclose(eocs[1], 2.0)


def test_eoc_first_order_synthetic():
    rows = [(n, ErrorTriple(7.0 / n, 7.0 / n, 7.0 / n))
            for n in (4, 8, 16)]
    eocs = compute_eoc(rows)
    for row in eocs[1:]:
        assert np.allclose(row, 1.0, atol=1e-12)


def test_eoc_paper_value():
    # Table-1 curl column between n = 6 and 12 from the reported errors
    rows = [(6, ErrorTriple(1, 1.548, 1)), (12, ErrorTriple(1, 0.4096, 1))]
    eoc = compute_eoc(rows)[1][1]
    assert eoc == pytest.approx(1.92, abs=0.005)


def test_eoc_rejects_degenerate_errors():
    rows = [(6, ErrorTriple(1.0, 0.0, 1.0)), (12, ErrorTriple(1.0, 1.0, 1.0))]
    with pytest.raises(DegenerateError):
        compute_eoc(rows)


def test_report_csv_and_markdown(tmp_path):
    rep = ConvergenceReport(scheme="modified", quantity="errors")
    rep.add(6, ErrorTriple(4.332e1, 1.836, 2.344e-1))
    rep.add(12, ErrorTriple(2.159e1, 4.734e-1, 1.081e-1))
    csv = rep.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "n,err1,eoc1,err2,eoc2,err3,eoc3"
    assert lines[1].startswith("6,4.332000E+01,,")
    assert len(lines) == 3
    md = rep.to_markdown()
    assert md.count("|") > 10
    paths = rep.save(tmp_path, fmt="both")
    assert all((tmp_path / p.split("/")[-1]).exists() for p in paths)


def test_error_vs_exact_of_interpolant_is_small(setup3):
    # sanity: the interpolant of the exact solution has O(h) energy error,
    # far below the raw field norms
    from quadcurl import interp
    mesh, gmap = setup3
    ex = mms.build_exact_fields()
    ihu = interp.global_interp_Ih(ex, mesh, gmap)
    err = analysis.error_vs_exact(ihu, ex, mesh, gmap)
    zero = np.zeros(gmap.n_vdofs)
    norm_u = analysis.error_vs_exact(zero, ex, mesh, gmap)
    assert err.curl_h1 < 0.7 * norm_u.curl_h1
    assert err.curl_l2 < 0.5 * norm_u.curl_l2
    assert err.l2 < 0.5 * norm_u.l2
