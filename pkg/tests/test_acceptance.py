"""Acceptance suite: reproduces the four convergence tables of the
manufactured-solution study and runs the exact-identity battery.

Reference error values are the published study tables this project
regression-tests against; each criterion prints one [PASS]/[FAIL] line.
Heavy solves run once in a session fixture and are shared.
"""

import time

import pytest

from quadcurl import analysis, checks, interp, mms, system
from quadcurl.analysis import compute_eoc
from quadcurl.mesh import build_mesh, macro_partition

# reference study tables: n -> (|curl_h e|_1h, ||curl_h e||_0, ||e||_0)
REFERENCE = {
    ("modified", "errors"): {
        6: (4.332e1, 1.836e0, 2.344e-1),
        12: (2.159e1, 4.734e-1, 1.081e-1),
        18: (1.439e1, 2.118e-1, 7.112e-2),
        24: (1.079e1, 1.194e-1, 5.309e-2),
    },
    ("original", "errors"): {
        6: (4.351e1, 1.548e0, 2.244e-1),
        12: (2.166e1, 4.096e-1, 1.076e-1),
        18: (1.441e1, 1.841e-1, 7.105e-2),
    },
    ("modified", "superclose"): {
        6: (1.092e1, 8.394e-1, 8.565e-2),
        12: (2.577e0, 2.092e-1, 2.242e-2),
        18: (1.125e0, 9.300e-2, 1.000e-2),
        24: (6.284e-1, 5.231e-2, 5.636e-3),
    },
    ("modified", "superconv"): {
        12: (1.833e1, 1.998e-1, 2.329e-2),
        18: (8.420e0, 8.965e-2, 9.825e-3),
        24: (4.790e0, 5.107e-2, 5.534e-3),
    },
}

VALUE_RTOL = 0.02


@pytest.fixture(scope="session")
def study():
    """Solve every (scheme, n) combination once and collect all quantities."""
    exact = mms.build_exact_fields()
    data = {"triples": {}, "walltime_n24": None}
    for n in (6, 12, 18, 24):
        t0 = time.time()
        mesh = build_mesh(n)
        gmap = system.build_dof_map(mesh)
        A = system.assemble_A(mesh, gmap)
        B = system.assemble_B(mesh, gmap)
        part = macro_partition(mesh)
        ihu = interp.global_interp_Ih(exact, mesh, gmap)
        schemes = ("modified", "original") if n <= 18 else ("modified",)
        for scheme in schemes:
            rhs = system.assemble_rhs(mesh, gmap, exact.f_value, mode=scheme)
            sys_ = system.SaddleSystem(A=A, B=B, rhs=rhs, gmap=gmap, mesh=mesh)
            u, _p, info = system.solve_saddle(sys_, tol=1e-10)
            data["triples"][(scheme, "errors", n)] = analysis.error_vs_exact(
                u.values, exact, mesh, gmap)
            if scheme == "modified":
                data["triples"][("modified", "superclose", n)] = \
                    analysis.superclose_error(u.values, ihu, mesh, gmap)
                mf = interp.global_I3h(u.values, mesh, gmap, part)
                data["triples"][("modified", "superconv", n)] = \
                    analysis.superconvergent_error(mf, exact, mesh)
        if n == 24:
            data["walltime_n24"] = time.time() - t0
    return data


def _rows(data, scheme, task, ns):
    return [(n, data["triples"][(scheme, task, n)]) for n in ns]


def _value_failures(rows, ref):
    out = []
    for n, trip in rows:
        for col, (got, want) in enumerate(zip(trip.as_tuple(), ref[n])):
            rel = abs(got - want) / want
            if rel > VALUE_RTOL:
                out.append(f"n={n} col{col + 1}: got {got:.4E} "
                           f"want {want:.4E} (rel {rel:.3f})")
    return out


def _eoc_failures(rows, targets, window, pairs="all"):
    eocs = compute_eoc(rows)
    out = []
    idx = range(1, len(rows)) if pairs == "all" else [len(rows) - 1]
    for i in idx:
        for col, target in enumerate(targets):
            got = eocs[i][col]
            if abs(got - target) > window:
                out.append(f"EOC rows {rows[i - 1][0]}->{rows[i][0]} "
                           f"col{col + 1}: got {got:.3f} want "
                           f"{target} +- {window}")
    return out


def _report(num, label, failures):
    status = "PASS" if not failures else "FAIL"
    print(f"[criterion {num}] {status}: {label}"
          + ("" if not failures else " | " + "; ".join(failures)))
    assert not failures, f"criterion {num}: " + "\n".join(failures)


def test_criterion_1_modified_scheme_errors(study):
    rows = _rows(study, "modified", "errors", (6, 12, 18, 24))
    failures = _value_failures(rows, REFERENCE[("modified", "errors")])
    # asymptotic orders: finest refinement pair (the coarse-pair L2 order in
    # the reference table itself sits outside the window)
    failures += _eoc_failures(rows, (1.0, 2.0, 1.0), 0.1, pairs="last")
    wall = study["walltime_n24"]
    if wall > 900.0:
        failures.append(f"n=24 leg took {wall:.0f}s (> 900s)")
    # refinement must strictly decrease every column
    for col in range(3):
        vals = [t.as_tuple()[col] for _, t in rows]
        if not all(a > b for a, b in zip(vals, vals[1:])):
            failures.append(f"column {col + 1} not strictly decreasing")
    _report(1, f"modified-scheme error table, n=24 in {wall:.0f}s", failures)


def test_criterion_2_original_scheme_errors(study):
    rows = _rows(study, "original", "errors", (6, 12, 18))
    failures = _value_failures(rows, REFERENCE[("original", "errors")])
    failures += _eoc_failures(rows, (1.0, 2.0, 1.0), 0.1, pairs="last")
    _report(2, "original-scheme error table", failures)


def test_criterion_3_supercloseness(study):
    rows = _rows(study, "modified", "superclose", (6, 12, 18, 24))
    failures = _value_failures(rows, REFERENCE[("modified", "superclose")])
    failures += _eoc_failures(rows, (2.0, 2.0, 2.0), 0.15, pairs="all")
    _report(3, "supercloseness table", failures)


def test_criterion_4_superconvergence(study):
    rows = _rows(study, "modified", "superconv", (12, 18, 24))
    failures = _value_failures(rows, REFERENCE[("modified", "superconv")])
    failures += _eoc_failures(rows, (2.0, 2.0, 2.0), 0.2, pairs="all")
    _report(4, "postprocessed superconvergence table", failures)


def test_criterion_5_identity_battery():
    t0 = time.time()
    results = checks.run_battery()
    elapsed = time.time() - t0
    failures = [r.line() for r in results if not r.passed]
    if elapsed > 60.0:
        failures.append(f"battery took {elapsed:.0f}s (> 60s)")
    _report(5, f"exact-identity battery ({elapsed:.1f}s)", failures)


def test_criterion_6_solver_oracle():
    r = checks.check_solver_oracle()
    _report(6, r.detail, [] if r.passed else [r.line()])


def test_criterion_7_manufactured_solution_integrity():
    failures = []
    for check in (checks.check_divergence_free(), checks.check_load_fd_oracle()):
        if not check.passed:
            failures.append(check.line())
    _report(7, "divergence-free and FD load oracle", failures)
