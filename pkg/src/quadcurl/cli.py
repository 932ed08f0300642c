"""Batch harness: convergence studies over mesh sizes, table emission and the
self-test battery.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 invariant
(self-test) failure.  Heavy imports happen after thread-count handling so that
``--threads`` (or QUADCURL_THREADS) can still influence the numerics backend.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4

DEFAULT_NS = (6, 12, 18, 24)
EXTENDED_NS = (36, 48)


@dataclass
class RunConfig:
    scheme: str = "modified"            # original | modified | both
    ns: tuple = DEFAULT_NS
    tol: float = 1e-10
    quad_order: int = 6
    tasks: tuple = ("errors",)          # errors | superclose | superconv
    fmt: str = "both"                   # csv | markdown | both
    out_dir: str = "reports"
    extended: bool = False

    def validate(self):
        if self.scheme not in ("original", "modified", "both"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.fmt not in ("csv", "markdown", "both"):
            raise ValueError(f"unknown format {self.fmt!r}")
        if self.quad_order < 1:
            raise ValueError("quadrature order must be >= 1")
        if not self.ns or any(n < 1 for n in self.ns):
            raise ValueError("mesh sizes must be positive")
        for task in self.tasks:
            if task not in ("errors", "superclose", "superconv"):
                raise ValueError(f"unknown task {task!r}")
        if "superconv" in self.tasks:
            bad = [n for n in self.ns if n % 3 != 0]
            if bad:
                raise ValueError(
                    f"superconv task needs n divisible by 3, got {bad}")
        if not self.extended:
            big = [n for n in self.ns if n > max(DEFAULT_NS)]
            if big:
                raise ValueError(
                    f"n values {big} need --extended (long runtimes)")

    @property
    def schemes(self):
        return ("original", "modified") if self.scheme == "both" \
            else (self.scheme,)


def _parse_config_file(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _build_parser():
    p = argparse.ArgumentParser(
        prog="quadcurl",
        description="Convergence studies for the grad-curl brick element on "
                    "the quad-curl model problem.")
    p.add_argument("--scheme", choices=["original", "modified", "both"])
    p.add_argument("--n", help="comma-separated mesh subdivisions, e.g. 6,12")
    p.add_argument("--task",
                   help="comma list of: errors, superclose, superconv, all")
    p.add_argument("--tol", type=float, help="solver relative residual")
    p.add_argument("--quad-order", type=int, dest="quad_order")
    p.add_argument("--out", help="output directory for reports")
    p.add_argument("--format", choices=["csv", "markdown", "both"],
                   dest="fmt")
    p.add_argument("--extended", action="store_true", default=None,
                   help="allow n beyond 24 (paper-scale runs)")
    p.add_argument("--selftest", action="store_true",
                   help="run the exact-identity battery and exit")
    p.add_argument("--threads", type=int,
                   help="numerics backend thread cap (best effort)")
    p.add_argument("--config", help="key=value file with the same options")
    return p


def _merge_config(args):
    """Precedence: explicit flags > environment > config file > defaults."""
    cfg = RunConfig()
    file_vals = _parse_config_file(args.config) if args.config else {}

    def pick(flag, env=None, conv=str):
        if getattr(args, flag, None) is not None:
            return getattr(args, flag)
        if env and os.environ.get(env):
            return conv(os.environ[env])
        if flag in file_vals:
            return conv(file_vals[flag])
        return None

    val = pick("scheme")
    if val is not None:
        cfg.scheme = val
    val = pick("n")
    if val is not None:
        cfg.ns = tuple(int(x) for x in str(val).split(",") if x)
    val = pick("task")
    if val is not None:
        tasks = tuple(t.strip() for t in str(val).split(",") if t.strip())
        cfg.tasks = (("errors", "superclose", "superconv")
                     if "all" in tasks else tasks)
    val = pick("tol", conv=float)
    if val is not None:
        cfg.tol = float(val)
    val = pick("quad_order", conv=int)
    if val is not None:
        cfg.quad_order = int(val)
    val = pick("out", env="QUADCURL_OUT")
    if val is not None:
        cfg.out_dir = val
    val = pick("fmt")
    if val is not None:
        cfg.fmt = val
    if args.extended is not None:
        cfg.extended = args.extended
    elif file_vals.get("extended") in ("1", "true", "yes"):
        cfg.extended = True
    return cfg


def run(config):
    """Execute the configured studies; returns report paths per (scheme, task)."""
    from . import analysis, interp, mms, system
    from .mesh import build_mesh, macro_partition

    exact = mms.build_exact_fields()
    q = config.quad_order
    reports = {(s, t): analysis.ConvergenceReport(scheme=s, quantity=t)
               for s in config.schemes for t in config.tasks}

    for n in config.ns:
        t0 = time.time()
        if n > max(DEFAULT_NS):
            print(f"warning: n={n} is an extended run "
                  f"(~{(n / 24) ** 4:.0f}x the n=24 cost)")
        mesh = build_mesh(n)
        gmap = system.build_dof_map(mesh)
        A = system.assemble_A(mesh, gmap)
        B = system.assemble_B(mesh, gmap)
        part = macro_partition(mesh) if "superconv" in config.tasks else None
        ihu = (interp.global_interp_Ih(exact, mesh, gmap, q=q)
               if "superclose" in config.tasks else None)
        for scheme in config.schemes:
            rhs = system.assemble_rhs(mesh, gmap, exact.f_value,
                                      mode=scheme, q=q)
            sys_ = system.SaddleSystem(A=A, B=B, rhs=rhs, gmap=gmap,
                                       mesh=mesh)
            u, _p, info = system.solve_saddle(sys_, tol=config.tol)
            for task in config.tasks:
                if task == "errors":
                    trip = analysis.error_vs_exact(u.values, exact, mesh,
                                                   gmap, q=q)
                elif task == "superclose":
                    trip = analysis.superclose_error(u.values, ihu, mesh,
                                                     gmap)
                else:
                    mf = interp.global_I3h(u.values, mesh, gmap, part)
                    trip = analysis.superconvergent_error(mf, exact, mesh,
                                                          q=q)
                reports[(scheme, task)].add(n, trip)
            print(f"  n={n} scheme={scheme}: solved "
                  f"({info['method']}, {info['iterations']} its, "
                  f"residual {info['residual']:.2e}), "
                  f"{time.time() - t0:.1f}s elapsed")
    paths = {}
    for key, report in reports.items():
        paths[key] = report.save(config.out_dir, fmt=config.fmt)
        print(f"wrote {', '.join(paths[key])}")
    return paths


def selftest():
    """Run the invariant battery; prints one verdict line per check."""
    from .checks import run_battery
    t0 = time.time()
    results = run_battery()
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print(f"{'all checks passed' if ok else 'CHECKS FAILED'} "
          f"({time.time() - t0:.1f}s)")
    return ok


def main(argv=None):
    args = _build_parser().parse_args(argv)

    threads = args.threads or os.environ.get("QUADCURL_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))

    if args.selftest:
        return EXIT_OK if selftest() else EXIT_INVARIANT

    try:
        config = _merge_config(args)
        config.validate()
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        from .mesh import NonDivisibleMesh
        from .system import MaxIterations, SingularSystem
        try:
            run(config)
        except NonDivisibleMesh as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (MaxIterations, SingularSystem) as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
    except KeyboardInterrupt:
        return 130
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
