"""Command-line front end: solve one system, run a benchmark sweep, or generate test systems."""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .aar import AarOptions, aar_solve, richardson_solve
from .krylov import KrylovOptions, bicgstab_solve, cg_solve, gmres_solve
from .mmio import (
    MatrixMarketError,
    read_matrix_market,
    read_vector,
    write_matrix_market,
    write_vector,
)
from .precond import make_preconditioner
from .problems import (
    GridSpec,
    build_helmholtz_system,
    build_poisson_system,
    synthetic_density,
)
from .report import RunRecord, write_run_records

SOLVERS = ("aar", "gmres", "bicgstab", "cg", "richardson")
PRECONDS = ("none", "jacobi", "ilu0", "block-ilu0")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _run_solver(name: str, A, b, x0, P, args, deadline=None):
    if name == "aar":
        opts = AarOptions(
            omega=args.omega,
            beta=args.beta,
            m=args.m,
            p=args.p,
            tol=args.tol,
            max_iter=args.max_iter,
        )
        return aar_solve(A, b, x0, P, opts, deadline=deadline)
    if name == "richardson":
        return richardson_solve(
            A,
            b,
            x0,
            P,
            omega=args.omega,
            tol=args.tol,
            max_iter=args.max_iter,
            deadline=deadline,
        )
    opts = KrylovOptions(tol=args.tol, max_iter=args.max_iter, restart=args.restart)
    solver = {"gmres": gmres_solve, "bicgstab": bicgstab_solve, "cg": cg_solve}[name]
    return solver(A, b, x0, P, opts, deadline=deadline)


def _initial_guess(kind: str, n: int) -> np.ndarray:
    if kind == "ones":
        return np.ones(n)
    return np.zeros(n)


def _record_line(record: RunRecord) -> str:
    return (
        f"matrix={record.matrix_name} N={record.N} solver={record.solver} "
        f"precond={record.preconditioner} converged={'true' if record.converged else 'false'} "
        f"iterations={record.iterations} "
        f"final_relative_residual={record.final_relative_residual:.6e} "
        f"wall_time_seconds={record.wall_time_seconds:.6f}"
    )


def _write_trace(path, trace) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("iteration", "relative_residual"))
        for iteration, rel in trace:
            writer.writerow((iteration, repr(float(rel))))


def cmd_solve(args) -> int:
    try:
        A = read_matrix_market(args.matrix)
        b = read_vector(args.rhs) if args.rhs else A.matvec(np.ones(A.ncols))
    except (MatrixMarketError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    name = Path(args.matrix).stem
    x0 = _initial_guess(args.x0, A.ncols)
    setup_start = time.perf_counter()
    try:
        P = make_preconditioner(args.precond, A, nblocks=args.blocks)
    except ValueError as exc:
        print(f"error: preconditioner construction failed: {exc}", file=sys.stderr)
        return 2
    setup_time = time.perf_counter() - setup_start
    try:
        solve_start = time.perf_counter()
        report = _run_solver(args.solver, A, b, x0, P, args)
        wall = time.perf_counter() - solve_start
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.include_setup:
        wall += setup_time
    record = RunRecord(
        matrix_name=name,
        N=A.nrows,
        solver=args.solver,
        preconditioner=args.precond,
        converged=report.converged,
        iterations=report.iterations,
        final_relative_residual=report.final_relative_residual,
        wall_time_seconds=wall,
    )
    print(_record_line(record))
    if not report.converged:
        status = report.status.value
        if report.breakdown_reason:
            status += f" ({report.breakdown_reason})"
        print(f"status: {status}", file=sys.stderr)
    try:
        if args.out:
            write_vector(report.x, args.out)
        if args.trace:
            _write_trace(args.trace, report.residual_trace)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0 if report.converged else 2


def cmd_bench(args) -> int:
    directory = Path(args.dir)
    if not directory.is_dir():
        print(f"error: {directory} is not a directory", file=sys.stderr)
        return 1
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    preconds = [p.strip() for p in args.preconds.split(",") if p.strip()]
    for s in solvers:
        if s not in SOLVERS:
            print(f"error: unknown solver {s!r}", file=sys.stderr)
            return 1
    for p in preconds:
        if p not in PRECONDS:
            print(f"error: unknown preconditioner {p!r}", file=sys.stderr)
            return 1
    paths = sorted(
        p for p in directory.glob("*.mtx") if not p.name.endswith("_rhs.mtx")
    )
    jobs = []
    records = []
    for path in paths:
        try:
            A = read_matrix_market(path)
        except (MatrixMarketError, OSError) as exc:
            print(f"warning: skipping {path.name}: {exc}", file=sys.stderr)
            continue
        name = path.stem
        b = A.matvec(np.ones(A.ncols))
        x0 = _initial_guess(args.x0, A.ncols)
        for precond_name in preconds:
            setup_start = time.perf_counter()
            try:
                P = make_preconditioner(precond_name, A, nblocks=args.blocks)
            except ValueError as exc:
                print(
                    f"warning: {name}: {precond_name} construction failed: {exc}",
                    file=sys.stderr,
                )
                for solver_name in solvers:
                    records.append(
                        RunRecord(name, A.nrows, solver_name, precond_name,
                                  False, 0, float("inf"), 0.0)
                    )
                continue
            setup_time = time.perf_counter() - setup_start

            for solver_name in solvers:
                def job(A=A, b=b, x0=x0, P=P, name=name, solver_name=solver_name,
                        precond_name=precond_name, setup_time=setup_time):
                    deadline = time.monotonic() + args.time_limit
                    start = time.perf_counter()
                    report = _run_solver(solver_name, A, b, x0, P, args, deadline=deadline)
                    wall = time.perf_counter() - start
                    if args.include_setup:
                        wall += setup_time
                    return RunRecord(
                        matrix_name=name,
                        N=A.nrows,
                        solver=solver_name,
                        preconditioner=precond_name,
                        converged=report.converged,
                        iterations=report.iterations,
                        final_relative_residual=report.final_relative_residual,
                        wall_time_seconds=wall,
                    )
                jobs.append(job)
    workers = 1
    env = os.environ.get("AAR_SOLVE_THREADS", "").strip()
    if env:
        try:
            workers = max(1, int(env))
        except ValueError:
            print(f"warning: ignoring invalid AAR_SOLVE_THREADS={env!r}", file=sys.stderr)
    if workers == 1 or len(jobs) <= 1:
        records.extend(job() for job in jobs)
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            records.extend(pool.map(lambda j: j(), jobs))
    records.sort(key=lambda r: (r.matrix_name, r.solver, r.preconditioner))
    for record in records:
        print(_record_line(record))
    try:
        write_run_records(records, args.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


def _parse_triple(text: str, kind, flag: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"{flag} expects three comma-separated values, got {text!r}")
    return tuple(kind(p) for p in parts)


def cmd_generate(args) -> int:
    try:
        nx, ny, nz = _parse_triple(args.grid, int, "--grid")
        Lx, Ly, Lz = _parse_triple(args.lengths, float, "--lengths")
        if min(nx, ny, nz) < 7:
            raise ValueError(
                f"grid {nx},{ny},{nz}: a sixth-order stencil needs at least 7 points per dimension"
            )
        grid = GridSpec(nx, ny, nz, Lx, Ly, Lz)
        density = synthetic_density(grid, args.seed)
        if args.problem == "poisson":
            A, b = build_poisson_system(grid, density)
        else:
            A, b = build_helmholtz_system(grid, density)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    prefix = Path(args.out_prefix)
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True, exist_ok=True)
    matrix_path = prefix.with_name(prefix.name + ".mtx")
    rhs_path = prefix.with_name(prefix.name + "_rhs.mtx")
    try:
        write_matrix_market(A, matrix_path)
        write_vector(b, rhs_path)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {matrix_path} ({A.nrows}x{A.ncols}, nnz={A.nnz}) and {rhs_path}")
    return 0


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, default=1e-6, help="relative residual tolerance")
    parser.add_argument("--max-iter", type=int, default=100_000, dest="max_iter")
    parser.add_argument("--omega", type=float, default=0.6, help="Richardson relaxation")
    parser.add_argument("--beta", type=float, default=0.6, help="Anderson relaxation")
    parser.add_argument("--m", type=int, default=9, help="Anderson history length")
    parser.add_argument("--p", type=int, default=8, help="extrapolation period")
    parser.add_argument("--restart", type=int, default=30, help="GMRES restart length")
    parser.add_argument("--blocks", type=int, default=4, help="block count for block-ilu0")
    parser.add_argument(
        "--include-setup",
        action="store_true",
        help="include preconditioner construction in reported wall time",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aarsolve", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve one system from Matrix Market files")
    solve.add_argument("--matrix", required=True, help="coordinate-format .mtx file")
    solve.add_argument("--rhs", help="right-hand side .mtx (defaults to A times ones)")
    solve.add_argument("--solver", choices=SOLVERS, default="aar")
    solve.add_argument("--precond", choices=PRECONDS, default="none")
    solve.add_argument("--x0", choices=("zeros", "ones"), default="ones")
    solve.add_argument("--out", help="write the solution vector here")
    solve.add_argument("--trace", help="write the residual trace CSV here")
    _add_solver_flags(solve)
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("bench", help="sweep solvers x preconditioners over a matrix directory")
    bench.add_argument("--dir", required=True, help="directory of .mtx matrices")
    bench.add_argument("--solvers", default="aar,gmres,bicgstab")
    bench.add_argument("--preconds", default="jacobi,ilu0")
    bench.add_argument("--time-limit", type=float, default=1000.0, dest="time_limit",
                       help="per-run wall-clock cap in seconds")
    bench.add_argument("--out", default="bench.csv", help="output CSV path")
    bench.add_argument("--x0", choices=("zeros", "ones"), default="zeros")
    _add_solver_flags(bench)
    bench.set_defaults(func=cmd_bench)

    generate = sub.add_parser("generate", help="generate a finite-difference test system")
    generate.add_argument("--problem", choices=("poisson", "helmholtz"), required=True)
    generate.add_argument("--grid", required=True, help="nx,ny,nz (each at least 7)")
    generate.add_argument("--lengths", default="1,1,1", help="Lx,Ly,Lz")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--out-prefix", required=True, dest="out_prefix")
    generate.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
