"""Command-line interface: solve, bench, and generate subcommands."""

import numpy as np
import pytest

from aarsolve.cli import main
from aarsolve.mmio import read_matrix_market, read_vector, write_matrix_market, write_vector
from aarsolve.report import read_run_records
from aarsolve.sparse import csr_from_triplets


def write_system(tmp_path, n=12, name="sys", shift=4.0):
    entries = []
    for i in range(n):
        entries.append((i, i, shift))
        if i > 0:
            entries.append((i, i - 1, -1.0))
        if i < n - 1:
            entries.append((i, i + 1, -1.0))
    A = csr_from_triplets(n, n, entries)
    path = tmp_path / f"{name}.mtx"
    write_matrix_market(A, path)
    return A, path


def test_solve_converges_exit_zero(tmp_path, capsys):
    A, path = write_system(tmp_path)
    code = main(["solve", "--matrix", str(path), "--solver", "cg", "--tol", "1e-10"])
    out = capsys.readouterr().out
    assert code == 0
    assert "converged=true" in out
    assert "solver=cg" in out
    assert f"N={A.nrows}" in out


def test_solve_default_rhs_is_row_sums(tmp_path):
    # Without --rhs the right-hand side is A times ones, so the exact
    # solution is the ones vector.
    A, path = write_system(tmp_path)
    out = tmp_path / "x.mtx"
    code = main(
        ["solve", "--matrix", str(path), "--solver", "gmres", "--tol", "1e-12", "--out", str(out)]
    )
    assert code == 0
    x = read_vector(out)
    assert np.allclose(x, 1.0, atol=1e-9)


def test_solve_with_rhs_and_trace(tmp_path):
    A, path = write_system(tmp_path)
    rng = np.random.default_rng(5)
    b = rng.standard_normal(A.nrows)
    rhs = tmp_path / "b.mtx"
    write_vector(b, rhs)
    trace = tmp_path / "trace.csv"
    out = tmp_path / "x.mtx"
    code = main(
        [
            "solve", "--matrix", str(path), "--rhs", str(rhs),
            "--solver", "aar", "--precond", "jacobi",
            "--x0", "zeros", "--tol", "1e-10",
            "--trace", str(trace), "--out", str(out),
        ]
    )
    assert code == 0
    x = read_vector(out)
    assert np.allclose(A.matvec(x), b, atol=1e-8)
    lines = trace.read_text().splitlines()
    assert lines[0] == "iteration,relative_residual"
    iters = [int(row.split(",")[0]) for row in lines[1:]]
    # checks happen at iterations congruent to p - 1 (default p = 8)
    assert all(i % 8 == 7 for i in iters[:-1])
    rels = [float(row.split(",")[1]) for row in lines[1:]]
    assert rels[-1] <= 1e-10


def test_solve_nonconvergence_exit_two(tmp_path, capsys):
    _, path = write_system(tmp_path, shift=4.0)
    code = main(
        ["solve", "--matrix", str(path), "--solver", "cg", "--x0", "zeros",
         "--tol", "1e-16", "--max-iter", "3"]
    )
    captured = capsys.readouterr()
    assert code == 2
    assert "converged=false" in captured.out
    assert "status:" in captured.err


def test_solve_missing_matrix_exit_one(tmp_path, capsys):
    code = main(["solve", "--matrix", str(tmp_path / "none.mtx")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_solve_malformed_matrix_exit_one(tmp_path, capsys):
    path = tmp_path / "bad.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\nbroken\n")
    code = main(["solve", "--matrix", str(path)])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_solve_precondition_failure_exit_two(tmp_path, capsys):
    # zero diagonal defeats jacobi construction
    A = csr_from_triplets(2, 2, [(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)])
    path = tmp_path / "z.mtx"
    write_matrix_market(A, path)
    code = main(["solve", "--matrix", str(path), "--precond", "jacobi"])
    assert code == 2
    assert "preconditioner" in capsys.readouterr().err


def test_bad_flags_exit_one(tmp_path):
    _, path = write_system(tmp_path)
    with pytest.raises(SystemExit) as e:
        main(["solve", "--matrix", str(path), "--solver", "sor"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1


def test_bench_writes_sorted_csv(tmp_path, capsys):
    write_system(tmp_path, name="beta")
    write_system(tmp_path, name="alpha")
    out = tmp_path / "bench.csv"
    code = main(
        [
            "bench", "--dir", str(tmp_path),
            "--solvers", "cg,aar", "--preconds", "jacobi",
            "--tol", "1e-8", "--out", str(out),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    records = read_run_records(out)
    assert [r.matrix_name for r in records] == ["alpha", "alpha", "beta", "beta"]
    assert [r.solver for r in records] == ["aar", "cg", "aar", "cg"]
    assert all(r.converged for r in records)
    assert "wrote" in captured.out


def test_bench_skips_rhs_companions(tmp_path):
    _, path = write_system(tmp_path, name="only")
    # companion RHS file must not be treated as a matrix
    write_vector(np.ones(12), tmp_path / "only_rhs.mtx")
    out = tmp_path / "bench.csv"
    code = main(["bench", "--dir", str(tmp_path), "--solvers", "cg", "--preconds", "none",
                 "--out", str(out)])
    assert code == 0
    records = read_run_records(out)
    assert [r.matrix_name for r in records] == ["only"]


def test_bench_empty_directory_header_only(tmp_path):
    out = tmp_path / "bench.csv"
    code = main(["bench", "--dir", str(tmp_path), "--out", str(out)])
    assert code == 0
    assert read_run_records(out) == []
    header = out.read_text().splitlines()[0]
    assert header.startswith("matrix_name,")


def test_bench_records_preconditioner_failure(tmp_path):
    A = csr_from_triplets(2, 2, [(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)])
    write_matrix_market(A, tmp_path / "sad.mtx")
    out = tmp_path / "bench.csv"
    code = main(["bench", "--dir", str(tmp_path), "--solvers", "gmres", "--preconds", "jacobi",
                 "--out", str(out)])
    assert code == 0
    records = read_run_records(out)
    assert len(records) == 1
    assert not records[0].converged
    assert records[0].iterations == 0
    assert records[0].final_relative_residual == float("inf")


def test_bench_unknown_solver_exit_one(tmp_path, capsys):
    code = main(["bench", "--dir", str(tmp_path), "--solvers", "magic"])
    assert code == 1
    assert "unknown solver" in capsys.readouterr().err


def test_bench_missing_directory_exit_one(tmp_path, capsys):
    code = main(["bench", "--dir", str(tmp_path / "nope")])
    assert code == 1
    assert "not a directory" in capsys.readouterr().err


def test_bench_thread_env(tmp_path, monkeypatch):
    write_system(tmp_path, name="a")
    write_system(tmp_path, name="b")
    monkeypatch.setenv("AAR_SOLVE_THREADS", "2")
    out = tmp_path / "bench.csv"
    code = main(["bench", "--dir", str(tmp_path), "--solvers", "cg,bicgstab",
                 "--preconds", "none", "--out", str(out)])
    assert code == 0
    assert len(read_run_records(out)) == 4


def test_generate_poisson_round_trip(tmp_path):
    prefix = tmp_path / "p8"
    code = main(["generate", "--problem", "poisson", "--grid", "8,8,8", "--seed", "3",
                 "--out-prefix", str(prefix)])
    assert code == 0
    A = read_matrix_market(tmp_path / "p8.mtx")
    b = read_vector(tmp_path / "p8_rhs.mtx")
    assert A.nrows == 512
    assert abs(float(np.abs(A.matvec(np.ones(512))).max())) < 1e-12
    assert abs(float(b.mean())) < 1e-13


def test_generate_helmholtz_complex(tmp_path):
    prefix = tmp_path / "h"
    code = main(["generate", "--problem", "helmholtz", "--grid", "7,7,7",
                 "--out-prefix", str(prefix)])
    assert code == 0
    A = read_matrix_market(tmp_path / "h.mtx")
    assert A.is_complex
    assert read_vector(tmp_path / "h_rhs.mtx").dtype == np.complex128


def test_generate_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for prefix in (a, b):
        code = main(["generate", "--problem", "poisson", "--grid", "7,8,9", "--seed", "11",
                     "--out-prefix", str(prefix)])
        assert code == 0
    assert (tmp_path / "a.mtx").read_bytes() == (tmp_path / "b.mtx").read_bytes()
    assert (tmp_path / "a_rhs.mtx").read_bytes() == (tmp_path / "b_rhs.mtx").read_bytes()


def test_generate_rejects_small_grid(tmp_path, capsys):
    code = main(["generate", "--problem", "poisson", "--grid", "6,6,6",
                 "--out-prefix", str(tmp_path / "x")])
    assert code == 1
    assert "at least 7" in capsys.readouterr().err


def test_generate_rejects_malformed_grid(tmp_path, capsys):
    code = main(["generate", "--problem", "poisson", "--grid", "8,8",
                 "--out-prefix", str(tmp_path / "x")])
    assert code == 1
    assert "three" in capsys.readouterr().err


def test_generate_solve_pipeline(tmp_path):
    prefix = tmp_path / "helm"
    assert main(["generate", "--problem", "helmholtz", "--grid", "7,7,7", "--seed", "2",
                 "--out-prefix", str(prefix)]) == 0
    code = main([
        "solve", "--matrix", str(tmp_path / "helm.mtx"), "--rhs", str(tmp_path / "helm_rhs.mtx"),
        "--solver", "aar", "--precond", "jacobi", "--x0", "zeros", "--tol", "1e-8",
    ])
    assert code == 0
