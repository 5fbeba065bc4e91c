"""Sparse iterative linear solvers built around alternating Anderson-Richardson iteration.

The package bundles the solver itself, Krylov baselines (restarted GMRES,
Bi-CGSTAB, CG), Jacobi / ILU(0) / block-Jacobi-ILU(0) preconditioners,
Matrix Market I/O, and generators for periodic Poisson and complex Helmholtz
finite-difference test systems, plus a benchmark CLI.
"""

from .aar import (
    AarOptions,
    AndersonHistory,
    aar_solve,
    anderson_gamma,
    pseudoinverse,
    richardson_solve,
)
from .krylov import KrylovOptions, bicgstab_solve, cg_solve, gmres_solve
from .mmio import (
    MatrixMarketError,
    read_matrix_market,
    read_vector,
    write_matrix_market,
    write_vector,
)
from .precond import (
    BlockJacobiILU0,
    ILU0,
    Identity,
    Jacobi,
    build_block_jacobi_ilu0,
    build_ilu0,
    build_jacobi,
    make_preconditioner,
)
from .problems import (
    DEFAULT_HELMHOLTZ_CONSTANTS,
    GridSpec,
    HelmholtzConstants,
    build_helmholtz_system,
    build_poisson_system,
    fd_second_derivative_weights,
    synthetic_density,
)
from .report import RunRecord, SolveReport, SolveStatus, read_run_records, write_run_records
from .sparse import SparseMatrix, csr_from_arrays, csr_from_triplets, dot, norm2, spmv

__version__ = "0.1.0"

__all__ = [
    "AarOptions",
    "AndersonHistory",
    "BlockJacobiILU0",
    "DEFAULT_HELMHOLTZ_CONSTANTS",
    "GridSpec",
    "HelmholtzConstants",
    "ILU0",
    "Identity",
    "Jacobi",
    "KrylovOptions",
    "MatrixMarketError",
    "RunRecord",
    "SolveReport",
    "SolveStatus",
    "SparseMatrix",
    "aar_solve",
    "anderson_gamma",
    "bicgstab_solve",
    "build_block_jacobi_ilu0",
    "build_helmholtz_system",
    "build_ilu0",
    "build_jacobi",
    "build_poisson_system",
    "cg_solve",
    "csr_from_arrays",
    "csr_from_triplets",
    "dot",
    "fd_second_derivative_weights",
    "gmres_solve",
    "make_preconditioner",
    "norm2",
    "pseudoinverse",
    "read_matrix_market",
    "read_run_records",
    "read_vector",
    "richardson_solve",
    "spmv",
    "synthetic_density",
    "write_matrix_market",
    "write_run_records",
    "write_vector",
    "__version__",
]
