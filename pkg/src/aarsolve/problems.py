"""Finite-difference generators for periodic Poisson and complex Helmholtz test systems.

Both systems discretize -(1/4 pi) times the 3-D Laplacian with central
differences on a uniform periodic grid, x index fastest.  The Helmholtz
variant adds a complex diagonal shift Q and drives the system with
b = P * density^alpha for a nonnegative density field.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .sparse import SparseMatrix, csr_from_arrays

__all__ = [
    "GridSpec",
    "HelmholtzConstants",
    "DEFAULT_HELMHOLTZ_CONSTANTS",
    "build_helmholtz_system",
    "build_poisson_system",
    "fd_second_derivative_weights",
    "synthetic_density",
]

_MIN_POINTS = 6


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on a cuboid: point counts and side lengths."""

    nx: int
    ny: int
    nz: int
    Lx: float = 1.0
    Ly: float = 1.0
    Lz: float = 1.0

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny), ("nz", self.nz)):
            if n < _MIN_POINTS:
                raise ValueError(f"{name} must be >= {_MIN_POINTS}, got {n}")
        for name, L in (("Lx", self.Lx), ("Ly", self.Ly), ("Lz", self.Lz)):
            if not L > 0:
                raise ValueError(f"{name} must be positive, got {L}")

    @property
    def hx(self) -> float:
        return self.Lx / self.nx

    @property
    def hy(self) -> float:
        return self.Ly / self.ny

    @property
    def hz(self) -> float:
        return self.Lz / self.nz

    @property
    def npoints(self) -> int:
        return self.nx * self.ny * self.nz


@dataclass(frozen=True)
class HelmholtzConstants:
    """Density exponent and complex coefficients of the Helmholtz test system."""

    alpha: float = 5.0 / 6.0 + np.sqrt(5.0) / 6.0
    P: complex = 0.003277 - 0.009081j
    Q: complex = -0.134992 - 0.070225j


DEFAULT_HELMHOLTZ_CONSTANTS = HelmholtzConstants()


def _solve_exact(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over the rationals with partial (nonzero) pivoting."""
    n = len(rhs)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = Fraction(1, 1) / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def fd_second_derivative_weights(order: int) -> np.ndarray:
    """Central-difference weights for d^2/dx^2 on offsets -order/2 .. order/2.

    The caller scales by 1/h^2.  The weights solve the Taylor moment system
    sum_s w_s s^t = 2 delta_{t,2} exactly in rational arithmetic, then round
    once to float64.
    """
    if order not in (2, 4, 6):
        raise ValueError(f"unsupported finite-difference order {order}")
    half = order // 2
    offsets = list(range(-half, half + 1))
    size = len(offsets)
    moments = [[Fraction(s) ** t for s in offsets] for t in range(size)]
    rhs = [Fraction(2) if t == 2 else Fraction(0) for t in range(size)]
    weights = _solve_exact(moments, rhs)
    return np.array([float(w) for w in weights], dtype=np.float64)


def _laplacian_scaled_triplets(grid: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coordinate triplets of -(1/4 pi) * (sixth-order periodic 3-D Laplacian)."""
    weights = fd_second_derivative_weights(6)
    half = 3
    n = grid.npoints
    idx = np.arange(n, dtype=np.int64)
    ix = idx % grid.nx
    iy = (idx // grid.nx) % grid.ny
    iz = idx // (grid.nx * grid.ny)
    scale = -1.0 / (4.0 * np.pi)
    rows_parts = []
    cols_parts = []
    vals_parts = []
    axes = (
        (grid.nx, grid.hx, lambda sx: (sx + iy * grid.nx + iz * grid.nx * grid.ny)),
        (grid.ny, grid.hy, lambda sy: (ix + sy * grid.nx + iz * grid.nx * grid.ny)),
        (grid.nz, grid.hz, lambda sz: (ix + iy * grid.nx + sz * grid.nx * grid.ny)),
    )
    coords = (ix, iy, iz)
    for (npts, h, to_index), coord in zip(axes, coords):
        factor = scale / (h * h)
        for off in range(-half, half + 1):
            shifted = (coord + off) % npts
            rows_parts.append(idx)
            cols_parts.append(to_index(shifted))
            vals_parts.append(np.full(n, weights[off + half] * factor))
    return (
        np.concatenate(rows_parts),
        np.concatenate(cols_parts),
        np.concatenate(vals_parts),
    )


def build_poisson_system(grid: GridSpec, rhs_density) -> tuple[SparseMatrix, np.ndarray]:
    """Periodic Poisson system: -(1/4 pi) Laplacian x = density projected to zero mean.

    The periodic operator annihilates constants, so the right-hand side is
    projected onto the zero-mean subspace for compatibility and any solution
    is determined only up to an additive constant.
    """
    rhs_density = np.asarray(rhs_density, dtype=np.float64)
    if rhs_density.shape != (grid.npoints,):
        raise ValueError(
            f"density has shape {rhs_density.shape}, expected ({grid.npoints},)"
        )
    rows, cols, vals = _laplacian_scaled_triplets(grid)
    A = csr_from_arrays(grid.npoints, grid.npoints, rows, cols, vals)
    b = rhs_density - rhs_density.mean()
    return A, b


def build_helmholtz_system(
    grid: GridSpec,
    density,
    constants: HelmholtzConstants = DEFAULT_HELMHOLTZ_CONSTANTS,
) -> tuple[SparseMatrix, np.ndarray]:
    """Complex Helmholtz system: (-(1/4 pi) Laplacian + Q I) x = P * density^alpha."""
    density = np.asarray(density, dtype=np.float64)
    if density.shape != (grid.npoints,):
        raise ValueError(f"density has shape {density.shape}, expected ({grid.npoints},)")
    if np.any(density < 0):
        k = int(np.flatnonzero(density < 0)[0])
        raise ValueError(f"density must be nonnegative, entry {k} is {density[k]}")
    n = grid.npoints
    rows, cols, vals = _laplacian_scaled_triplets(grid)
    idx = np.arange(n, dtype=np.int64)
    rows = np.concatenate([rows, idx])
    cols = np.concatenate([cols, idx])
    vals = np.concatenate([vals.astype(np.complex128), np.full(n, constants.Q)])
    A = csr_from_arrays(n, n, rows, cols, vals)
    b = constants.P * np.power(density, constants.alpha).astype(np.complex128)
    return A, b


def synthetic_density(grid: GridSpec, seed: int) -> np.ndarray:
    """Smooth, strictly positive, periodic density field with unit mean.

    A fixed number of randomized periodic bumps (von Mises profiles per axis)
    over a constant floor, normalized to mean 1.  Deterministic in the seed.
    """
    rng = np.random.default_rng(seed)
    n = grid.npoints
    idx = np.arange(n, dtype=np.int64)
    x = (idx % grid.nx) * grid.hx
    y = ((idx // grid.nx) % grid.ny) * grid.hy
    z = (idx // (grid.nx * grid.ny)) * grid.hz
    field = np.full(n, 0.1)
    for _ in range(4):
        cx, cy, cz = rng.uniform(0.0, (grid.Lx, grid.Ly, grid.Lz))
        sx, sy, sz = rng.uniform(2.0, 6.0, size=3)
        amp = rng.uniform(0.5, 1.5)
        bump = (
            sx * (np.cos(2.0 * np.pi * (x - cx) / grid.Lx) - 1.0)
            + sy * (np.cos(2.0 * np.pi * (y - cy) / grid.Ly) - 1.0)
            + sz * (np.cos(2.0 * np.pi * (z - cz) / grid.Lz) - 1.0)
        )
        field = field + amp * np.exp(bump)
    return field / field.mean()
