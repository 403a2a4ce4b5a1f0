"""Finite-dimensional realization of the RKHS H(K) on a grid.

Elements are kernel expansions sum_i a_i K(., t_i); norms of sampled data
are the minimal-norm interpolation norms; the Nystrom eigenpairs give the
orthonormal basis h_k = sqrt(lambda_k) phi_k used by the sampling and
gamma modules.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import ConfigError, NumericalError
from .kernels import Grid, GramMatrix


@dataclass(frozen=True, eq=False)
class GridFunction:
    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.grid.n:
            raise ConfigError(f"function has {v.size} values but the grid has {self.grid.n} points")
        if not np.all(np.isfinite(v)):
            raise NumericalError("grid function has non-finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class RkhsElement:
    """x = sum_i coefficients[i] K(., t_i)."""

    coefficients: np.ndarray
    gram: GramMatrix

    def values(self) -> np.ndarray:
        return self.gram.values @ self.coefficients

    def norm(self) -> float:
        return float(np.sqrt(max(rkhs_inner(self, self), 0.0)))


def rkhs_inner(a: RkhsElement, b: RkhsElement) -> float:
    if a.gram is not b.gram and not (
        a.gram.values.shape == b.gram.values.shape and np.array_equal(a.gram.values, b.gram.values)
    ):
        raise ConfigError("elements live on different Gram matrices")
    return float(a.coefficients @ a.gram.values @ b.coefficients)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column k holds phi_k on the grid, W-orthonormal
    grid: Grid
    all_eigenvalues: np.ndarray  # before the cutoff, for the trace identity

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    def onb(self, n: int | None = None) -> np.ndarray:
        """Grid values of h_k = sqrt(lambda_k) phi_k, one column per k <= n."""
        n = self.rank if n is None else n
        return self.eigenvectors[:, :n] * np.sqrt(self.eigenvalues[:n])

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def spectral_basis(G: GramMatrix, cutoff_rel: float = 1e-12) -> SpectralBasis:
    """Nystrom eigenpairs of the integral operator with kernel K and grid quadrature.

    Solves the symmetric problem W^1/2 G W^1/2 u = lambda u and returns
    phi = W^-1/2 u, sorted by decreasing lambda, keeping lambda >= cutoff_rel * lambda_1.
    The sign of each phi_k makes its first non-negligible entry positive.
    """
    w = G.grid.weights
    if np.any(w <= 0):
        raise ConfigError("spectral basis needs strictly positive quadrature weights", key="grid.weights")
    sw = np.sqrt(w)
    a = sw[:, None] * G.values * sw[None, :]
    try:
        lam, u = linalg.eigh(a)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    lam = lam[::-1]
    u = u[:, ::-1]
    top = lam[0] if lam.size else 0.0
    if top <= 0:
        keep = 0
    else:
        keep = int(np.sum(lam >= cutoff_rel * top))
    phi = u[:, :keep] / sw[:, None]
    for k in range(keep):
        col = phi[:, k]
        big = np.flatnonzero(np.abs(col) > 1e-8 * np.max(np.abs(col)))
        if big.size and col[big[0]] < 0:
            phi[:, k] = -col
    return SpectralBasis(lam[:keep].copy(), phi, G.grid, lam.copy())


def reproducing_residual(G: GramMatrix, basis: SpectralBasis) -> float:
    """max_ij |sum_k lambda_k phi_k(t_i) phi_k(t_j) - K(t_i, t_j)|."""
    if basis.rank == 0:
        return float(np.max(np.abs(G.values)))
    return float(np.max(np.abs(basis.reconstruct() - G.values)))


def auto_reg(G: GramMatrix | np.ndarray) -> float:
    values = G.values if isinstance(G, GramMatrix) else G
    return 1e-10 * float(np.trace(values)) / values.shape[0]


class InterpolationNorm:
    """Factorization of G + reg I, reusable across many data vectors.

    ``reg="auto"`` first tries reg = 0 and falls back to 1e-10 trace(G)/n
    when the Cholesky factorization fails or has a pivot below that level.
    """

    def __init__(self, values: np.ndarray, reg: float | str = "auto"):
        self.n = values.shape[0]
        if reg == "auto":
            fallback = auto_reg(values)
            try:
                c, low = linalg.cho_factor(values, lower=True, check_finite=True)
                if np.min(np.diag(c)) ** 2 > fallback:
                    self._cho, self.reg = (c, low), 0.0
                    return
            except linalg.LinAlgError:
                pass
            reg = fallback
        reg = float(reg)
        try:
            self._cho = linalg.cho_factor(values + reg * np.eye(self.n), lower=True)
        except linalg.LinAlgError as exc:
            raise NumericalError(f"G + {reg:g} I is numerically singular") from exc
        self.reg = reg

    def squared(self, y: np.ndarray) -> np.ndarray:
        """y^T (G + reg I)^-1 y for a vector or for each row of a matrix."""
        y = np.asarray(y, dtype=float)
        z = linalg.cho_solve(self._cho, y.T)
        return np.maximum(np.sum(y.T * z, axis=0), 0.0)

    def __call__(self, y: np.ndarray):
        return np.sqrt(self.squared(y))


def rkhs_norm_of_values(G: GramMatrix, y: GridFunction | np.ndarray, reg: float | str = "auto") -> float:
    """sqrt(y^T (G + reg I)^-1 y): the H(K) norm of the minimal-norm interpolant of y."""
    v = y.values if isinstance(y, GridFunction) else np.asarray(y, dtype=float)
    if v.shape != (G.n,):
        raise ConfigError(f"data of shape {v.shape} does not match a Gram of size {G.n}")
    if not np.any(v):
        return 0.0
    return float(InterpolationNorm(G.values, reg)(v))


def save_spectral_basis_csv(basis: SpectralBasis, path) -> None:
    """One row per mode: eigenvalue followed by phi_k at every grid point."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for k in range(basis.rank):
            writer.writerow([repr(float(basis.eigenvalues[k]))] + [repr(float(v)) for v in basis.eigenvectors[:, k]])


def load_spectral_basis_csv(path, grid: Grid) -> SpectralBasis:
    rows = np.loadtxt(Path(path), delimiter=",", ndmin=2)
    if rows.shape[1] != grid.n + 1:
        raise ConfigError(f"basis CSV has {rows.shape[1] - 1} grid values per mode, grid has {grid.n}")
    lam = rows[:, 0].copy()
    return SpectralBasis(lam, rows[:, 1:].T.copy(), grid, lam.copy())
