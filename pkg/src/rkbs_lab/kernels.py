"""Kernels on [0, 1], grids, Gram matrices and the kernel metric.

This is the finite surrogate of an index set T with a positive definite
function K: everything downstream works with a :class:`Grid` and the Gram
matrix of a :class:`Kernel` on it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError


class Family(str, enum.Enum):
    BROWNIAN = "brownian"
    BRIDGE = "bridge"
    RBF = "rbf"
    MATERN12 = "matern12"
    SPECTRUM = "spectrum"
    EMPIRICAL = "empirical"


def sine_basis(t, m: int) -> np.ndarray:
    """Values of sqrt(2) sin((k - 1/2) pi t), k = 1..m, as an array of shape t.shape + (m,).

    These are the eigenfunctions of min(s, t) on [0, 1] and the planted
    basis of synthetic-spectrum kernels.
    """
    t = np.asarray(t, dtype=float)
    freqs = (np.arange(1, m + 1) - 0.5) * np.pi
    return np.sqrt(2.0) * np.sin(t[..., None] * freqs)


@dataclass(frozen=True)
class Kernel:
    family: Family
    lengthscale: float | None = None
    lambdas: tuple[float, ...] = ()
    m: int | None = None
    source_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if self.family in (Family.RBF, Family.MATERN12):
            if self.lengthscale is None or not self.lengthscale > 0:
                raise ConfigError(
                    f"{self.family.value} kernel needs lengthscale > 0", key="kernel.lengthscale"
                )
        if self.family is Family.SPECTRUM:
            if any(not np.isfinite(v) or v < 0 for v in self.lambdas):
                raise ConfigError("spectrum eigenvalues must be finite and >= 0", key="kernel.lambdas")
            if self.m is not None and not 0 <= self.m <= len(self.lambdas):
                raise ConfigError(
                    f"basis order m={self.m} must lie in [0, {len(self.lambdas)}]", key="kernel.m"
                )
        if self.family is Family.EMPIRICAL and not self.source_path:
            raise ConfigError("empirical kernel needs a CSV path", key="kernel.path")

    # convenience constructors
    @classmethod
    def brownian(cls) -> Kernel:
        return cls(Family.BROWNIAN)

    @classmethod
    def bridge(cls) -> Kernel:
        return cls(Family.BRIDGE)

    @classmethod
    def rbf(cls, lengthscale: float) -> Kernel:
        return cls(Family.RBF, lengthscale=lengthscale)

    @classmethod
    def matern12(cls, lengthscale: float) -> Kernel:
        return cls(Family.MATERN12, lengthscale=lengthscale)

    @classmethod
    def spectrum(cls, lambdas, m: int | None = None) -> Kernel:
        return cls(Family.SPECTRUM, lambdas=tuple(lambdas), m=m)

    @classmethod
    def empirical(cls, path) -> Kernel:
        return cls(Family.EMPIRICAL, source_path=str(path))

    @property
    def planted(self) -> np.ndarray:
        """Eigenvalues actually used by a synthetic-spectrum kernel."""
        m = len(self.lambdas) if self.m is None else self.m
        return np.asarray(self.lambdas[:m], dtype=float)

    def __call__(self, s, t) -> np.ndarray:
        """Evaluate K(s, t) with numpy broadcasting."""
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        fam = self.family
        if fam is Family.BROWNIAN:
            out = np.minimum(s, t)
        elif fam is Family.BRIDGE:
            out = np.minimum(s, t) - s * t
        elif fam is Family.RBF:
            out = np.exp(-((s - t) ** 2) / (2.0 * self.lengthscale**2))
        elif fam is Family.MATERN12:
            out = np.exp(-np.abs(s - t) / self.lengthscale)
        elif fam is Family.SPECTRUM:
            lam = self.planted
            out = np.sum(lam * sine_basis(s, lam.size) * sine_basis(t, lam.size), axis=-1)
        else:
            raise NotImplementedError("an empirical Gram has no pointwise evaluator; use gram()")
        return out

    def matrix(self, x, y) -> np.ndarray:
        """Cross-kernel matrix [K(x_i, y_j)]."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.family is Family.SPECTRUM:
            lam = self.planted
            return (sine_basis(x, lam.size) * lam) @ sine_basis(y, lam.size).T
        return self(x[:, None], y[None, :])

    def diagonal(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family is Family.SPECTRUM:
            lam = self.planted
            return sine_basis(t, lam.size) ** 2 @ lam
        return self(t, t)

    def to_dict(self) -> dict:
        d: dict = {"family": self.family.value}
        if self.lengthscale is not None:
            d["lengthscale"] = self.lengthscale
        if self.family is Family.SPECTRUM:
            d["lambdas"] = list(self.lambdas)
            if self.m is not None:
                d["m"] = self.m
        if self.source_path is not None:
            d["path"] = self.source_path
        return d


def _cell_weights(points: np.ndarray) -> np.ndarray:
    # Length of each point's Voronoi cell in [0, 1]; trapezoid weights on uniform grids with endpoints.
    if points.size == 1:
        return np.ones(1)
    mids = 0.5 * (points[1:] + points[:-1])
    edges = np.concatenate([[0.0], mids, [1.0]])
    return np.diff(edges)


@dataclass(frozen=True, eq=False)
class Grid:
    points: np.ndarray
    weights: np.ndarray | None = None
    level: int = 0

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size == 0:
            raise ConfigError("grid must be nonempty", key="grid.n")
        if not np.all(np.isfinite(pts)) or pts[0] < 0 or pts[-1] > 1:
            raise ConfigError("grid points must lie in [0, 1]", key="grid")
        if np.any(np.diff(pts) <= 0):
            raise ConfigError("grid points must be strictly increasing", key="grid")
        w = _cell_weights(pts) if self.weights is None else np.array(self.weights, dtype=float).ravel()
        if w.shape != pts.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ConfigError("grid weights must be nonnegative and match the points", key="grid.weights")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.points.size

    @property
    def n(self) -> int:
        return self.points.size

    def subgrid(self, indices) -> Grid:
        """Grid on a subset of the points, with cell weights recomputed."""
        idx = np.asarray(indices, dtype=int)
        return Grid(self.points[idx])


def uniform_grid(n: int) -> Grid:
    """n equispaced points covering [0, 1] with trapezoid weights; a single point sits at 1/2."""
    if n < 1:
        raise ConfigError(f"grid size must be >= 1, got {n}", key="grid.n")
    pts = np.array([0.5]) if n == 1 else np.linspace(0.0, 1.0, n)
    return Grid(pts)


def dyadic_grid(level: int, include_origin: bool = True) -> Grid:
    """Points j / 2**level on [0, 1]; grids of increasing level are nested.

    With ``include_origin=False`` the point 0 is dropped (n = 2**level), which
    avoids a degenerate row for kernels vanishing at the origin.
    """
    if level < 0:
        raise ConfigError(f"grid level must be >= 0, got {level}", key="grid.levels")
    j0 = 0 if include_origin else 1
    pts = np.arange(j0, 2**level + 1) / 2**level
    return Grid(pts, level=level)


def nested_indices(fine_level: int, coarse_level: int, include_origin: bool = True) -> np.ndarray:
    """Indices of the coarse dyadic grid's points inside the fine one."""
    stride = 2 ** (fine_level - coarse_level)
    if include_origin:
        return np.arange(0, 2**fine_level + 1, stride)
    return np.arange(stride - 1, 2**fine_level, stride)


@dataclass(eq=False)
class GramMatrix:
    values: np.ndarray
    grid: Grid
    min_eig: float | None = field(default=None)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def default_tol_psd(self) -> float:
        return 1e-8 * float(np.trace(self.values)) / self.n


def load_gram_csv(path) -> np.ndarray:
    path = Path(path)
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read Gram CSV {path}: {exc}", key="kernel.path") from exc
    if arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"Gram CSV {path} is {arr.shape[0]}x{arr.shape[1]}, not square", key="kernel.path")
    if not np.array_equal(arr, arr.T):
        raise ConfigError(f"Gram CSV {path} is not symmetric", key="kernel.path")
    return arr


def _mirror_upper(a: np.ndarray) -> np.ndarray:
    return np.triu(a) + np.triu(a, 1).T


def gram(kernel: Kernel, grid: Grid) -> GramMatrix:
    if kernel.family is Family.EMPIRICAL:
        values = load_gram_csv(kernel.source_path)
        if values.shape[0] != grid.n:
            raise ConfigError(
                f"empirical Gram has size {values.shape[0]} but the grid has {grid.n} points", key="grid.n"
            )
    else:
        values = _mirror_upper(kernel.matrix(grid.points, grid.points))
    if not np.all(np.isfinite(values)):
        raise NumericalError("kernel produced non-finite values")
    return GramMatrix(values, grid)


@dataclass(frozen=True)
class PDCheck:
    is_psd: bool
    min_eig: float
    tol_psd: float


def check_positive_definite(G: GramMatrix, tol_psd: float | None = None) -> PDCheck:
    if not np.all(np.isfinite(G.values)):
        raise NumericalError("Gram matrix has non-finite entries")
    tol = G.default_tol_psd() if tol_psd is None else float(tol_psd)
    try:
        min_eig = float(np.linalg.eigvalsh(G.values)[0])
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    G.min_eig = min_eig
    return PDCheck(min_eig >= -tol, min_eig, tol)


def kernel_metric(kernel: Kernel, s, t):
    """Loeve distance sqrt(K(s,s) + K(t,t) - 2K(s,t)), clamped at zero."""
    sq = kernel(s, s) + kernel(t, t) - 2.0 * kernel(s, t)
    out = np.sqrt(np.maximum(sq, 0.0))
    return float(out) if out.ndim == 0 else out


def epsilon_net(kernel: Kernel, candidates: Grid, eps: float) -> np.ndarray:
    """Greedy farthest-point eps-net under d_K, started at the leftmost candidate.

    Returns sorted candidate indices.  Ties go to the lowest index.
    """
    if not eps > 0:
        raise ConfigError("eps must be > 0", key="thresholds.eps")
    pts = candidates.points
    chosen = [0]
    dist = kernel_metric(kernel, pts, np.full_like(pts, pts[0]))
    dist = np.atleast_1d(dist)
    while True:
        j = int(np.argmax(dist))
        if dist[j] <= eps:
            break
        chosen.append(j)
        dist = np.minimum(dist, kernel_metric(kernel, pts, np.full_like(pts, pts[j])))
    return np.array(sorted(chosen), dtype=int)


def covering_radius(kernel: Kernel, candidates: Grid, centers) -> float:
    pts = candidates.points
    c = pts[np.asarray(centers, dtype=int)]
    d = kernel_metric(kernel, pts[:, None], c[None, :])
    return float(np.max(np.min(d, axis=1)))


def _rank(a: np.ndarray, tol: float) -> int:
    return int(np.sum(np.linalg.svd(a, compute_uv=False) > tol))


def is_determining(G_full: GramMatrix, S, tol_rank: float | None = None) -> bool:
    """Whether values on S pin down every element of span{K(., t_i)}.

    Equivalent to rank(G[S, :]) == rank(G), both counted against one
    absolute tolerance (default 1e-10 times the largest singular value of G).
    """
    S = np.unique(np.asarray(S, dtype=int))
    if S.size == 0:
        raise ConfigError("S must be nonempty")
    G = G_full.values
    try:
        sv = np.linalg.svd(G, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"rank computation failed: {exc}") from exc
    tol = 1e-10 * sv[0] if tol_rank is None else float(tol_rank)
    return _rank(G[S, :], tol) == int(np.sum(sv > tol))
