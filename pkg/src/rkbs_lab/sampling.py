"""Gaussian path sampling and the Monte Carlo membership experiments."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import ConfigError, NumericalError
from .kernels import Grid, GramMatrix, Kernel, dyadic_grid, gram, nested_indices
from .norms import BanachNormSpec, NormEvaluator
from .rkhs import GridFunction, SpectralBasis, spectral_basis
from .rng import normal_rows, normals


class Method(str, enum.Enum):
    CHOLESKY = "cholesky"
    KL = "kl"


class MembershipVerdict(str, enum.Enum):
    PROBABILITY_ONE = "ProbabilityOne"
    PROBABILITY_ZERO = "ProbabilityZero"
    INCONCLUSIVE = "Inconclusive"


def jittered_cholesky(G: GramMatrix | np.ndarray, start: float = 1e-12, escalations: int = 4):
    """Lower Cholesky factor of G + eps trace(G)/n I, eps = start * 10^j for j = 0..escalations.

    Returns the factor and the jitter actually added.
    """
    values = G.values if isinstance(G, GramMatrix) else np.asarray(G, dtype=float)
    n = values.shape[0]
    scale = float(np.trace(values)) / n
    if scale <= 0:
        scale = 1.0
    eps = start
    for _ in range(escalations + 1):
        jitter = eps * scale
        try:
            return linalg.cholesky(values + jitter * np.eye(n), lower=True), jitter
        except linalg.LinAlgError:
            eps *= 10.0
    raise NumericalError(f"Cholesky failed after {escalations} jitter escalations (last jitter {jitter:g})")


@dataclass(frozen=True, eq=False)
class PathSample:
    path: GridFunction
    seed: int
    method: Method
    kl_rank: int | None = None


def sample_path(kernel: Kernel, grid: Grid, seed: int = 0, method: Method | str = Method.CHOLESKY,
                kl_rank: int | None = None, basis: SpectralBasis | None = None) -> PathSample:
    """One centered Gaussian path with covariance K on the grid.

    Cholesky mode is exact in distribution; KL mode is the partial sum
    sum_{k <= kl_rank} xi_k sqrt(lambda_k) phi_k.
    """
    method = Method(method)
    G = gram(kernel, grid)
    if method is Method.CHOLESKY:
        L, _ = jittered_cholesky(G)
        values = L @ normals(seed, 0, grid.n)
        return PathSample(GridFunction(values, grid), seed, method)
    basis = basis if basis is not None else spectral_basis(G)
    r = basis.rank if kl_rank is None else int(kl_rank)
    if not 1 <= r <= basis.rank:
        raise ConfigError(f"kl_rank must lie in [1, {basis.rank}], got {r}", key="kl_rank")
    values = basis.onb(r) @ normals(seed, 0, r)
    return PathSample(GridFunction(values, grid), seed, method, r)


def sample_paths(kernel: Kernel, grid: Grid, replicates: int, seed: int = 0,
                 method: Method | str = Method.CHOLESKY, kl_rank: int | None = None) -> np.ndarray:
    """Independent paths as rows; row r uses the replicate-r substream."""
    method = Method(method)
    G = gram(kernel, grid)
    if method is Method.CHOLESKY:
        L, _ = jittered_cholesky(G)
        return normal_rows(seed, replicates, grid.n) @ L.T
    basis = spectral_basis(G)
    r = basis.rank if kl_rank is None else int(kl_rank)
    if not 1 <= r <= basis.rank:
        raise ConfigError(f"kl_rank must lie in [1, {basis.rank}], got {r}", key="kl_rank")
    return normal_rows(seed, replicates, r) @ basis.onb(r).T


@dataclass
class MembershipReport:
    levels: list
    sizes: list
    norm_trajectories: np.ndarray  # (replicates, levels)
    bounded: np.ndarray
    bounded_fraction: float
    verdict: MembershipVerdict
    bound_factor: float
    seed: int
    config_echo: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "bounded_fraction": self.bounded_fraction,
            "bound_factor": self.bound_factor,
            "levels": self.levels,
            "sizes": self.sizes,
            "mean_norm_by_level": self.norm_trajectories.mean(axis=0).tolist(),
            "median_growth_ratio": float(np.median(self.norm_trajectories[:, -1] / self.norm_trajectories[:, 0])),
            "seed": self.seed,
            "config_echo": self.config_echo,
        }

    def rows(self):
        """Per-replicate CSV rows: replicate, level, norm, bounded_flag."""
        for r in range(self.norm_trajectories.shape[0]):
            for j, level in enumerate(self.levels):
                yield r, level, float(self.norm_trajectories[r, j]), int(self.bounded[r])


def membership_verdict(bounded_fraction: float) -> MembershipVerdict:
    if bounded_fraction >= 0.95:
        return MembershipVerdict.PROBABILITY_ONE
    if bounded_fraction <= 0.05:
        return MembershipVerdict.PROBABILITY_ZERO
    return MembershipVerdict.INCONCLUSIVE


def membership_experiment(
    kernel: Kernel,
    target: BanachNormSpec,
    grid_levels,
    replicates: int = 100,
    bound_factor: float = 2.0,
    seed: int = 0,
) -> MembershipReport:
    """Track the target norm of each sampled path as the dyadic grid is refined.

    Each replicate samples one path on the finest grid and restricts it to
    the coarser ones (common random numbers).  A replicate counts as bounded
    when its finest-level norm is at most bound_factor times its coarsest-level norm.
    """
    levels = sorted(int(level) for level in grid_levels)
    if len(levels) < 2 or len(set(levels)) != len(levels):
        raise ConfigError("need at least 2 distinct grid levels", key="grid.levels")
    if replicates < 50:
        raise ConfigError(f"replicates must be >= 50, got {replicates}", key="mc.replicates")
    if not bound_factor > 0:
        raise ConfigError("bound_factor must be > 0", key="thresholds.bound_factor")
    fine = levels[-1]
    paths = sample_paths(kernel, dyadic_grid(fine), replicates, seed)
    traj = np.empty((replicates, len(levels)))
    sizes = []
    for j, level in enumerate(levels):
        grid = dyadic_grid(level)
        idx = nested_indices(fine, level)
        traj[:, j] = NormEvaluator(target, grid)(paths[:, idx])
        sizes.append(grid.n)
    bounded = traj[:, -1] <= bound_factor * traj[:, 0]
    frac = float(np.mean(bounded))
    return MembershipReport(levels, sizes, traj, bounded, frac, membership_verdict(frac), bound_factor, seed)


@dataclass(frozen=True)
class ParzenResult:
    slope: float
    intercept: float
    levels: list
    means: list


def parzen_experiment(basis: SpectralBasis, n_levels, replicates: int = 200, seed: int = 0) -> ParzenResult:
    """Mean of ||S_n||^2 in H(K) = sum_{k <= n} xi_k^2 per level, with a linear fit in n."""
    levels = sorted(int(n) for n in n_levels)
    if len(levels) < 2 or levels[0] < 1:
        raise ConfigError("need at least 2 positive levels", key="series_levels")
    if levels[-1] > basis.rank:
        raise ConfigError(f"level {levels[-1]} exceeds the basis rank {basis.rank}", key="series_levels")
    xi2 = normal_rows(seed, replicates, levels[-1]) ** 2
    cums = np.cumsum(xi2, axis=1)
    means = [float(np.mean(cums[:, n - 1])) for n in levels]
    slope, intercept = np.polyfit(levels, means, 1)
    return ParzenResult(float(slope), float(intercept), levels, means)


@dataclass(frozen=True)
class RotationCheck:
    max_moment_gap: float
    mean_gap: float
    var_gap: float
    phi: float
    t_probe: int


def rotation_invariance_check(kernel: Kernel, grid: Grid, t_probe: int, phi: float,
                              replicates: int = 10_000, seed: int = 0) -> RotationCheck:
    """Compare the first two moments of sin(phi) x + cos(phi) y with those of x at one grid point.

    x and y are independent paths (substreams 2r and 2r + 1).  Gaps are in
    units of the standard error of the difference, treating the two samples
    as independent.
    """
    if replicates < 1000:
        raise ConfigError(f"replicates must be >= 1000, got {replicates}", key="mc.replicates")
    if not 0 <= t_probe < grid.n:
        raise ConfigError(f"probe index {t_probe} outside the grid", key="probe.index")
    L, _ = jittered_cholesky(gram(kernel, grid))
    row = L[t_probe]
    z = normal_rows(seed, 2 * replicates, grid.n) @ row
    x, y = z[0::2], z[1::2]
    mix = np.sin(phi) * x + np.cos(phi) * y
    n = float(replicates)

    def var_se(v):
        c = v - v.mean()
        m2 = np.mean(c**2)
        return np.var(v, ddof=1), np.sqrt(max(np.mean(c**4) - m2**2, 0.0) / n)

    se_mean = np.sqrt(np.var(mix, ddof=1) / n + np.var(x, ddof=1) / n)
    (vm, sm), (vx, sx) = var_se(mix), var_se(x)
    se_var = np.sqrt(sm**2 + sx**2)
    mean_gap = abs(mix.mean() - x.mean()) / se_mean if se_mean > 0 else 0.0
    var_gap = abs(vm - vx) / se_var if se_var > 0 else 0.0
    return RotationCheck(float(max(mean_gap, var_gap)), float(mean_gap), float(var_gap), float(phi), int(t_probe))
