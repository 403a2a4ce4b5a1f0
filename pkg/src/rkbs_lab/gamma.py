"""Gaussian sums of finite-rank operators and the series convergence diagnostic.

All expectations are Monte Carlo estimates with the exponent p = 2, i.e.
(E || sum_k xi_k x_k ||^2)^1/2 for i.i.d. standard normal xi_k.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .kernels import Family, Grid, Kernel, gram
from .norms import BanachNormSpec, NormEvaluator, NormKind, c0_tail_small
from .rkhs import GridFunction, SpectralBasis
from .rng import normal_rows, substream


class GammaVerdict(str, enum.Enum):
    RADONIFYING = "Radonifying"
    NOT_RADONIFYING = "NotRadonifying"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class FiniteRankOperator:
    """A h_k = images[k] for an orthonormal system (h_k), mapping into ``target``."""

    images: np.ndarray  # shape (rank, grid.n)
    grid: Grid
    target: BanachNormSpec
    source_note: str = ""

    def __post_init__(self):
        imgs = np.atleast_2d(np.asarray(self.images, dtype=float))
        if imgs.shape[0] == 0:
            raise ConfigError("a finite-rank operator needs at least one image")
        if imgs.shape[1] != self.grid.n:
            raise ConfigError(f"images have {imgs.shape[1]} values, the grid has {self.grid.n}")
        object.__setattr__(self, "images", imgs)

    @classmethod
    def from_functions(cls, functions: list[GridFunction], target: BanachNormSpec, source_note: str = ""):
        if not functions:
            raise ConfigError("a finite-rank operator needs at least one image")
        grid = functions[0].grid
        if any(f.grid is not grid for f in functions):
            raise ConfigError("all images must share one grid")
        return cls(np.stack([f.values for f in functions]), grid, target, source_note)

    @classmethod
    def from_basis(cls, basis: SpectralBasis, target: BanachNormSpec, n: int | None = None):
        return cls(basis.onb(n).T, basis.grid, target, "H(K) embedding via KL basis")

    @property
    def rank(self) -> int:
        return self.images.shape[0]


@dataclass(frozen=True)
class GammaEstimate:
    estimate: float
    std_err: float


def _estimate(sq_norms: np.ndarray) -> GammaEstimate:
    m = float(np.mean(sq_norms))
    se_sq = float(np.std(sq_norms, ddof=1) / np.sqrt(sq_norms.size))
    est = np.sqrt(m)
    return GammaEstimate(float(est), se_sq / (2.0 * est) if est > 0 else 0.0)


def finite_rank_gamma_norm(A: FiniteRankOperator, mc_samples: int = 2000, seed: int = 0) -> GammaEstimate:
    if mc_samples < 100:
        raise ConfigError(f"mc_samples must be >= 100, got {mc_samples}", key="mc.samples")
    xi = substream(seed, 0).standard_normal((mc_samples, A.rank))
    norms = NormEvaluator(A.target, A.grid)(xi @ A.images)
    return _estimate(np.asarray(norms) ** 2)


def hs_norm_sq(kernel: Kernel, grid: Grid) -> float:
    """sum_i w_i K(t_i, t_i): trace of the Nystrom operator, = squared HS norm of H(K) -> L2."""
    if kernel.family is Family.EMPIRICAL:
        diag = np.diag(gram(kernel, grid).values)
    else:
        diag = kernel.diagonal(grid.points)
    return float(diag @ grid.weights)


def haar_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    return q * np.sign(np.diag(r))


def gamma_summing_lower_bound(A: FiniteRankOperator, n_rotations: int = 16, mc_samples: int = 2000,
                              seed: int = 0) -> float:
    """Largest Monte Carlo gamma-norm over randomly rotated subsystems of A's defining system.

    The defining system itself is always a candidate.  All candidates share
    the same normal draws, so their comparison is not blurred by noise.
    """
    if n_rotations < 1:
        raise ConfigError("n_rotations must be >= 1", key="mc.rotations")
    if not np.any(A.images):
        return 0.0
    best = finite_rank_gamma_norm(A, mc_samples, seed).estimate
    rng = substream(seed, 1)
    k = A.rank
    for _ in range(n_rotations):
        m = int(rng.integers(1, k + 1))
        subset = np.sort(rng.choice(k, size=m, replace=False))
        q = haar_orthogonal(m, rng)
        rotated = FiniteRankOperator(q.T @ A.images[subset], A.grid, A.target)
        best = max(best, finite_rank_gamma_norm(rotated, mc_samples, seed).estimate)
    return best


# ---------------------------------------------------------------- series diagnostic


@dataclass
class EmbeddingReport:
    partial_sum_stats: list  # (n, mean_sq_norm, std_err)
    cauchy_stats: list  # (n, mean ||S_2n - S_n||)
    hs_norm_sq: float | None
    gamma_lower_bound: float
    verdict: GammaVerdict
    evidence: str
    slope: float | None = None
    growth_exponent: float | None = None
    seed: int = 0
    thresholds: dict = field(default_factory=dict)
    c0_tail_fraction: float | None = None

    def to_dict(self) -> dict:
        cauchy = dict(self.cauchy_stats)
        return {
            "verdict": self.verdict.value,
            "slope": self.slope,
            "growth_exponent": self.growth_exponent,
            "levels": [
                {"n": n, "mean_sq": m, "stderr": se, "cauchy": cauchy.get(n)}
                for n, m, se in self.partial_sum_stats
            ],
            "hs_norm_sq": self.hs_norm_sq,
            "gamma_lower_bound": self.gamma_lower_bound,
            "evidence": self.evidence,
            "thresholds": self.thresholds,
            "c0_tail_fraction": self.c0_tail_fraction,
            "seed": self.seed,
        }


def _loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)[0])


def gamma_series_diagnostic(
    basis: SpectralBasis | FiniteRankOperator,
    target: BanachNormSpec,
    n_levels,
    replicates: int = 40,
    seed: int = 0,
    slope_threshold: float = 0.25,
    growth_threshold: float = 0.8,
    plateau_ratio: float = 0.5,
    c0_threshold: float = 1e-3,
) -> EmbeddingReport:
    """Monte Carlo evidence on whether sum_k xi_k h_k converges in the target norm.

    Verdict rules, in order:
      * increments S_2n - S_n vanish at the last level -> Radonifying (series is eventually constant);
      * log-log growth exponent of E||S_n||^2 >= growth_threshold -> NotRadonifying;
      * log-log slope of E||S_2n - S_n|| <= -slope_threshold and last/first increment
        ratio < plateau_ratio -> Radonifying;
      * otherwise Inconclusive.
    Levels beyond a finite rank reuse the full sum, whose remaining terms are zero.
    For weighted-sup targets the report also carries the fraction of final
    partial sums passing the null-sequence tail proxy.
    """
    images = basis.onb().T if isinstance(basis, SpectralBasis) else basis.images
    grid = basis.grid
    levels = sorted(int(n) for n in n_levels)
    if len(levels) < 3 or levels[0] < 1 or len(set(levels)) != len(levels):
        raise ConfigError("need at least 3 distinct positive series levels", key="series_levels")
    if replicates < 20:
        raise ConfigError(f"replicates must be >= 20, got {replicates}", key="mc.replicates")
    rank = images.shape[0]
    notes = []
    if levels[-1] > rank:
        notes.append(f"levels above rank {rank} reuse the rank-{rank} sum")
    evaluator = NormEvaluator(target, grid)
    xi = normal_rows(seed, replicates, min(levels[-1], rank))

    def partial(n):
        n = min(n, rank)
        return xi[:, :n] @ images[:n]

    sums = {n: partial(n) for n in levels}
    stats = []
    for n in levels:
        sq = np.asarray(evaluator(sums[n])) ** 2
        stats.append((n, float(np.mean(sq)), float(np.std(sq, ddof=1) / np.sqrt(replicates))))
    cauchy = []
    for n in levels:
        if 2 * n in sums:
            cauchy.append((n, float(np.mean(evaluator(sums[2 * n] - sums[n])))))
    if len(cauchy) < 2:
        raise ConfigError("series levels must contain at least two doubling pairs (n, 2n)", key="series_levels")

    scale = max(np.sqrt(m) for _, m, _ in stats)
    growth = _loglog_slope([n for n, _, _ in stats], [max(m, 1e-300) for _, m, _ in stats])
    positive = [(n, c) for n, c in cauchy if c > 1e-12 * scale]
    slope = _loglog_slope(*zip(*positive)) if len(positive) >= 2 else None

    if cauchy[-1][1] <= 1e-12 * scale:
        verdict = GammaVerdict.RADONIFYING
        notes.append("partial sums are eventually constant")
    elif growth >= growth_threshold:
        verdict = GammaVerdict.NOT_RADONIFYING
        notes.append(f"E||S_n||^2 grows like n^{growth:.3f}")
    elif slope is not None and slope <= -slope_threshold and cauchy[-1][1] / cauchy[0][1] < plateau_ratio:
        verdict = GammaVerdict.RADONIFYING
        notes.append(
            f"Cauchy increments decay like n^{slope:.3f}, last/first = {cauchy[-1][1] / cauchy[0][1]:.3f}"
        )
    else:
        verdict = GammaVerdict.INCONCLUSIVE
        ratio = cauchy[-1][1] / cauchy[0][1]
        notes.append(f"increment slope {slope}, last/first = {ratio:.3f}, growth exponent {growth:.3f}")

    c0_frac = None
    if target.kind is NormKind.WSUP:
        final = sums[levels[-1]]
        c0_frac = float(np.mean([c0_tail_small(target, row, c0_threshold) for row in final]))

    hs = None
    if target.kind is NormKind.LP and target.p == 2:
        hs = float(np.sum((images[: min(levels[-1], rank)] ** 2) @ grid.weights))
    return EmbeddingReport(
        partial_sum_stats=stats,
        cauchy_stats=cauchy,
        hs_norm_sq=hs,
        gamma_lower_bound=float(np.sqrt(max(m for _, m, _ in stats))),
        verdict=verdict,
        evidence="; ".join(notes),
        slope=slope,
        growth_exponent=growth,
        seed=seed,
        thresholds={
            "slope_threshold": slope_threshold,
            "growth_threshold": growth_threshold,
            "plateau_ratio": plateau_ratio,
        },
        c0_tail_fraction=c0_frac,
    )


def log_diagonal_operator(size: int) -> FiniteRankOperator:
    """x_k = e_k / sqrt(log(k + 1)) in a weighted-sup sequence model with unit weights.

    Bounded Gaussian sums but no convergence in c0: the classical probe of
    gamma-summing versus gamma-radonifying.
    """
    if size < 2:
        raise ConfigError("size must be >= 2", key="operator.size")
    k = np.arange(1, size + 1)
    images = np.diag(1.0 / np.sqrt(np.log(k + 1.0)))
    grid = Grid(np.arange(size) / (size - 1))
    return FiniteRankOperator(images, grid, BanachNormSpec.wsup(np.ones(size)), "log-weighted diagonal into c0 model")
