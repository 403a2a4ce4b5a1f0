"""Dominance and nuclear dominance between kernels, and the combined zero-one verdict.

On a grid, R dominates K with constant c when c G_R - G_K is PSD.  The
dominance operator L (L R(., t) = K(., t)) is realized as (G_R + reg I)^-1 G_K,
and nuclearity is judged from its trace over nested dyadic grids.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import ConfigError, NumericalError
from .gamma import GammaVerdict, gamma_series_diagnostic
from .kernels import Grid, GramMatrix, Kernel, dyadic_grid, gram
from .norms import BanachNormSpec
from .rkhs import auto_reg, spectral_basis


class NuclearVerdict(str, enum.Enum):
    NUCLEAR = "Nuclear"
    NOT_NUCLEAR = "NotNuclear"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DominanceCheck:
    dominated: bool
    c: float


def _values(G) -> np.ndarray:
    return G.values if isinstance(G, GramMatrix) else np.asarray(G, dtype=float)


def _same_grid(G_K, G_R):
    K, R = _values(G_K), _values(G_R)
    if K.shape != R.shape:
        raise ConfigError(f"Gram matrices of sizes {K.shape[0]} and {R.shape[0]} do not share a grid")
    return K, R


def dominance_check(G_K, G_R, reg: float | None = None) -> DominanceCheck:
    """Largest generalized eigenvalue c of the pencil (G_K, G_R + reg I).

    On a finite grid c is always finite; growth of c under refinement is what
    signals that H(K) is not contained in H(R).
    """
    K, R = _same_grid(G_K, G_R)
    reg = auto_reg(R) if reg is None else float(reg)
    n = K.shape[0]
    try:
        c = linalg.eigh(K, R + reg * np.eye(n), eigvals_only=True, subset_by_index=[n - 1, n - 1])[0]
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"pencil solver failed: {exc}") from exc
    c = float(c)
    return DominanceCheck(bool(np.isfinite(c)), c)


def dominance_operator_trace(G_K, G_R, reg: float | None = None) -> float:
    """trace((G_R + reg I)^-1 G_K), the grid realization of trace(L)."""
    K, R = _same_grid(G_K, G_R)
    reg = auto_reg(R) if reg is None else float(reg)
    n = K.shape[0]
    try:
        cho = linalg.cho_factor(R + reg * np.eye(n), lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"G_R + {reg:g} I is not positive definite") from exc
    return float(np.trace(linalg.cho_solve(cho, K)))


@dataclass
class DominanceReport:
    dominated: bool
    c_star: float
    c_by_level: list
    trace_by_level: list
    nuclear_verdict: NuclearVerdict
    levels: list
    sizes: list
    c_growth: float
    trace_growth: float
    evidence: str

    def to_dict(self) -> dict:
        return {
            "dominated": self.dominated,
            "c_star": self.c_star,
            "c_by_level": self.c_by_level,
            "trace_by_level": self.trace_by_level,
            "nuclear_verdict": self.nuclear_verdict.value,
            "levels": self.levels,
            "sizes": self.sizes,
            "c_growth": self.c_growth,
            "trace_growth": self.trace_growth,
            "evidence": self.evidence,
        }


def _growth(sizes, values) -> float:
    v = np.maximum(np.asarray(values, dtype=float), 1e-300)
    return float(np.polyfit(np.log(sizes), np.log(v), 1)[0])


def dominance_over_levels(
    kernel_K: Kernel,
    kernel_R: Kernel,
    grid_levels,
    reg: float | None = None,
    cauchy_tol: float = 0.01,
    growth_threshold: float = 0.5,
) -> DominanceReport:
    """Pencil constant and dominance-operator trace on nested dyadic grids.

    Grids are {j / 2^level : j = 1..2^level}; the origin is left out because
    the catalog kernels that vanish there (Brownian, bridge, sine spectra)
    contribute a zero kernel section.
    Trace verdict: the last two increments each < cauchy_tol of the current
    value -> Nuclear; log-log growth exponent >= growth_threshold -> NotNuclear;
    otherwise Inconclusive.
    """
    levels = sorted(int(level) for level in grid_levels)
    if len(levels) < 3:
        raise ConfigError("need at least 3 grid levels", key="grid.levels")
    cs, traces, sizes = [], [], []
    for level in levels:
        grid = dyadic_grid(level, include_origin=False)
        GK, GR = gram(kernel_K, grid), gram(kernel_R, grid)
        cs.append(dominance_check(GK, GR, reg).c)
        traces.append(dominance_operator_trace(GK, GR, reg))
        sizes.append(grid.n)
    c_growth = _growth(sizes, cs)
    trace_growth = _growth(sizes, traces)
    inc = np.abs(np.diff(traces[-3:]))
    notes = []
    if np.all(inc < cauchy_tol * abs(traces[-1])):
        verdict = NuclearVerdict.NUCLEAR
        notes.append(f"trace sequence settled at {traces[-1]:.6g} (last increments {inc.tolist()})")
    elif trace_growth >= growth_threshold:
        verdict = NuclearVerdict.NOT_NUCLEAR
        notes.append(f"trace grows like n^{trace_growth:.3f}")
    else:
        verdict = NuclearVerdict.INCONCLUSIVE
        notes.append(f"trace neither settled nor grew fast (exponent {trace_growth:.3f})")
    dominated = c_growth < growth_threshold
    notes.append(f"pencil constant grows like n^{c_growth:.3f}")
    return DominanceReport(
        dominated=dominated,
        c_star=cs[-1] if dominated else float("inf"),
        c_by_level=cs,
        trace_by_level=traces,
        nuclear_verdict=verdict,
        levels=levels,
        sizes=sizes,
        c_growth=c_growth,
        trace_growth=trace_growth,
        evidence="; ".join(notes),
    )


@dataclass
class DriscollVerdict:
    branch: str
    membership_probability: int | None
    evidence: str
    seed: int
    dominance: DominanceReport | None = None
    gamma: object | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"branch": self.branch}
        if self.dominance is not None:
            rep = self.dominance
            d.update(
                dominated=rep.dominated,
                c_by_level=rep.c_by_level,
                trace_by_level=rep.trace_by_level,
                nuclear_verdict=rep.nuclear_verdict.value,
                sizes=rep.sizes,
            )
        if self.gamma is not None:
            d["gamma_verdict"] = self.gamma.verdict.value
            d["gamma"] = self.gamma.to_dict()
        d.update(membership_probability=self.membership_probability, evidence=self.evidence, seed=self.seed)
        return d


def driscoll_verdict(
    kernel_K: Kernel,
    target: BanachNormSpec | Kernel,
    grid_levels,
    gamma_cfg: dict | None = None,
    seed: int = 0,
) -> DriscollVerdict:
    """Probability-one / probability-zero verdict for sample paths of a GP with covariance K.

    Hilbert target (a kernel R): nuclear dominance of K by R from the trace
    and pencil sequences.  Banach target: convergence of the Karhunen-Loeve
    series in the target norm, on the finest dyadic grid.  Conflicting
    evidence gives ``membership_probability = None``.
    """
    gamma_cfg = dict(gamma_cfg or {})
    if isinstance(target, Kernel):
        rep = dominance_over_levels(kernel_K, target, grid_levels, reg=gamma_cfg.get("reg"))
        if rep.nuclear_verdict is NuclearVerdict.NUCLEAR and rep.dominated:
            prob, note = 1, "nuclear dominance: sample paths lie in H(R) with probability one"
        elif rep.nuclear_verdict is NuclearVerdict.NOT_NUCLEAR:
            prob, note = 0, "dominance operator is not nuclear: probability zero"
        elif rep.nuclear_verdict is NuclearVerdict.NUCLEAR:
            prob, note = None, "conflicting evidence: trace settles but the pencil constant grows"
        else:
            prob, note = None, "inconclusive trace sequence"
        return DriscollVerdict("hilbert", prob, f"{note}; {rep.evidence}", seed, dominance=rep)

    levels = sorted(int(level) for level in grid_levels)
    if len(levels) < 3:
        raise ConfigError("need at least 3 grid levels", key="grid.levels")
    grid: Grid = dyadic_grid(levels[-1])
    basis = spectral_basis(gram(kernel_K, grid))
    series = gamma_cfg.get("series_levels") or _default_series_levels(basis.rank)
    rep = gamma_series_diagnostic(
        basis,
        target,
        series,
        replicates=gamma_cfg.get("replicates", 40),
        seed=seed,
        slope_threshold=gamma_cfg.get("slope_threshold", 0.25),
        growth_threshold=gamma_cfg.get("growth_threshold", 0.8),
        plateau_ratio=gamma_cfg.get("plateau_ratio", 0.5),
    )
    prob = {GammaVerdict.RADONIFYING: 1, GammaVerdict.NOT_RADONIFYING: 0}.get(rep.verdict)
    return DriscollVerdict("banach", prob, rep.evidence, seed, gamma=rep)


def _default_series_levels(rank: int) -> list:
    levels = [8]
    while levels[-1] * 2 <= max(rank // 2, 8):
        levels.append(levels[-1] * 2)
    while len(levels) < 3:
        levels.append(levels[-1] * 2)
    return levels
