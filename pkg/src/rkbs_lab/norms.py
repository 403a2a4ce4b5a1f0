"""Discretized Banach spaces of functions on a grid.

Each :class:`BanachNormSpec` is a norm on R^n in which every point
evaluation is continuous.  ``restriction_norm`` computes the quotient norm
inf{ ||x|| : x restricted to S equals y } by convex minimization.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse

from .errors import ConfigError, ConvergenceError
from .kernels import Grid, Kernel, gram
from .rkhs import GridFunction, InterpolationNorm


class NormKind(str, enum.Enum):
    SUP = "sup"
    LP = "lp"
    HOLDER = "holder"
    SOBOLEV = "sobolev"
    WSUP = "wsup"
    RKHS = "rkhs"


@dataclass(frozen=True)
class BanachNormSpec:
    kind: NormKind
    p: float = 2.0
    alpha: float = 0.5
    weights: tuple[float, ...] = ()
    kernel: Kernel | None = None  # only for RKHS: the norm of H(kernel)
    reg: float | str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.kind in (NormKind.LP, NormKind.SOBOLEV) and not self.p >= 1:
            raise ConfigError(f"p must be >= 1, got {self.p}", key="norm.p")
        if self.kind in (NormKind.HOLDER, NormKind.SOBOLEV) and not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}", key="norm.alpha")
        if self.kind is NormKind.WSUP and (not self.weights or min(self.weights) <= 0):
            raise ConfigError("weighted-sup norm needs strictly positive weights", key="norm.weights")
        if self.kind is NormKind.RKHS and self.kernel is None:
            raise ConfigError("rkhs norm needs a kernel", key="norm.kernel")

    @classmethod
    def sup(cls):
        return cls(NormKind.SUP)

    @classmethod
    def lp(cls, p: float):
        return cls(NormKind.LP, p=p)

    @classmethod
    def holder(cls, alpha: float):
        return cls(NormKind.HOLDER, alpha=alpha)

    @classmethod
    def sobolev(cls, alpha: float, p: float):
        return cls(NormKind.SOBOLEV, p=p, alpha=alpha)

    @classmethod
    def wsup(cls, weights):
        return cls(NormKind.WSUP, weights=tuple(weights))

    @classmethod
    def rkhs(cls, kernel: Kernel, reg: float | str = "auto"):
        return cls(NormKind.RKHS, kernel=kernel, reg=reg)

    @property
    def separable(self) -> bool:
        """Norms where zero-filling free coordinates is optimal."""
        return self.kind in (NormKind.SUP, NormKind.LP, NormKind.WSUP)

    def to_dict(self) -> dict:
        d: dict = {"norm": self.kind.value}
        if self.kind in (NormKind.LP, NormKind.SOBOLEV):
            d["p"] = self.p
        if self.kind in (NormKind.HOLDER, NormKind.SOBOLEV):
            d["alpha"] = self.alpha
        if self.kind is NormKind.WSUP:
            d["weights"] = list(self.weights)
        if self.kind is NormKind.RKHS:
            d["kernel"] = self.kernel.to_dict()
        return d


def _holder_seminorm(x: np.ndarray, t: np.ndarray, alpha: float) -> np.ndarray:
    # x has shape (R, n); exact pairwise max, one row of pairs at a time
    best = np.zeros(x.shape[0])
    for i in range(t.size - 1):
        q = np.abs(x[:, i + 1 :] - x[:, i : i + 1]) / (t[i + 1 :] - t[i]) ** alpha
        np.maximum(best, q.max(axis=1), out=best)
    return best


def _slobodeckij_pth(x: np.ndarray, t: np.ndarray, w: np.ndarray, alpha: float, p: float) -> np.ndarray:
    # sum over i != j of w_i w_j |x_i - x_j|^p / |t_i - t_j|^(1 + alpha p); computed over i < j and doubled
    total = np.zeros(x.shape[0])
    expo = 1.0 + alpha * p
    for i in range(t.size - 1):
        c = w[i] * w[i + 1 :] / (t[i + 1 :] - t[i]) ** expo
        total += np.abs(x[:, i + 1 :] - x[:, i : i + 1]) ** p @ c
    return 2.0 * total


class NormEvaluator:
    """A norm bound to one grid, applied to single vectors or to rows of a matrix."""

    def __init__(self, spec: BanachNormSpec, grid: Grid):
        self.spec = spec
        self.grid = grid
        if spec.kind is NormKind.WSUP and len(spec.weights) != grid.n:
            raise ConfigError(
                f"weighted-sup norm has {len(spec.weights)} weights for {grid.n} coordinates", key="norm.weights"
            )
        if spec.kind in (NormKind.HOLDER, NormKind.SOBOLEV) and grid.n < 2:
            raise ConfigError("Holder and Sobolev norms need at least 2 grid points", key="grid.n")
        self._rkhs = None
        if spec.kind is NormKind.RKHS:
            self._rkhs = InterpolationNorm(gram(spec.kernel, grid).values, spec.reg)

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if X.shape[1] != self.grid.n:
            raise ConfigError(f"vector of length {X.shape[1]} on a grid of {self.grid.n} points")
        out = self._batch(X)
        return float(out[0]) if single else out

    def _batch(self, X: np.ndarray) -> np.ndarray:
        spec, t, w = self.spec, self.grid.points, self.grid.weights
        kind = spec.kind
        if kind is NormKind.SUP:
            return np.max(np.abs(X), axis=1)
        if kind is NormKind.LP:
            return (np.abs(X) ** spec.p @ w) ** (1.0 / spec.p)
        if kind is NormKind.HOLDER:
            return np.max(np.abs(X), axis=1) + _holder_seminorm(X, t, spec.alpha)
        if kind is NormKind.SOBOLEV:
            pth = np.abs(X) ** spec.p @ w + _slobodeckij_pth(X, t, w, spec.alpha, spec.p)
            return pth ** (1.0 / spec.p)
        if kind is NormKind.WSUP:
            return np.max(np.abs(X) * np.asarray(spec.weights), axis=1)
        return self._rkhs(X)


def norm_eval(spec: BanachNormSpec, x: GridFunction) -> float:
    return NormEvaluator(spec, x.grid)(x.values)


def c0_tail_small(spec: BanachNormSpec, x, threshold: float = 1e-3) -> bool:
    """Null-sequence proxy: weights_k |x_k| <= threshold over the last quartile of indices."""
    v = np.abs(np.asarray(x.values if isinstance(x, GridFunction) else x, dtype=float))
    wts = np.asarray(spec.weights) if spec.kind is NormKind.WSUP else np.ones_like(v)
    start = (3 * v.size) // 4
    return bool(np.max(wts[start:] * v[start:]) <= threshold)


# ---------------------------------------------------------------- quotient norm


def restriction_norm(spec: BanachNormSpec, full_grid: Grid, S, y) -> float:
    """inf of the norm over all extensions of y (given on grid indices S) to the full grid."""
    S = np.asarray(S, dtype=int)
    y = np.asarray(y, dtype=float)
    if S.size == 0:
        raise ConfigError("S must be nonempty")
    if y.shape != S.shape:
        raise ConfigError(f"{y.size} values given for {S.size} indices")
    if np.unique(S).size != S.size or S.min() < 0 or S.max() >= full_grid.n:
        raise ConfigError("S must hold distinct indices of the grid")
    evaluator = NormEvaluator(spec, full_grid)
    n = full_grid.n
    free = np.setdiff1d(np.arange(n), S)
    x = np.zeros(n)
    x[S] = y
    if free.size == 0 or spec.separable:
        return evaluator(x)
    if spec.kind is NormKind.RKHS:
        G = gram(spec.kernel, full_grid).values
        return float(InterpolationNorm(G[np.ix_(S, S)], spec.reg)(y))
    if spec.kind is NormKind.HOLDER:
        return _holder_lp(full_grid, S, y, free, spec.alpha, evaluator)
    if spec.p == 1.0:
        return _sobolev1_lp(full_grid, S, y, free, spec.alpha, evaluator)
    return _coordinate_descent(evaluator, x, free, y)


def _linprog(c, A, b, bounds):
    res = optimize.linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise ConvergenceError(f"linear program did not converge: {res.message}")
    return res


def _pair_rows(n: int, free_pos: dict, pairs, rhs_coef, extra_col: int, nvar: int, y_full, is_fixed):
    # Rows of +/-(x_i - x_j) - coef * extra <= -/+ const for pairs with a free end.
    rows, cols, vals, b = [], [], [], []
    r = 0
    for (i, j), coef in zip(pairs, rhs_coef):
        for sgn in (1.0, -1.0):
            const = 0.0
            for idx, s in ((i, sgn), (j, -sgn)):
                if is_fixed[idx]:
                    const -= s * y_full[idx]
                else:
                    rows.append(r)
                    cols.append(free_pos[idx])
                    vals.append(s)
            rows.append(r)
            cols.append(extra_col(i, j))
            vals.append(-coef)
            b.append(const)
            r += 1
    return sparse.csr_matrix((vals, (rows, cols)), shape=(r, nvar)), np.array(b)


def _holder_lp(grid: Grid, S, y, free, alpha, evaluator) -> float:
    # min a + b  s.t. |x_i| <= a,  |x_i - x_j| <= b d_ij^alpha,  x_S = y
    n, t = grid.n, grid.points
    is_fixed = np.zeros(n, dtype=bool)
    is_fixed[S] = True
    y_full = np.zeros(n)
    y_full[S] = y
    nf = free.size
    pos = {int(k): m for m, k in enumerate(free)}
    a_col, b_col = nf, nf + 1
    nvar = nf + 2
    # |x_free| <= a
    rows = np.arange(2 * nf)
    A1 = sparse.csr_matrix(
        (np.concatenate([np.ones(nf), -np.ones(nf), -np.ones(2 * nf)]),
         (np.concatenate([rows, rows]), np.concatenate([np.arange(nf), np.arange(nf), np.full(2 * nf, a_col)]))),
        shape=(2 * nf, nvar),
    )
    b1 = np.zeros(2 * nf)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if not (is_fixed[i] and is_fixed[j])]
    coef = [(t[j] - t[i]) ** alpha for i, j in pairs]
    A2, b2 = _pair_rows(n, pos, pairs, coef, lambda i, j: b_col, nvar, y_full, is_fixed)
    fixed_vals = y_full[S]
    fixed_sup = float(np.max(np.abs(fixed_vals)))
    ts = t[S]
    ii, jj = np.triu_indices(S.size, 1)
    fixed_semi = float(np.max(np.abs(fixed_vals[ii] - fixed_vals[jj]) / np.abs(ts[ii] - ts[jj]) ** alpha)) if ii.size else 0.0
    c = np.zeros(nvar)
    c[a_col] = c[b_col] = 1.0
    bounds = [(None, None)] * nf + [(fixed_sup, None), (fixed_semi, None)]
    res = _linprog(c, sparse.vstack([A1, A2]), np.concatenate([b1, b2]), bounds)
    x = y_full.copy()
    x[free] = res.x[:nf]
    # report the norm of the optimizer itself
    return evaluator(x)


def _sobolev1_lp(grid: Grid, S, y, free, alpha, evaluator) -> float:
    # p = 1: min sum w_i u_i + 2 sum_{i<j} c_ij v_ij  with u_i >= |x_i|, v_ij >= |x_i - x_j|
    n, t, w = grid.n, grid.points, grid.weights
    is_fixed = np.zeros(n, dtype=bool)
    is_fixed[S] = True
    y_full = np.zeros(n)
    y_full[S] = y
    nf = free.size
    pos = {int(k): m for m, k in enumerate(free)}
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if not (is_fixed[i] and is_fixed[j])]
    npairs = len(pairs)
    pair_col = {p: nf + nf + m for m, p in enumerate(pairs)}
    nvar = 2 * nf + npairs
    rows = np.arange(2 * nf)
    A1 = sparse.csr_matrix(
        (np.concatenate([np.ones(nf), -np.ones(nf), -np.ones(2 * nf)]),
         (np.concatenate([rows, rows]), np.concatenate([np.arange(nf), np.arange(nf), nf + np.concatenate([np.arange(nf)] * 2)]))),
        shape=(2 * nf, nvar),
    )
    A2, b2 = _pair_rows(n, pos, pairs, [1.0] * npairs, lambda i, j: pair_col[(i, j)], nvar, y_full, is_fixed)
    c = np.zeros(nvar)
    c[nf : 2 * nf] = w[free]
    for (i, j), col in pair_col.items():
        c[col] = 2.0 * w[i] * w[j] / (t[j] - t[i]) ** (1.0 + alpha)
    bounds = [(None, None)] * nf + [(0, None)] * (nf + npairs)
    res = _linprog(c, sparse.vstack([A1, A2]), np.concatenate([np.zeros(2 * nf), b2]), bounds)
    x = y_full.copy()
    x[free] = res.x[:nf]
    return evaluator(x)


def _coordinate_descent(evaluator, x0, free, y, max_sweeps: int = 5000) -> float:
    """Coordinate descent with bounded golden-section (Brent) line searches.

    Clamping every coordinate into [min(0, min y), max(0, max y)] never
    raises these norms, so that interval brackets each line search.
    """
    lo = min(0.0, float(np.min(y)))
    hi = max(0.0, float(np.max(y)))
    x = x0.copy()
    if hi == lo:
        return evaluator(x)
    p = evaluator.spec.p

    def objective(v):
        return evaluator(v) ** p

    # warm start on the smooth p-th power objective
    def f_free(z):
        x[free] = z
        return objective(x)

    warm = optimize.minimize(f_free, np.zeros(free.size), method="L-BFGS-B",
                             bounds=[(lo, hi)] * free.size, options={"maxiter": 500})
    x[free] = np.clip(warm.x, lo, hi)
    current = objective(x)
    for _ in range(max_sweeps):
        start = current
        for k in free:
            old = x[k]

            def along(v, k=k):
                x[k] = v
                return objective(x)

            res = optimize.minimize_scalar(along, bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-12 * (hi - lo)})
            if res.fun <= current:
                x[k] = res.x
                current = res.fun
            else:
                x[k] = old
        if start - current <= 1e-10 * current:
            return current ** (1.0 / p)
    raise ConvergenceError("coordinate descent did not converge")
