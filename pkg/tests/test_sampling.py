import numpy as np
import pytest

from rkbs_lab.errors import ConfigError, NumericalError
from rkbs_lab.kernels import GramMatrix, Kernel, dyadic_grid, gram, uniform_grid
from rkbs_lab.norms import BanachNormSpec
from rkbs_lab.rkhs import spectral_basis
from rkbs_lab.sampling import (
    Method,
    MembershipVerdict,
    jittered_cholesky,
    membership_experiment,
    membership_verdict,
    parzen_experiment,
    rotation_invariance_check,
    sample_path,
    sample_paths,
)


def test_sample_path_is_deterministic():
    g = uniform_grid(33)
    a = sample_path(Kernel.brownian(), g, seed=4)
    b = sample_path(Kernel.brownian(), g, seed=4)
    assert np.array_equal(a.path.values, b.path.values)
    assert not np.array_equal(a.path.values, sample_path(Kernel.brownian(), g, seed=5).path.values)
    # row 0 of a batch is the same draw as the single path of that seed
    assert np.allclose(sample_paths(Kernel.brownian(), g, 3, seed=4)[0], a.path.values, rtol=0, atol=1e-13)


def test_brownian_path_starts_at_zero():
    p = sample_path(Kernel.brownian(), uniform_grid(65), seed=1)
    assert abs(p.path.values[0]) < 1e-5


def test_marginal_variance_matches_kernel():
    g = uniform_grid(9)
    k = Kernel.matern12(0.5)
    X = sample_paths(k, g, 10_000, seed=2)
    var = X.var(axis=0, ddof=1)
    se = np.sqrt(2.0 / (X.shape[0] - 1)) * k.diagonal(g.points)
    assert np.all(np.abs(var - k.diagonal(g.points)) <= 5 * se)


def test_brownian_increment_covariance():
    g = uniform_grid(5)
    X = sample_paths(Kernel.brownian(), g, 10_000, seed=3)
    inc = np.diff(X, axis=1)
    cov = np.cov(inc, rowvar=False)
    # independent increments of variance 1/4
    se = 0.25 * np.sqrt(2.0 / 10_000)
    assert np.all(np.abs(np.diag(cov) - 0.25) <= 5 * se)
    off = cov - np.diag(np.diag(cov))
    assert np.max(np.abs(off)) <= 5 * 0.25 / np.sqrt(10_000)


def test_kl_and_cholesky_agree_in_distribution():
    g = uniform_grid(65)
    k = Kernel.bridge()
    chol = sample_paths(k, g, 5000, seed=1)
    kl = sample_paths(k, g, 5000, seed=2, method=Method.KL)
    v1, v2 = chol.var(axis=0), kl.var(axis=0)
    mid = 32
    assert abs(v1[mid] - v2[mid]) <= 5 * 0.25 * np.sqrt(4.0 / 5000)
    # the exact covariance is reproduced by the full KL expansion
    G = gram(k, g)
    basis = spectral_basis(G)
    assert np.allclose(basis.onb() @ basis.onb().T, G.values, atol=1e-10)


def test_kl_truncation_rank():
    g = uniform_grid(65)
    p = sample_path(Kernel.brownian(), g, seed=0, method="kl", kl_rank=5)
    assert p.kl_rank == 5
    basis = spectral_basis(gram(Kernel.brownian(), g))
    assert np.allclose(p.path.values, basis.onb(5) @ np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(0, spawn_key=(0,)))).standard_normal(5))
    with pytest.raises(ConfigError):
        sample_path(Kernel.brownian(), g, method="kl", kl_rank=0)


def test_jittered_cholesky_failure_raises():
    g = uniform_grid(2)
    bad = GramMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]), g)
    with pytest.raises(NumericalError):
        jittered_cholesky(bad)
    L, jitter = jittered_cholesky(np.eye(3))
    assert jitter == pytest.approx(1e-12)
    assert np.allclose(L @ L.T, np.eye(3))


def test_jitter_escalates_on_semidefinite():
    # rank-one Gram needs more than the smallest jitter but succeeds within the escalations
    f = np.linspace(1, 2, 50)
    L, jitter = jittered_cholesky(np.outer(f, f))
    assert jitter > 0


def test_membership_verdict_thresholds():
    assert membership_verdict(0.95) is MembershipVerdict.PROBABILITY_ONE
    assert membership_verdict(0.05) is MembershipVerdict.PROBABILITY_ZERO
    assert membership_verdict(0.5) is MembershipVerdict.INCONCLUSIVE


def test_membership_smooth_norm_is_bounded():
    rep = membership_experiment(Kernel.brownian(), BanachNormSpec.sup(), [4, 6, 8], replicates=50, seed=1)
    assert rep.verdict is MembershipVerdict.PROBABILITY_ONE
    assert rep.sizes == [17, 65, 257]
    rows = list(rep.rows())
    assert len(rows) == 150 and rows[0][:2] == (0, 4)
    assert rep.to_dict()["bounded_fraction"] == rep.bounded_fraction


def test_membership_rkhs_norm_blows_up():
    k = Kernel.brownian()
    rep = membership_experiment(k, BanachNormSpec.rkhs(k), [4, 6, 8], replicates=50, seed=1)
    assert rep.verdict is MembershipVerdict.PROBABILITY_ZERO


def test_membership_validation():
    with pytest.raises(ConfigError):
        membership_experiment(Kernel.brownian(), BanachNormSpec.sup(), [4, 6], replicates=10)
    with pytest.raises(ConfigError):
        membership_experiment(Kernel.brownian(), BanachNormSpec.sup(), [4], replicates=50)


def test_parzen_slope_near_one():
    basis = spectral_basis(gram(Kernel.brownian(), uniform_grid(513)))
    res = parzen_experiment(basis, [16, 32, 64, 128], replicates=200)
    assert 0.9 <= res.slope <= 1.1
    with pytest.raises(ConfigError):
        parzen_experiment(spectral_basis(gram(Kernel.spectrum([1.0, 0.5]), uniform_grid(33))), [1, 4])


@pytest.mark.parametrize("phi", [0.0, np.pi / 4, np.pi / 2])
def test_rotation_invariance(phi):
    g = dyadic_grid(5)
    res = rotation_invariance_check(Kernel.brownian(), g, 20, phi, replicates=10_000, seed=0)
    assert res.max_moment_gap <= 4


def test_rotation_validation():
    with pytest.raises(ConfigError):
        rotation_invariance_check(Kernel.brownian(), uniform_grid(5), 9, 0.5)
