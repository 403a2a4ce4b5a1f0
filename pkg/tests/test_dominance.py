import numpy as np
import pytest

from rkbs_lab.dominance import (
    NuclearVerdict,
    dominance_check,
    dominance_operator_trace,
    dominance_over_levels,
    driscoll_verdict,
)
from rkbs_lab.errors import ConfigError
from rkbs_lab.kernels import GramMatrix, Kernel, dyadic_grid, gram, uniform_grid
from rkbs_lab.norms import BanachNormSpec

K200 = np.arange(1, 201, dtype=float)
NUCLEAR_K = Kernel.spectrum(K200**-4)
NUCLEAR_R = Kernel.spectrum(K200**-2)


def test_dominance_check_examples():
    g = uniform_grid(3)
    eye = GramMatrix(np.eye(3), g)
    assert dominance_check(eye, eye, reg=0.0).c == pytest.approx(1.0)
    two = GramMatrix(np.diag([2.0, 1.0, 0.5]), g)
    assert dominance_check(two, eye, reg=0.0).c == pytest.approx(2.0)
    assert dominance_operator_trace(two, eye, reg=0.0) == pytest.approx(3.5)
    with pytest.raises(ConfigError):
        dominance_check(eye, GramMatrix(np.eye(2), uniform_grid(2)))


def test_scale_equivariance():
    grid = dyadic_grid(5, include_origin=False)
    G_K = gram(Kernel.rbf(0.4), grid)
    G_R = gram(Kernel.matern12(0.5), grid)
    base = dominance_check(G_K, G_R, reg=0.0).c
    assert dominance_check(3.0 * G_K.values, G_R.values, reg=0.0).c == pytest.approx(3.0 * base, rel=1e-9)
    assert dominance_check(G_K.values, 2.0 * G_R.values, reg=0.0).c == pytest.approx(base / 2.0, rel=1e-9)


def test_trace_linearity(rng):
    grid = dyadic_grid(5, include_origin=False)
    G_R = gram(Kernel.matern12(0.3), grid).values
    A = gram(Kernel.rbf(0.2), grid).values
    B = gram(Kernel.brownian(), grid).values
    a, b = rng.uniform(0.1, 3, size=2)
    lhs = dominance_operator_trace(a * A + b * B, G_R, reg=0.0)
    rhs = a * dominance_operator_trace(A, G_R, reg=0.0) + b * dominance_operator_trace(B, G_R, reg=0.0)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_nuclear_calibration():
    rep = dominance_over_levels(NUCLEAR_K, NUCLEAR_R, range(5, 11))
    target = float(np.sum(K200**-2))
    assert rep.trace_by_level[-1] == pytest.approx(target, rel=0.01)
    assert rep.nuclear_verdict is NuclearVerdict.NUCLEAR
    assert rep.dominated
    # the trace sequence is nondecreasing up to solver noise
    assert all(b >= a - 1e-3 for a, b in zip(rep.trace_by_level, rep.trace_by_level[1:]))


def test_identity_pair_is_not_nuclear():
    rep = dominance_over_levels(Kernel.brownian(), Kernel.brownian(), range(4, 9))
    for n, tr in zip(rep.sizes, rep.trace_by_level):
        assert tr == pytest.approx(n, rel=1e-6)
    assert rep.nuclear_verdict is NuclearVerdict.NOT_NUCLEAR
    assert rep.c_by_level[-1] == pytest.approx(1.0, rel=1e-6)


def test_rough_kernel_not_dominated_by_smooth():
    rep = dominance_over_levels(Kernel.brownian(), Kernel.rbf(0.2), range(4, 9))
    assert not rep.dominated
    assert rep.c_star == float("inf")
    assert rep.c_growth >= 0.5


def test_report_serializes():
    d = dominance_over_levels(Kernel.brownian(), Kernel.brownian(), [3, 4, 5]).to_dict()
    assert d["nuclear_verdict"] == "NotNuclear"
    assert len(d["trace_by_level"]) == 3


@pytest.mark.parametrize(
    "K, R, prob",
    [(NUCLEAR_K, NUCLEAR_R, 1), (Kernel.brownian(), Kernel.brownian(), 0)],
    ids=["nuclear", "identity"],
)
def test_hilbert_consistency(K, R, prob):
    # the Hilbert branch and the Banach branch with the rkhs norm of R agree
    hilbert = driscoll_verdict(K, R, range(5, 10))
    banach = driscoll_verdict(K, BanachNormSpec.rkhs(R), range(5, 9), {"series_levels": [8, 16, 32, 64, 128]})
    assert hilbert.branch == "hilbert" and banach.branch == "banach"
    assert hilbert.membership_probability == prob
    assert banach.membership_probability == prob


def test_verdict_monotone_in_target_strength():
    # a path that lies in a strong norm also lies in a weaker one
    levels = range(6, 11)
    strong = driscoll_verdict(Kernel.brownian(), BanachNormSpec.holder(0.25), levels, {"replicates": 40})
    weak = driscoll_verdict(Kernel.brownian(), BanachNormSpec.sup(), levels, {"replicates": 40})
    if strong.membership_probability == 1:
        assert weak.membership_probability == 1
    assert weak.membership_probability == 1


def test_driscoll_banach_needs_levels():
    with pytest.raises(ConfigError):
        driscoll_verdict(Kernel.brownian(), BanachNormSpec.sup(), [5, 6])
