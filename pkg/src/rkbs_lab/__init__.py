"""Numerical laboratory for Gaussian sample paths in reproducing kernel Banach spaces."""

__version__ = "0.1.0"

from .dominance import dominance_check, dominance_operator_trace, dominance_over_levels, driscoll_verdict  # noqa: E402
from .gamma import (  # noqa: E402
    FiniteRankOperator,
    finite_rank_gamma_norm,
    gamma_series_diagnostic,
    gamma_summing_lower_bound,
    hs_norm_sq,
)
from .kernels import (  # noqa: E402
    Grid,
    GramMatrix,
    Kernel,
    check_positive_definite,
    dyadic_grid,
    epsilon_net,
    gram,
    is_determining,
    kernel_metric,
    uniform_grid,
)
from .norms import BanachNormSpec, norm_eval, restriction_norm  # noqa: E402
from .rkhs import GridFunction, RkhsElement, SpectralBasis, reproducing_residual, rkhs_inner, rkhs_norm_of_values, spectral_basis  # noqa: E402
from .sampling import membership_experiment, parzen_experiment, rotation_invariance_check, sample_path  # noqa: E402
