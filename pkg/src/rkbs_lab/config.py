"""Experiment configuration schema and the shipped presets."""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError
from .kernels import Kernel
from .norms import BanachNormSpec

COMMANDS = (
    "gram", "pd-check", "metric-net", "spectrum", "hs", "gamma", "dominance",
    "driscoll", "simulate", "membership", "parzen", "rotation",
)
Command = Literal[
    "gram", "pd-check", "metric-net", "spectrum", "hs", "gamma", "dominance",
    "driscoll", "simulate", "membership", "parzen", "rotation",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class KernelConfig(_Strict):
    family: Literal["brownian", "bridge", "rbf", "matern12", "spectrum", "empirical"]
    lengthscale: float | None = None
    lambdas: list[float] | None = None
    m: int | None = None
    path: str | None = None

    def build(self, prefix: str = "kernel") -> Kernel:
        try:
            return Kernel(self.family, lengthscale=self.lengthscale, lambdas=tuple(self.lambdas or ()),
                          m=self.m, source_path=self.path)
        except ConfigError as exc:
            raise ConfigError(str(exc), key=_rekey(exc.key, "kernel", prefix)) from exc


class NormConfig(_Strict):
    norm: Literal["sup", "lp", "holder", "sobolev", "wsup", "rkhs"]
    p: float = 2.0
    alpha: float = 0.5
    weights: list[float] | None = None
    kernel: KernelConfig | None = None

    def build(self, default_kernel: Kernel | None = None) -> BanachNormSpec:
        kernel = self.kernel.build("norm.kernel") if self.kernel is not None else default_kernel
        try:
            return BanachNormSpec(self.norm, p=self.p, alpha=self.alpha, weights=tuple(self.weights or ()),
                                  kernel=kernel)
        except ConfigError as exc:
            raise ConfigError(str(exc), key=exc.key or "norm") from exc


class GridConfig(_Strict):
    n: int | None = Field(default=None, ge=1, le=4097)
    levels: list[int] | None = None
    spacing: Literal["uniform"] = "uniform"


class MCConfig(_Strict):
    replicates: int = Field(default=200, ge=1)
    samples: int = Field(default=2000, ge=1)
    seed: int = Field(default=0, ge=0)
    rotations: int = Field(default=16, ge=1)


class Thresholds(_Strict):
    slope_threshold: float = 0.25
    growth_threshold: float = 0.8
    plateau_ratio: float = 0.5
    bound_factor: float = 2.0
    trace_cauchy_tol: float = 0.01
    tol_psd: float | None = None
    eps: float | None = None
    cutoff_rel: float = 1e-12
    c0_threshold: float = 1e-3


class ProbeConfig(_Strict):
    index: int | None = None
    phi: float = math.pi / 4


class OperatorConfig(_Strict):
    type: Literal["log-diagonal"] = "log-diagonal"
    size: int = Field(default=1024, ge=2)


class OutConfig(_Strict):
    path: str | None = None
    format: Literal["csv", "json"] = "json"


class ExperimentConfig(_Strict):
    command: Command
    kernel: KernelConfig | None = None
    kernel2: KernelConfig | None = None
    norm: NormConfig | None = None
    grid: GridConfig = Field(default_factory=GridConfig)
    series_levels: list[int] | None = None
    method: Literal["cholesky", "kl"] = "cholesky"
    kl_rank: int | None = None
    mc: MCConfig = Field(default_factory=MCConfig)
    thresholds: Thresholds = Field(default_factory=Thresholds)
    probe: ProbeConfig = Field(default_factory=ProbeConfig)
    operator: OperatorConfig | None = None
    out: OutConfig = Field(default_factory=OutConfig)

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def _rekey(key: str | None, old: str, new: str) -> str:
    if not key:
        return new
    return new + key[len(old):] if key.startswith(old) else key


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a raw config dict, turning schema errors into ConfigError naming the key."""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        key = ".".join(str(part) for part in err["loc"]) or "config"
        raise ConfigError(f"invalid config at {key}: {err['msg']}", key=key) from None


# ---------------------------------------------------------------- presets

_K200 = range(1, 201)

PRESETS: dict[str, dict] = {
    "parzen-brownian": {
        "command": "parzen",
        "kernel": {"family": "brownian"},
        "grid": {"n": 513},
        "series_levels": [16, 32, 64, 128],
        "mc": {"replicates": 200, "seed": 0},
    },
    "brownian-holder-025": {
        "command": "membership",
        "kernel": {"family": "brownian"},
        "norm": {"norm": "holder", "alpha": 0.25},
        "grid": {"levels": [6, 7, 8, 9, 10, 11, 12]},
        "mc": {"replicates": 100, "seed": 0},
        "thresholds": {"bound_factor": 2.0},
    },
    "brownian-holder-075": {
        "command": "membership",
        "kernel": {"family": "brownian"},
        "norm": {"norm": "holder", "alpha": 0.75},
        "grid": {"levels": [6, 7, 8, 9, 10, 11, 12]},
        "mc": {"replicates": 100, "seed": 0},
        "thresholds": {"bound_factor": 2.0},
    },
    "nuclear-k4-k2": {
        "command": "dominance",
        "kernel": {"family": "spectrum", "lambdas": [float(k) ** -4 for k in _K200]},
        "kernel2": {"family": "spectrum", "lambdas": [float(k) ** -2 for k in _K200]},
        "grid": {"levels": [5, 6, 7, 8, 9, 10]},
    },
    "identity-not-nuclear": {
        "command": "dominance",
        "kernel": {"family": "brownian"},
        "kernel2": {"family": "brownian"},
        "grid": {"levels": [4, 5, 6, 7, 8]},
    },
    "c0-logweight-probe": {
        "command": "gamma",
        "operator": {"type": "log-diagonal", "size": 1024},
        "series_levels": [4, 8, 16, 32, 64, 128, 256, 512, 1024],
        "mc": {"replicates": 40, "seed": 0},
    },
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}", key="preset")
    return parse_config(PRESETS[name])
