"""Command-line entry point: ``rkbs-lab <command> --config <path>``.

Exit codes: 0 success, 2 invalid config, 3 numerical failure,
4 inconclusive verdict under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, ExperimentConfig, parse_config, preset
from .dominance import NuclearVerdict, dominance_over_levels, driscoll_verdict
from .errors import ConfigError, NumericalError
from .gamma import GammaVerdict, gamma_series_diagnostic, hs_norm_sq, log_diagonal_operator
from .kernels import (
    Family, Grid, check_positive_definite, covering_radius, dyadic_grid, epsilon_net, gram,
    load_gram_csv, uniform_grid,
)
from .rkhs import reproducing_residual, spectral_basis
from .sampling import MembershipVerdict, membership_experiment, parzen_experiment, rotation_invariance_check, sample_path

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INCONCLUSIVE = 0, 2, 3, 4


@dataclass
class ResultRecord:
    config_echo: dict
    outputs: dict
    timing_ms: float
    tool_version: str
    seed: int
    headline: str
    inconclusive: bool = False
    table: list | None = None  # rows for CSV output, header first

    def primary(self) -> dict:
        # timing is reported on stdout only, so reruns give byte-identical files
        return {
            "tool_version": self.tool_version,
            "command": self.config_echo["command"],
            "seed": self.seed,
            "config_echo": self.config_echo,
            "outputs": self.outputs,
        }


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def write_atomic(path, text: str) -> None:
    """Write through a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- helpers


def _kernel(cfg: ExperimentConfig, which: str = "kernel"):
    kc = getattr(cfg, which)
    if kc is None:
        raise ConfigError(f"command {cfg.command!r} needs a {which} spec", key=which)
    return kc.build(which)


def _grid(cfg: ExperimentConfig, kernel=None, default_n: int = 257) -> Grid:
    if cfg.grid.n is not None:
        return uniform_grid(cfg.grid.n)
    if cfg.grid.levels:
        return dyadic_grid(max(cfg.grid.levels))
    if kernel is not None and kernel.family is Family.EMPIRICAL:
        return uniform_grid(load_gram_csv(kernel.source_path).shape[0])
    return uniform_grid(default_n)


def _levels(cfg: ExperimentConfig, default) -> list:
    levels = cfg.grid.levels or default
    if any(level < 0 or level > 12 for level in levels):
        raise ConfigError("grid levels must lie in [0, 12]", key="grid.levels")
    return list(levels)


def _norm(cfg: ExperimentConfig, kernel=None):
    if cfg.norm is None:
        raise ConfigError(f"command {cfg.command!r} needs a norm spec", key="norm")
    return cfg.norm.build(kernel)


def _kv_table(d: dict) -> list:
    rows = [("key", "value")]
    rows += [(k, v) for k, v in d.items() if isinstance(v, (int, float, str, bool)) or v is None]
    return rows


# ---------------------------------------------------------------- commands


def _cmd_gram(cfg):
    kernel = _kernel(cfg)
    grid = _grid(cfg, kernel)
    G = gram(kernel, grid)
    out = {"n": grid.n, "points": grid.points.tolist(), "matrix": G.values.tolist()}
    return out, f"n={grid.n}", False, [list(map(float, row)) for row in G.values]


def _cmd_pd_check(cfg):
    kernel = _kernel(cfg)
    grid = _grid(cfg, kernel)
    res = check_positive_definite(gram(kernel, grid), cfg.thresholds.tol_psd)
    out = {"n": grid.n, "is_psd": res.is_psd, "min_eig": res.min_eig, "tol_psd": res.tol_psd}
    return out, f"is_psd={res.is_psd} min_eig={res.min_eig:.6g}", False, _kv_table(out)


def _cmd_metric_net(cfg):
    kernel = _kernel(cfg)
    if cfg.thresholds.eps is None:
        raise ConfigError("metric-net needs thresholds.eps", key="thresholds.eps")
    grid = _grid(cfg, kernel)
    idx = epsilon_net(kernel, grid, cfg.thresholds.eps)
    out = {
        "eps": cfg.thresholds.eps,
        "indices": idx.tolist(),
        "points": grid.points[idx].tolist(),
        "covering_radius": covering_radius(kernel, grid, idx),
    }
    table = [("index", "point")] + [(int(i), float(grid.points[i])) for i in idx]
    return out, f"{idx.size} centers, covering radius {out['covering_radius']:.6g}", False, table


def _cmd_spectrum(cfg):
    kernel = _kernel(cfg)
    grid = _grid(cfg, kernel)
    G = gram(kernel, grid)
    basis = spectral_basis(G, cfg.thresholds.cutoff_rel)
    trace = float(np.diag(G.values) @ grid.weights)
    out = {
        "n": grid.n,
        "rank": basis.rank,
        "eigenvalues": basis.eigenvalues.tolist(),
        "trace_weighted_diagonal": trace,
        "eigenvalue_sum": float(basis.all_eigenvalues.sum()),
        "reproducing_residual": reproducing_residual(G, basis),
    }
    table = [[float(basis.eigenvalues[k])] + basis.eigenvectors[:, k].tolist() for k in range(basis.rank)]
    return out, f"rank={basis.rank} lambda_1={basis.eigenvalues[0]:.6g}", False, table


def _cmd_hs(cfg):
    kernel = _kernel(cfg)
    grid = _grid(cfg, kernel)
    value = hs_norm_sq(kernel, grid)
    out = {"n": grid.n, "hs_norm_sq": value}
    return out, f"hs_norm_sq={value:.10g}", False, _kv_table(out)


def _gamma_kwargs(cfg):
    th = cfg.thresholds
    return dict(slope_threshold=th.slope_threshold, growth_threshold=th.growth_threshold,
                plateau_ratio=th.plateau_ratio)


def _cmd_gamma(cfg):
    if cfg.operator is not None:
        if cfg.norm is not None:
            raise ConfigError("an operator preset brings its own target; drop the norm spec", key="norm")
        op = log_diagonal_operator(cfg.operator.size)
        source, target = op, op.target
        default_levels = [4 * 2**j for j in range(20) if 4 * 2**j <= op.rank]
    else:
        kernel = _kernel(cfg)
        grid = _grid(cfg, kernel, default_n=1025)
        source = spectral_basis(gram(kernel, grid), cfg.thresholds.cutoff_rel)
        target = _norm(cfg, kernel)
        default_levels = [8 * 2**j for j in range(20) if 8 * 2**j <= source.rank // 2]
    levels = cfg.series_levels or default_levels
    rep = gamma_series_diagnostic(source, target, levels, replicates=cfg.mc.replicates, seed=cfg.mc.seed,
                                  c0_threshold=cfg.thresholds.c0_threshold, **_gamma_kwargs(cfg))
    out = rep.to_dict()
    table = [("n", "mean_sq", "stderr", "cauchy")] + [
        (row["n"], row["mean_sq"], row["stderr"], "" if row["cauchy"] is None else row["cauchy"])
        for row in out["levels"]
    ]
    return out, f"verdict={rep.verdict.value}", rep.verdict is GammaVerdict.INCONCLUSIVE, table


def _cmd_dominance(cfg):
    K, R = _kernel(cfg), _kernel(cfg, "kernel2")
    rep = dominance_over_levels(K, R, _levels(cfg, [4, 5, 6, 7, 8]), cauchy_tol=cfg.thresholds.trace_cauchy_tol)
    out = rep.to_dict()
    table = [("level", "n", "c", "trace")] + [
        (lv, n, c, t) for lv, n, c, t in zip(rep.levels, rep.sizes, rep.c_by_level, rep.trace_by_level)
    ]
    headline = f"nuclear_verdict={rep.nuclear_verdict.value} trace={rep.trace_by_level[-1]:.8g}"
    return out, headline, rep.nuclear_verdict is NuclearVerdict.INCONCLUSIVE, table


def _cmd_driscoll(cfg):
    K = _kernel(cfg)
    if cfg.kernel2 is not None:
        target = _kernel(cfg, "kernel2")
    else:
        target = _norm(cfg, K)
    gamma_cfg = dict(_gamma_kwargs(cfg), replicates=cfg.mc.replicates, series_levels=cfg.series_levels)
    verdict = driscoll_verdict(K, target, _levels(cfg, [6, 8, 10]), gamma_cfg, seed=cfg.mc.seed)
    out = verdict.to_dict()
    return out, f"membership_probability={verdict.membership_probability}", \
        verdict.membership_probability is None, _kv_table(out)


def _cmd_simulate(cfg):
    kernel = _kernel(cfg)
    grid = _grid(cfg, kernel)
    sample = sample_path(kernel, grid, cfg.mc.seed, cfg.method, cfg.kl_rank)
    out = {
        "method": sample.method.value,
        "kl_rank": sample.kl_rank,
        "points": grid.points.tolist(),
        "values": sample.path.values.tolist(),
    }
    table = [("t", "value")] + list(zip(grid.points.tolist(), sample.path.values.tolist()))
    return out, f"{grid.n}-point path ({sample.method.value})", False, table


def _cmd_membership(cfg):
    kernel = _kernel(cfg)
    target = _norm(cfg, kernel)
    rep = membership_experiment(kernel, target, _levels(cfg, [6, 7, 8, 9, 10]), cfg.mc.replicates,
                                cfg.thresholds.bound_factor, cfg.mc.seed)
    out = rep.to_dict()
    out.pop("config_echo")
    table = [("replicate", "level", "norm", "bounded_flag")] + list(rep.rows())
    headline = f"verdict={rep.verdict.value} bounded_fraction={rep.bounded_fraction:.3f}"
    return out, headline, rep.verdict is MembershipVerdict.INCONCLUSIVE, table


def _cmd_parzen(cfg):
    kernel = _kernel(cfg)
    grid = _grid(cfg, kernel, default_n=513)
    basis = spectral_basis(gram(kernel, grid), cfg.thresholds.cutoff_rel)
    res = parzen_experiment(basis, cfg.series_levels or [16, 32, 64, 128], cfg.mc.replicates, cfg.mc.seed)
    out = {"slope": res.slope, "intercept": res.intercept, "levels": res.levels, "means": res.means}
    table = [("n", "mean_sq_norm")] + list(zip(res.levels, res.means))
    return out, f"slope={res.slope:.4f}", False, table


def _cmd_rotation(cfg):
    kernel = _kernel(cfg)
    grid = _grid(cfg, kernel, default_n=65)
    probe = grid.n // 2 if cfg.probe.index is None else cfg.probe.index
    res = rotation_invariance_check(kernel, grid, probe, cfg.probe.phi, cfg.mc.replicates, cfg.mc.seed)
    out = {"max_moment_gap": res.max_moment_gap, "mean_gap": res.mean_gap, "var_gap": res.var_gap,
           "phi": res.phi, "t_probe": res.t_probe, "t": float(grid.points[probe])}
    return out, f"max_moment_gap={res.max_moment_gap:.4f}", False, _kv_table(out)


DISPATCH = {
    "gram": _cmd_gram,
    "pd-check": _cmd_pd_check,
    "metric-net": _cmd_metric_net,
    "spectrum": _cmd_spectrum,
    "hs": _cmd_hs,
    "gamma": _cmd_gamma,
    "dominance": _cmd_dominance,
    "driscoll": _cmd_driscoll,
    "simulate": _cmd_simulate,
    "membership": _cmd_membership,
    "parzen": _cmd_parzen,
    "rotation": _cmd_rotation,
}


def run(config: ExperimentConfig | dict, write: bool = True) -> ResultRecord:
    """Execute one experiment and (optionally) persist its primary output file."""
    cfg = config if isinstance(config, ExperimentConfig) else parse_config(config)
    start = time.perf_counter()
    outputs, headline, inconclusive, table = DISPATCH[cfg.command](cfg)
    elapsed = (time.perf_counter() - start) * 1000.0
    record = ResultRecord(cfg.echo(), outputs, elapsed, __version__, cfg.mc.seed, headline, inconclusive, table)
    if write:
        write_atomic(output_path(cfg), render(record, cfg.out.format))
    return record


def output_path(cfg: ExperimentConfig) -> Path:
    if cfg.out.path:
        return Path(cfg.out.path)
    return Path(f"rkbs-{cfg.command}.{cfg.out.format}")


def render(record: ResultRecord, fmt: str) -> str:
    if fmt == "json":
        return dumps(record.primary())
    return _csv_text(record.table or _kv_table(record.outputs))


# ---------------------------------------------------------------- argv


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rkbs-lab", description="Gaussian sample paths in reproducing kernel Banach spaces")
    p.add_argument("--version", action="version", version=f"rkbs-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="JSON experiment config")
        src.add_argument("--preset", help="run a shipped preset")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=["csv", "json"])
        sp.add_argument("--strict", action="store_true", help="exit 4 on an inconclusive verdict")
    pp = sub.add_parser("preset")
    pp.add_argument("name")
    pp.add_argument("--emit-config", help="write the preset config here instead of stdout")
    return p


def _load(args) -> ExperimentConfig:
    if args.preset:
        data = preset(args.preset).echo()
    else:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}", key="config") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}", key="config") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object", key="config")
    data.setdefault("command", args.command)
    if data["command"] != args.command:
        raise ConfigError(f"config is for {data['command']!r}, not {args.command!r}", key="command")
    data = dict(data)
    if args.seed is not None:
        data["mc"] = dict(data.get("mc") or {}, seed=args.seed)
    if args.out is not None or args.format is not None:
        out = dict(data.get("out") or {})
        if args.out is not None:
            out["path"] = args.out
        if args.format is not None:
            out["format"] = args.format
        data["out"] = out
    return parse_config(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "preset":
            text = dumps(preset(args.name).echo())
            if args.emit_config:
                write_atomic(args.emit_config, text)
                print(f"preset {args.name} -> {args.emit_config}")
            else:
                sys.stdout.write(text)
            return EXIT_OK
        cfg = _load(args)
        record = run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}" + (f" [{exc.key}]" if exc.key and exc.key not in str(exc) else ""), file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{cfg.command}: {record.headline} -> {output_path(cfg)} ({record.timing_ms:.0f} ms)")
    if args.strict and record.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
