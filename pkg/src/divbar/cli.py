"""Command-line front end: JSON config in, CSV artifacts out.

Subcommands
-----------
boundary        solve the integral equation, write ``boundary_ie.csv``
pde             solve the obstacle problem, write ``U.csv``/``V.csv``/``boundary_pde.csv``
simulate        Monte Carlo estimates at the configured checkpoints
verify          full cross-validation report, exit 0 iff every check passes
print-defaults  dump the default config

Exit codes: 0 success, 1 verification failure, 2 config error,
3 missing prerequisite artifact.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as dio
from .errors import (
    ConfigError,
    DivbarError,
    MissingArtifactError,
    TrivialProblemError,
    XmaxTooSmallError,
)
from .integral_equation import (
    IeSolverConfig,
    boundary_asymptote,
    ie_residual,
    solve_integral_equation,
)
from .mc import (
    McConfig,
    simulate_dividend_value,
    simulate_stopping_value,
    simulate_suboptimal,
)
from .model import Boundary, ModelParams, SpaceGrid, TimeGrid
from .pde import (
    PdeConfig,
    creation_residual,
    extract_boundary,
    integrate_V,
    smooth_fit_residual,
    solve_U,
    trivial_value,
    verification_residuals,
)
from .report import VerificationReport


def default_config_dict() -> dict:
    return {
        "params": {"mu": 0.5, "sigma": 1.0, "r": 0.05, "horizon_T": 1.0},
        "grids": {"nt": 401, "nx": 801, "x_max": 4.0},
        "ie": {
            "root_tol": 1e-6,
            "max_root_iters": 200,
            "quad_subdivisions": 24,
            "tail_patch_cells": 0,
            "b_max": None,
        },
        "pde": {
            "scheme": "crank-nicolson-projected",
            "psor_tol": 1e-8,
            "psor_max_iters": 0,
            "boundary_extract_tol": 1e-4,
        },
        "mc": {
            "n_paths": 200_000,
            "dt": 1e-3,
            "seed": 0,
            "bridge_correction": True,
            "antithetic": True,
            "boundary_file": None,
            "suboptimal_levels": [],
        },
        "output_dir": "out",
        "checkpoints": [[0.0, 0.0], [0.0, 0.5], [0.0, 1.0]],
    }


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration assembled from a JSON file plus defaults."""

    params: ModelParams
    ie: IeSolverConfig
    pde: PdeConfig
    mc: McConfig
    output_dir: Path
    checkpoints: list[tuple[float, float]]
    boundary_file: Path | None
    suboptimal_levels: list[float]
    raw: dict

    @classmethod
    def from_dict(cls, user: dict) -> "RunConfig":
        base = default_config_dict()
        for key, val in user.items():
            if key not in base:
                raise ConfigError(f"unknown config section {key!r}")
            if isinstance(base[key], dict):
                if not isinstance(val, dict):
                    raise ConfigError(f"section {key!r} must be an object")
                for k2 in val:
                    if k2 not in base[key]:
                        raise ConfigError(f"unknown key {key}.{k2}")
                base[key].update(val)
            else:
                base[key] = val
        try:
            params = ModelParams(**base["params"])
            g = base["grids"]
            tg = TimeGrid.uniform(params.horizon_T, int(g["nt"]))
            sg = SpaceGrid.uniform(float(g["x_max"]), int(g["nx"]))
            ie = IeSolverConfig(time_grid=tg, **base["ie"])
            pde = PdeConfig(time_grid=tg, space_grid=sg, **base["pde"])
            mc_kw = dict(base["mc"])
            boundary_file = mc_kw.pop("boundary_file")
            subopt = [float(c) for c in mc_kw.pop("suboptimal_levels")]
            mc = McConfig(**mc_kw)
        except (TypeError, ValueError, DivbarError) as exc:
            raise ConfigError(str(exc)) from exc
        checkpoints = []
        for pair in base["checkpoints"]:
            t, x = float(pair[0]), float(pair[1])
            if not (0.0 <= t < params.horizon_T) or not (0.0 <= x <= sg.x_max):
                raise ConfigError(
                    f"checkpoint ({t}, {x}) outside [0, T) x [0, x_max]"
                )
            checkpoints.append((t, x))
        return cls(
            params=params, ie=ie, pde=pde, mc=mc,
            output_dir=Path(base["output_dir"]),
            checkpoints=checkpoints,
            boundary_file=Path(boundary_file) if boundary_file else None,
            suboptimal_levels=subopt,
            raw=copy.deepcopy(base),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            user = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(user)

    def metadata(self) -> dict:
        return {"config": self.raw}


def _ensure_outdir(cfg: RunConfig) -> Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir


def cmd_boundary(cfg: RunConfig) -> int:
    try:
        b = solve_integral_equation(cfg.params, cfg.ie)
    except TrivialProblemError as exc:
        print(f"TrivialCase: {exc} -- the value function is V(t, x) = x; "
              "no boundary is produced")
        return 0
    out = _ensure_outdir(cfg)
    dio.write_boundary(out / "boundary_ie.csv", b, cfg.metadata())
    with (out / "boundary_ie.log").open("w") as fh:
        fh.write("node,t,b,residual\n")
        for i, t in enumerate(b.grid.nodes[:-1]):
            res = ie_residual(b, float(t), cfg.params,
                              cfg.ie.quad_subdivisions)
            fh.write(f"{i},{t:.12g},{b.values[i]:.12g},{res:.6e}\n")
    print(f"wrote {out / 'boundary_ie.csv'}")
    return 0


def cmd_pde(cfg: RunConfig) -> int:
    try:
        U = solve_U(cfg.params, cfg.pde)
    except TrivialProblemError as exc:
        print(f"TrivialCase: {exc} -- the value function is V(t, x) = x")
        return 0
    V = integrate_V(U)
    b = extract_boundary(U, cfg.params, cfg.pde.boundary_extract_tol)
    out = _ensure_outdir(cfg)
    meta = cfg.metadata()
    dio.write_surface(out / "U.csv", U, meta)
    dio.write_surface(out / "V.csv", V, meta)
    dio.write_boundary(out / "boundary_pde.csv", b, meta)
    print(f"wrote {out / 'U.csv'}, {out / 'V.csv'}, {out / 'boundary_pde.csv'}")
    return 0


def _load_or_solve_boundary(cfg: RunConfig) -> Boundary:
    if cfg.boundary_file is not None:
        return dio.read_boundary(cfg.boundary_file)
    default = cfg.output_dir / "boundary_ie.csv"
    if default.exists():
        return dio.read_boundary(default)
    return solve_integral_equation(cfg.params, cfg.ie)


def cmd_simulate(cfg: RunConfig) -> int:
    try:
        b = _load_or_solve_boundary(cfg)
    except TrivialProblemError as exc:
        print(f"TrivialCase: {exc}")
        return 0
    rows = []
    for t, x in cfg.checkpoints:
        est = simulate_dividend_value(cfg.params, b, t, x, cfg.mc)
        rows.append(("dividend", t, x, est, cfg.mc.dt))
        est = simulate_stopping_value(cfg.params, b, t, x, cfg.mc)
        rows.append(("stopping", t, x, est, cfg.mc.dt))
    for c in cfg.suboptimal_levels:
        for t, x in cfg.checkpoints:
            est = simulate_suboptimal(cfg.params, c, t, x, cfg.mc)
            rows.append((f"suboptimal_c={c:.12g}", t, x, est, cfg.mc.dt))
    out = _ensure_outdir(cfg)
    dio.write_estimates(out / "mc_estimates.csv", rows, cfg.metadata())
    print(f"wrote {out / 'mc_estimates.csv'}")
    return 0


def _asymptote_checks(b: Boundary, params: ModelParams,
                      report: VerificationReport) -> None:
    # the interior node one step before T is dominated by single-cell
    # quadrature error, so "resolvable" stops two steps before T
    nodes = b.grid.nodes
    idx = np.arange(nodes.size - 7, nodes.size - 2)
    idx = idx[idx >= 0]
    ratios = np.array([
        b.values[i] / boundary_asymptote(float(nodes[i]), params) for i in idx
    ])
    dev = np.abs(ratios - 1.0)
    worst_rise = max(0.0, float(np.diff(dev).max()))
    report.add("asymptote_monotone_trend", worst_rise, 1e-9)
    report.add("asymptote_ratio_last_node", float(ratios[-1] - 1.0), 0.5)


def _build_verify_report(cfg: RunConfig) -> VerificationReport:
    params = cfg.params
    report = VerificationReport()
    if params.mu <= 0.0:
        xs = np.linspace(0.0, cfg.pde.space_grid.x_max, 11)
        gap = max(abs(trivial_value(params, 0.0, float(x)) - x) for x in xs)
        report.add("trivial_case_V_equals_x", gap, 0.0)
        return report

    dx = cfg.pde.space_grid.nodes[1] - cfg.pde.space_grid.nodes[0]
    T = params.horizon_T

    b_ie = solve_integral_equation(params, cfg.ie)
    res = [abs(ie_residual(b_ie, float(t), params, cfg.ie.quad_subdivisions))
           for t in b_ie.grid.nodes[:-1]]
    report.add("ie_residual_max", max(res), 1e-5)
    _asymptote_checks(b_ie, params, report)

    try:
        U = solve_U(params, cfg.pde)
    except XmaxTooSmallError:
        report.add("xmax_sufficient", 1.0, 0.0)
        return report
    report.add("xmax_sufficient", 0.0, 0.0)
    V = integrate_V(U)
    b_pde = extract_boundary(U, params, cfg.pde.boundary_extract_tol)

    tmask = b_ie.grid.nodes <= 0.95 * T
    gap = np.abs(b_ie.values[tmask] - b_pde(b_ie.grid.nodes[tmask])).max()
    report.add("boundary_ie_vs_pde", float(gap), 2.0 * dx)

    sf = smooth_fit_residual(U, b_pde)
    keep = (U.time_grid.nodes <= 0.9 * T) & np.isfinite(sf)
    report.add("smooth_fit", float(np.abs(sf[keep]).max()), 10.0 * dx)

    cr = creation_residual(U, params)
    keep = U.time_grid.nodes <= 0.95 * T
    report.add("creation_condition", float(np.abs(cr[keep]).max()), 10.0 * dx)

    for check in verification_residuals(V, b_pde, params).checks:
        report.append(check)

    for t, x in cfg.checkpoints:
        v_ref = V.at(t, x)
        u_ref = U.at(t, x)
        est = simulate_dividend_value(params, b_ie, t, x, cfg.mc)
        zv = (est.mean - v_ref) / est.std_error if est.std_error > 0 else 0.0
        report.add(f"mc_dividend_t={t:g}_x={x:g}", zv, 3.0)
        est = simulate_stopping_value(params, b_ie, t, x, cfg.mc)
        zu = (est.mean - u_ref) / est.std_error if est.std_error > 0 else 0.0
        report.add(f"mc_stopping_t={t:g}_x={x:g}", zu, 3.0)
    return report


def cmd_verify(cfg: RunConfig) -> int:
    report = _build_verify_report(cfg)
    out = _ensure_outdir(cfg)
    dio.write_report(out / "report.csv", report, cfg.metadata())
    if report.passed:
        print(f"all {len(report.checks)} checks passed; "
              f"wrote {out / 'report.csv'}")
        return 0
    print("FAILED checks:")
    for c in report.failed_checks():
        print(f"  {c.name}: value={c.value:.6g} tolerance={c.tolerance:.6g}")
    return 1


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="divbar",
        description="Optimal dividend barrier solvers and cross-validation",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("boundary", "pde", "simulate", "verify"):
        s = sub.add_parser(name)
        s.add_argument("--config", type=str, default=None,
                       help="path to a JSON run config (defaults used if omitted)")
        s.add_argument("--output", type=str, default=None,
                       help="override output_dir")
        s.add_argument("--seed", type=int, default=None,
                       help="override mc.seed")
    sub.add_parser("print-defaults")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "print-defaults":
        print(json.dumps(default_config_dict(), indent=2))
        return 0
    try:
        if args.config is not None:
            cfg = RunConfig.from_file(args.config)
        else:
            cfg = RunConfig.from_dict({})
        overrides = {}
        if args.output is not None:
            overrides["output_dir"] = args.output
        if args.seed is not None:
            overrides["mc"] = {"seed": args.seed}
        if overrides:
            raw = copy.deepcopy(cfg.raw)
            for k, v in overrides.items():
                if isinstance(v, dict):
                    raw[k].update(v)
                else:
                    raw[k] = v
            cfg = RunConfig.from_dict(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        handler = {"boundary": cmd_boundary, "pde": cmd_pde,
                   "simulate": cmd_simulate, "verify": cmd_verify}[args.command]
        return handler(cfg)
    except MissingArtifactError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
