"""CSV/JSON serialization of boundaries, surfaces, estimates and reports.

All numbers are written with 12 significant digits so reruns with the same
config and seed produce byte-identical files.  Every artifact gets a
``<name>.meta.json`` sidecar recording the inputs that produced it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import MissingArtifactError
from .mc import McEstimate
from .model import Boundary, ModelParams, SpaceGrid, TimeGrid
from .pde import ValueSurface
from .report import CheckResult, VerificationReport

_FMT = "{:.12g}"


def _f(x: float) -> str:
    return _FMT.format(float(x))


def write_metadata(path: str | Path, metadata: dict) -> Path:
    """Write the reproducibility sidecar ``<path>.meta.json``."""
    side = Path(str(path) + ".meta.json")
    side.write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")
    return side


def write_boundary(path: str | Path, b: Boundary,
                   metadata: dict | None = None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "b"])
        for t, v in zip(b.grid.nodes, b.values):
            w.writerow([_f(t), _f(v)])
    if metadata is not None:
        write_metadata(path, metadata)
    return path


def read_boundary(path: str | Path) -> Boundary:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"boundary file not found: {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Boundary(TimeGrid(data[:, 0]), data[:, 1])


def write_surface(path: str | Path, surf: ValueSurface,
                  metadata: dict | None = None) -> Path:
    """Surface CSV: header row ``t, x0, x1, ...``; one row per time node."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [_f(x) for x in surf.space_grid.nodes])
        for t, row in zip(surf.time_grid.nodes, surf.values):
            w.writerow([_f(t)] + [_f(v) for v in row])
    if metadata is not None:
        write_metadata(path, metadata)
    return path


def read_surface(path: str | Path, kind: str) -> ValueSurface:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"surface file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    xg = np.array([float(v) for v in rows[0][1:]])
    body = np.array([[float(v) for v in row] for row in rows[1:]])
    return ValueSurface(TimeGrid(body[:, 0]), SpaceGrid(xg), body[:, 1:], kind)


MC_HEADER = ["label", "t", "x", "mean", "std_error", "ci_lo", "ci_hi",
             "n_paths", "dt", "seed"]


def write_estimates(path: str | Path,
                    rows: list[tuple[str, float, float, McEstimate, float]],
                    metadata: dict | None = None) -> Path:
    """Each row is (label, t, x, estimate, dt)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MC_HEADER)
        for label, t, x, est, dt in rows:
            w.writerow([label, _f(t), _f(x), _f(est.mean), _f(est.std_error),
                        _f(est.ci95[0]), _f(est.ci95[1]),
                        str(est.n_paths), _f(dt), str(est.seed)])
    if metadata is not None:
        write_metadata(path, metadata)
    return path


def write_report(path: str | Path, report: VerificationReport,
                 metadata: dict | None = None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "value", "tolerance", "pass"])
        for c in report.checks:
            w.writerow([c.name, _f(c.value), _f(c.tolerance),
                        "true" if c.passed else "false"])
    if metadata is not None:
        write_metadata(path, metadata)
    return path


def read_report(path: str | Path) -> VerificationReport:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"report file not found: {path}")
    report = VerificationReport()
    with path.open(newline="") as fh:
        for row in list(csv.reader(fh))[1:]:
            report.append(CheckResult(row[0], float(row[1]), float(row[2]),
                                      row[3] == "true"))
    return report


def params_metadata(params: ModelParams) -> dict:
    meta = asdict(params)
    meta.pop("lam", None)
    return meta
