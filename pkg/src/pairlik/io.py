"""CSV and JSON interchange: points, couplets, fits, reports, manifests.

All CSV output is deterministic for deterministic inputs: floats are
written with ``repr`` (shortest round-trip form), newlines are fixed to
``\\n``, and no timestamps are embedded.  Wall-clock measurements go only
to the JSON provenance reports and the dedicated timing CSVs, never into
report.csv, so repeated seeded runs produce byte-identical report files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .coupling import CoupletSet
from .estimator import PlFit
from .experiments import McReport, Metrics, TimingReport
from .sem import SemFit
from .spatial import PointSet

POINTS_COLUMNS = ("id", "x", "y", "x_cov", "y_resp")


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: Iterable[str],
               rows: Iterable[Iterable[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_points_csv(path: str | Path, points: PointSet) -> None:
    """Write ``id,x,y[,x_cov,y_resp]`` (value columns when present)."""
    path = Path(path)
    with_values = points.has_values()
    header = POINTS_COLUMNS if with_values else POINTS_COLUMNS[:3]
    def rows():
        for i in range(points.n):
            row = [i, points.xs[i], points.ys[i]]
            if with_values:
                row += [points.x_cov[i], points.y_resp[i]]
            yield row
    _write_csv(path, header, rows())


def read_points_csv(path: str | Path) -> PointSet:
    """Read a points CSV; ids must be 0..n-1 in any order."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if tuple(header) not in (POINTS_COLUMNS[:3], POINTS_COLUMNS):
            raise ValueError(
                f"{path}: header must be id,x,y or id,x,y,x_cov,y_resp, got {header}")
        with_values = len(header) == 5
        records = [row for row in reader if row]
    n = len(records)
    coords = np.empty((n, 2))
    x_cov = np.empty(n) if with_values else None
    y_resp = np.empty(n) if with_values else None
    seen = np.zeros(n, dtype=bool)
    for row in records:
        i = int(row[0])
        if not 0 <= i < n or seen[i]:
            raise ValueError(f"{path}: ids must be 0..{n - 1} without repeats")
        seen[i] = True
        coords[i] = (float(row[1]), float(row[2]))
        if with_values:
            x_cov[i] = float(row[3])
            y_resp[i] = float(row[4])
    return PointSet(coords, x_cov=x_cov, y_resp=y_resp)


def write_couplets_csv(path: str | Path, cs: CoupletSet) -> None:
    _write_csv(Path(path), ("i", "l", "dist"),
               zip(cs.i_idx.tolist(), cs.l_idx.tolist(), cs.dists.tolist()))


def write_unpaired_csv(path: str | Path, cs: CoupletSet) -> None:
    _write_csv(Path(path), ("id",), ([i] for i in sorted(cs.unpaired)))


def read_couplets_csv(path: str | Path, n: int) -> CoupletSet:
    """Read a couplets CSV back into a CoupletSet over n points."""
    path = Path(path)
    i_idx, l_idx, dists = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["i", "l", "dist"]:
            raise ValueError(f"{path}: header must be i,l,dist")
        for row in reader:
            if not row:
                continue
            i_idx.append(int(row[0]))
            l_idx.append(int(row[1]))
            dists.append(float(row[2]))
    return CoupletSet(n=n,
                      i_idx=np.asarray(i_idx, dtype=np.int64),
                      l_idx=np.asarray(l_idx, dtype=np.int64),
                      dists=np.asarray(dists, dtype=np.float64),
                      radius=float(max(dists)) if dists else 0.0)


def write_pl_fit_csv(path: str | Path, fit: PlFit) -> None:
    _write_csv(Path(path),
               ("beta", "sigma2", "psi", "q", "converged", "iterations", "loglik"),
               [[fit.params.beta, fit.params.sigma2, fit.params.psi, fit.q,
                 fit.converged, fit.iterations, fit.loglik]])


def write_fl_fit_csv(path: str | Path, fit: SemFit) -> None:
    _write_csv(Path(path), ("beta", "sigma2", "rho", "loglik", "converged"),
               [[fit.beta, fit.sigma2, fit.rho, fit.loglik, fit.converged]])


def _metric_cells(m: Metrics | None) -> list[Any]:
    if m is None:
        return [None, None, None, None]
    return [m.ave, m.bias, m.rel_bias, m.mse]


MC_REPORT_HEADER = (
    "phi", "n", "radius", "reps", "n_ok", "q_mean", "q_min", "q_max",
    "pl_beta_ave", "pl_beta_bias", "pl_beta_rel_bias", "pl_beta_mse",
    "pl_sigma_ave", "pl_sigma_bias", "pl_sigma_rel_bias", "pl_sigma_mse",
    "pl_psi_ave", "pearson_ave", "model_corr_ave",
    "fl_beta_ave", "fl_beta_bias", "fl_beta_rel_bias", "fl_beta_mse",
    "fl_sigma_ave", "fl_sigma_bias", "fl_sigma_rel_bias", "fl_sigma_mse",
    "fl_rho_ave", "fl_used", "fl_skip_reason",
)


def write_mc_report_csv(path: str | Path, report: McReport) -> None:
    """One deterministic row per cell (no wall-clock columns)."""
    def rows():
        for r in report.rows:
            yield ([r.phi, r.n, r.radius, r.reps, r.n_ok,
                    r.q_mean, r.q_min, r.q_max]
                   + _metric_cells(r.pl_beta) + _metric_cells(r.pl_sigma)
                   + [r.pl_psi.ave if r.pl_psi else None,
                      r.pearson_ave, r.model_corr_ave]
                   + _metric_cells(r.fl_beta) + _metric_cells(r.fl_sigma)
                   + [r.fl_rho.ave if r.fl_rho else None,
                      r.fl_used, r.fl_skip_reason])
    _write_csv(Path(path), MC_REPORT_HEADER, rows())


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path: str | Path, payload: Any) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_mc_report_json(path: str | Path, report: McReport) -> None:
    """Full provenance: config, rows, and per-replication details
    (including wall-clock, which is why this file is not byte-stable)."""
    payload = {
        "config": _config_dict(report.config),
        "rows": [_jsonable(r) for r in report.rows],
        "replications": {k: [_jsonable(r) for r in v]
                         for k, v in report.details.items()},
    }
    write_json(path, payload)


def _config_dict(cfg: Any) -> dict:
    d = _jsonable(cfg)
    if "radius_specs" in d:
        d["radius_specs"] = [s.label() for s in cfg.radius_specs]
    return d


TIMING_REPORT_HEADER = (
    "n", "q", "pl_beta", "pl_sigma2", "pl_psi", "fl_beta", "fl_sigma2", "fl_rho",
)


def write_timing_report_csv(path: str | Path, report: TimingReport) -> None:
    """Deterministic per-n estimates from the benchmark datasets."""
    _write_csv(Path(path), TIMING_REPORT_HEADER,
               ([r.n, r.q, r.pl_beta, r.pl_sigma2, r.pl_psi,
                 r.fl_beta, r.fl_sigma2, r.fl_rho] for r in report.rows))


def write_timing_series_csv(path: str | Path, report: TimingReport,
                            method: str) -> None:
    """Plot-ready two-column ``n,seconds`` (median per n)."""
    med = report.medians.get(method, {})
    _write_csv(Path(path), ("n", "seconds"),
               ([n, med[n]] for n in sorted(med)))


def write_timing_json(path: str | Path, report: TimingReport) -> None:
    write_json(path, {
        "ns": list(report.ns),
        "repeats": report.repeats,
        "base_seed": report.base_seed,
        "rows": [_jsonable(r) for r in report.rows],
        "times": report.times,
        "medians": report.medians,
        "iqrs": report.iqrs,
        "slopes": {m: {"slope": s, "rms_residual": r}
                   for m, (s, r) in report.slopes.items()},
    })


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(directory: str | Path, subcommand: str, config: dict,
                   outputs: list[Path], version: str,
                   seeds: dict | None = None) -> Path:
    """Write run-manifest.json next to the outputs.

    The manifest embeds the fully resolved config, so a run can be
    reproduced with ``--config run-manifest.json`` (the CLI unwraps the
    nested config block).
    """
    directory = Path(directory)
    manifest = {
        "artifact": "pairlik",
        "version": version,
        "subcommand": subcommand,
        "config": config,
        "seeds": seeds or {},
        "outputs": {p.name: f"sha256:{sha256_file(p)}" for p in outputs},
    }
    path = directory / "run-manifest.json"
    write_json(path, manifest)
    return path
