"""Command-line entry point wiring the pipeline.

Subcommands: simulate, pair, fit-pl, fit-fl, mc, buffers, bench.
Flag values override config-file values, which override defaults; unknown
config keys are rejected.  Every run echoes its fully resolved config as
JSON on stdout and writes a ``run-manifest.json`` (resolved config, seeds,
version, sha256 of every output) next to its outputs, so any run can be
reproduced with ``--config run-manifest.json``.

Exit codes: 0 success, 1 domain or I/O error (one JSON error line on
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from importlib.metadata import version as _pkg_version
from pathlib import Path
from typing import Any

from .coupling import RadiusSpec, pair_points, pairing_report, resolve_radius
from .datagen import SCALINGS, DgpConfig, simulate_dataset
from .errors import PairlikError
from .estimator import extract_paired_sample, solve_pl, sufficient_statistics
from .experiments import (DEFAULT_BUFFERS, McConfig, buffer_sweep,
                          run_montecarlo, timing_benchmark)
from .sem import build_knn_weights, fit_sem_ml
from . import io as pio

log = logging.getLogger(__name__)

try:
    VERSION = _pkg_version("pairlik")
except Exception:  # not installed (e.g. run from a checkout)
    VERSION = "0.0.0+local"


@dataclass(frozen=True)
class Opt:
    flag: str
    kind: str  # int | float | str | choice:... | flag | noflag | ints | floats | radius | radii
    default: Any = None
    required: bool = False
    help: str = ""

    @property
    def dest(self) -> str:
        return self.flag.lstrip("-").replace("-", "_")


def _parse_list(value: Any, cast) -> list:
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    return [cast(v) for v in str(value).split(",") if v != ""]


def _normalize(opt: Opt, value: Any) -> Any:
    if value is None:
        return None
    kind = opt.kind
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    if kind in ("str", "path") or kind.startswith("choice:"):
        value = str(value)
        if kind.startswith("choice:"):
            allowed = kind.split(":", 1)[1].split("|")
            if value not in allowed:
                raise ValueError(f"{opt.flag}: must be one of {allowed}")
        return value
    if kind in ("flag", "noflag"):
        return bool(value)
    if kind == "ints":
        return _parse_list(value, int)
    if kind == "floats":
        return _parse_list(value, float)
    if kind == "radius":
        return str(RadiusSpec.parse(str(value)).label())
    if kind == "radii":
        return [RadiusSpec.parse(str(v)).label() for v in
                (value if isinstance(value, (list, tuple)) else str(value).split(","))]
    raise AssertionError(f"unhandled option kind {kind}")


COMMON = [
    Opt("--config", "path", help="JSON config file (or a run-manifest.json)"),
    Opt("--log-level", "choice:debug|info|warning|error", default="warning"),
]

DGP_OPTS = [
    Opt("--beta", "float", default=1.0, help="true regression coefficient"),
    Opt("--sigma", "float", default=1.0, help="error scale"),
    Opt("--domain", "float", default=1000.0, help="square domain side length"),
    Opt("--scaling", "choice:" + "|".join(SCALINGS), default="length",
        help="distance scaling rule for the correlation kernel"),
    Opt("--corr-length", "float", help="correlation length (units); default domain/250"),
    Opt("--x-scale", "float", default=10.0, help="covariate standard deviation"),
]

SUBCOMMANDS: dict[str, list[Opt]] = {
    "simulate": COMMON + [
        Opt("--n", "int", required=True, help="number of locations"),
        Opt("--phi", "float", required=True, help="distance-decay parameter"),
        Opt("--seed", "int", default=0, help="RNG seed"),
        Opt("--out", "path", required=True, help="output points CSV"),
    ] + DGP_OPTS,
    "pair": COMMON + [
        Opt("--in", "path", required=True, help="input points CSV"),
        Opt("--radius", "radius", default="mean",
            help="mean | max | mean+H | fixed value"),
        Opt("--out", "path", required=True, help="output couplets CSV"),
        Opt("--unpaired-out", "path", help="sidecar CSV of unpaired ids "
            "(default: <out>.unpaired.csv)"),
        Opt("--min-separation", "float",
            help="optional inter-couplet separation filter (units)"),
    ],
    "fit-pl": COMMON + [
        Opt("--points", "path", required=True, help="points CSV with values"),
        Opt("--couplets", "path", required=True, help="couplets CSV"),
        Opt("--out", "path", required=True, help="output fit CSV"),
    ],
    "fit-fl": COMMON + [
        Opt("--in", "path", required=True, help="points CSV with values"),
        Opt("--knn", "int", default=5, help="neighbor count for the weights"),
        Opt("--out", "path", required=True, help="output fit CSV"),
    ],
    "mc": COMMON + [
        Opt("--phis", "floats", default=[0.8, 1.0]),
        Opt("--ns", "ints", default=[200, 800]),
        Opt("--reps", "int", default=100),
        Opt("--radius", "radii", default=["mean"],
            help="comma-separated radius specs"),
        Opt("--knn", "int", default=5),
        Opt("--seed", "int", required=True, help="base seed (rep k uses seed+k)"),
        Opt("--no-fl", "noflag", default=False, help="skip the FL baseline"),
        Opt("--fl-max-n", "int", default=5000),
        Opt("--fl-time-budget", "float", help="seconds; skip FL in a cell "
            "after one fit exceeds this"),
        Opt("--workers", "int", default=0, help="parallel workers (0 = cores)"),
        Opt("--out", "path", required=True, help="output directory"),
    ] + DGP_OPTS,
    "buffers": COMMON + [
        Opt("--phis", "floats", default=[0.8, 1.0]),
        Opt("--ns", "ints", default=[200, 800]),
        Opt("--reps", "int", default=100),
        Opt("--buffers", "floats", default=list(DEFAULT_BUFFERS)),
        Opt("--knn", "int", default=5),
        Opt("--seed", "int", required=True),
        Opt("--no-fl", "noflag", default=False),
        Opt("--fl-max-n", "int", default=5000),
        Opt("--fl-time-budget", "float"),
        Opt("--workers", "int", default=0),
        Opt("--out", "path", required=True, help="output directory"),
    ] + DGP_OPTS,
    "bench": COMMON + [
        Opt("--ns", "ints", default=[500, 1000, 2000, 4000]),
        Opt("--repeats", "int", default=5),
        Opt("--phi", "float", default=1.0),
        Opt("--radius", "radius", default="mean"),
        Opt("--knn", "int", default=5),
        Opt("--seed", "int", required=True),
        Opt("--fl-max-n", "int", default=5000),
        Opt("--out", "path", required=True, help="output directory"),
    ] + DGP_OPTS,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairlik",
        description="KD-tree pairwise-likelihood estimation for spatial "
                    "error models, with a full-ML baseline and Monte Carlo "
                    "harness.")
    parser.add_argument("--version", action="version", version=VERSION)
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name, opts in SUBCOMMANDS.items():
        sp = subs.add_parser(name)
        for o in opts:
            if o.kind in ("flag", "noflag"):
                sp.add_argument(o.flag, dest=o.dest, action="store_const",
                                const=True, default=None, help=o.help)
            else:
                sp.add_argument(o.flag, dest=o.dest, default=None,
                                help=o.help)
        sp.set_defaults(_opts=opts, _sub=name)
    return parser


def _load_config_file(path: str) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    if data.get("artifact") == "pairlik" and isinstance(data.get("config"), dict):
        data = data["config"]  # allow re-running from a manifest
    return data


def _resolve(parser: argparse.ArgumentParser, args: argparse.Namespace) -> dict:
    """defaults <- config file <- flags, normalized, unknown keys rejected."""
    opts: list[Opt] = args._opts
    by_dest = {o.dest: o for o in opts}
    resolved = {o.dest: o.default for o in opts}

    def normalize(opt: Opt, value):
        try:
            return _normalize(opt, value)
        except (ValueError, TypeError) as exc:
            parser.error(f"invalid value for {opt.flag}: {exc}")

    if args.config is not None:
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - set(by_dest) - {"config"}
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        for key, value in file_cfg.items():
            if key == "config":
                continue
            resolved[key] = normalize(by_dest[key], value)
    for o in opts:
        flag_value = getattr(args, o.dest)
        if flag_value is not None:
            resolved[o.dest] = normalize(o, flag_value)
    missing = [o.flag for o in opts if o.required and resolved[o.dest] is None]
    if missing:
        parser.error(f"missing required flags: {', '.join(missing)}")
    resolved["config"] = args.config
    return resolved


def _echo(subcommand: str, cfg: dict) -> None:
    print(json.dumps({"subcommand": subcommand, "config": cfg},
                     sort_keys=True))


def _dgp_from(cfg: dict, n: int, phi: float, seed: int) -> DgpConfig:
    return DgpConfig(n=n, phi=phi, beta=cfg["beta"], sigma=cfg["sigma"],
                     domain=cfg["domain"], scaling=cfg["scaling"],
                     corr_length=cfg["corr_length"], x_scale=cfg["x_scale"],
                     seed=seed)


def _cmd_simulate(cfg: dict) -> list[Path]:
    dataset = simulate_dataset(_dgp_from(cfg, cfg["n"], cfg["phi"], cfg["seed"]))
    out = Path(cfg["out"])
    pio.write_points_csv(out, dataset.points)
    return [out]


def _cmd_pair(cfg: dict) -> list[Path]:
    points = pio.read_points_csv(cfg["in"])
    spec = RadiusSpec.parse(cfg["radius"])
    radius = resolve_radius(points, spec)
    cs = pair_points(points, radius, min_separation=cfg["min_separation"])
    out = Path(cfg["out"])
    unpaired = Path(cfg["unpaired_out"]) if cfg["unpaired_out"] else \
        out.with_suffix(out.suffix + ".unpaired.csv")
    pio.write_couplets_csv(out, cs)
    pio.write_unpaired_csv(unpaired, cs)
    rep = pairing_report(cs)
    log.info("paired %d couples (rate %.3f) at radius %g",
             rep.q, rep.pairing_rate, radius)
    return [out, unpaired]


def _cmd_fit_pl(cfg: dict) -> list[Path]:
    points = pio.read_points_csv(cfg["points"])
    cs = pio.read_couplets_csv(cfg["couplets"], n=points.n)
    fit = solve_pl(sufficient_statistics(extract_paired_sample(points, cs)))
    out = Path(cfg["out"])
    pio.write_pl_fit_csv(out, fit)
    return [out]


def _cmd_fit_fl(cfg: dict) -> list[Path]:
    points = pio.read_points_csv(cfg["in"])
    if not points.has_values():
        raise PairlikError("points CSV must carry x_cov and y_resp columns")
    weights = build_knn_weights(points, cfg["knn"])
    fit = fit_sem_ml(points.y_resp, points.x_cov, weights)
    out = Path(cfg["out"])
    pio.write_fl_fit_csv(out, fit)
    return [out]


def _mc_config(cfg: dict, radius_labels: list[str]) -> McConfig:
    workers = cfg["workers"] or (os.cpu_count() or 1)
    return McConfig(
        phis=tuple(cfg["phis"]), ns=tuple(cfg["ns"]), reps=cfg["reps"],
        radius_specs=tuple(RadiusSpec.parse(r) for r in radius_labels),
        knn_k=cfg["knn"], base_seed=cfg["seed"], run_fl=not cfg["no_fl"],
        beta=cfg["beta"], sigma=cfg["sigma"], domain=cfg["domain"],
        scaling=cfg["scaling"], corr_length=cfg["corr_length"],
        x_scale=cfg["x_scale"], fl_max_n=cfg["fl_max_n"],
        fl_time_budget_s=cfg["fl_time_budget"], workers=workers)


def _write_mc_outputs(outdir: Path, report) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "report.csv"
    json_path = outdir / "report.json"
    pio.write_mc_report_csv(csv_path, report)
    pio.write_mc_report_json(json_path, report)
    return [csv_path, json_path]


def _cmd_mc(cfg: dict) -> list[Path]:
    report = run_montecarlo(_mc_config(cfg, cfg["radius"]))
    return _write_mc_outputs(Path(cfg["out"]), report)


def _cmd_buffers(cfg: dict) -> list[Path]:
    mc = _mc_config(cfg, ["mean"])
    report = buffer_sweep(mc, buffers=cfg["buffers"])
    return _write_mc_outputs(Path(cfg["out"]), report)


def _cmd_bench(cfg: dict) -> list[Path]:
    report = timing_benchmark(
        ns=cfg["ns"], repeats=cfg["repeats"], base_seed=cfg["seed"],
        phi=cfg["phi"], knn_k=cfg["knn"],
        radius=RadiusSpec.parse(cfg["radius"]), fl_max_n=cfg["fl_max_n"],
        domain=cfg["domain"], scaling=cfg["scaling"],
        corr_length=cfg["corr_length"])
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [outdir / "report.csv", outdir / "timing.json"]
    pio.write_timing_report_csv(paths[0], report)
    pio.write_timing_json(paths[1], report)
    for method in sorted(report.medians):
        p = outdir / f"times_{method}.csv"
        pio.write_timing_series_csv(p, report, method)
        paths.append(p)
    return paths


RUNNERS = {
    "simulate": _cmd_simulate,
    "pair": _cmd_pair,
    "fit-pl": _cmd_fit_pl,
    "fit-fl": _cmd_fit_fl,
    "mc": _cmd_mc,
    "buffers": _cmd_buffers,
    "bench": _cmd_bench,
}


def _seeds_block(sub: str, cfg: dict) -> dict | None:
    if sub in ("mc", "buffers", "bench"):
        return {"base_seed": cfg["seed"], "per_rep": "base_seed + rep_index"}
    if sub == "simulate":
        return {"seed": cfg["seed"]}
    return None


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    cfg = _resolve(parser, args)
    logging.basicConfig(level=cfg["log_level"].upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    sub = args._sub
    echo_cfg = {k: v for k, v in cfg.items() if k not in ("config", "log_level")}
    _echo(sub, echo_cfg)
    try:
        outputs = RUNNERS[sub](cfg)
        manifest_dir = outputs[0].parent if outputs else Path(".")
        pio.write_manifest(manifest_dir, sub, echo_cfg, outputs, VERSION,
                           seeds=_seeds_block(sub, cfg))
        return 0
    except (PairlikError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "path": getattr(exc, "filename", None)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
