"""Monte Carlo driver, accuracy metrics, buffer sweeps, and the
pairwise-vs-full-likelihood timing benchmark.

Per-replication seeds are ``base_seed + rep`` so any single replication
can be reproduced in isolation; datasets are pure functions of their
config, so cells sharing (phi, n, rep) reuse one dataset and one FL fit
across radius specifications.  Aggregation is order-independent, which
keeps reports identical under any cell ordering or worker count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import median
from typing import Sequence

import numpy as np

from .coupling import (PAIRING_LEAF_SIZE, RadiusSpec, pair_points,
                       resolve_radius)
from .datagen import DgpConfig, Dataset, distance_divisor, simulate_dataset
from .errors import CellFailed, PairlikError, RBUndefined
from .estimator import (extract_paired_sample, solve_pl,
                        sufficient_statistics)
from .sem import build_knn_weights, fit_sem_ml
from .spatial import build_tree

log = logging.getLogger(__name__)

DEFAULT_BUFFERS = (50.0, 200.0, 350.0, 500.0, 650.0, 800.0)


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo experiment grid.

    One report row is produced per (phi, n, radius spec) cell; each cell
    runs ``reps`` replications seeded ``base_seed + rep``.
    """

    phis: tuple[float, ...]
    ns: tuple[int, ...]
    reps: int
    radius_specs: tuple[RadiusSpec, ...] = (RadiusSpec.mean(),)
    knn_k: int = 5
    base_seed: int = 0
    run_fl: bool = True
    beta: float = 1.0
    sigma: float = 1.0
    domain: float = 1000.0
    scaling: str = "length"
    corr_length: float | None = None
    x_scale: float = 10.0
    fl_max_n: int = 5000
    fl_time_budget_s: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.ns:
            raise ValueError("ns must be nonempty")
        if not self.phis:
            raise ValueError("phis must be nonempty")
        if not self.radius_specs:
            raise ValueError("radius_specs must be nonempty")

    def dgp(self, phi: float, n: int, rep: int) -> DgpConfig:
        return DgpConfig(n=n, phi=phi, beta=self.beta, sigma=self.sigma,
                         domain=self.domain, scaling=self.scaling,
                         corr_length=self.corr_length, x_scale=self.x_scale,
                         seed=self.base_seed + rep)


@dataclass(frozen=True)
class Metrics:
    """Monte Carlo average plus bias / relative bias / MSE against a known
    true value (None entries when the truth is unknown or zero)."""

    ave: float
    bias: float | None
    rel_bias: float | None
    mse: float | None
    n_used: int


def relative_bias(bias: float, theta_true: float) -> float:
    if theta_true == 0:
        raise RBUndefined("relative bias undefined for theta = 0")
    return bias / abs(theta_true)


def compute_metrics(estimates: Sequence[float],
                    theta_true: float | None) -> Metrics:
    """Ave/bias/relative-bias/MSE of replication estimates.

    MSE is the mean squared deviation from the true value, which equals
    the spread around the Monte Carlo average plus squared bias exactly.
    """
    values = np.asarray(list(estimates), dtype=np.float64)
    if values.size == 0:
        raise ValueError("need at least one estimate")
    ave = float(values.mean())
    if theta_true is None:
        return Metrics(ave=ave, bias=None, rel_bias=None, mse=None,
                       n_used=values.size)
    bias = abs(theta_true - ave)
    try:
        rel = relative_bias(bias, theta_true)
    except RBUndefined:
        rel = None
    mse = float(np.mean((values - theta_true) ** 2))
    return Metrics(ave=ave, bias=bias, rel_bias=rel, mse=mse,
                   n_used=values.size)


@dataclass
class RepResult:
    """Everything recorded for one replication of one cell."""

    rep: int
    seed: int
    ok: bool = True
    error: str | None = None
    q: int = 0
    radius: float | None = None
    pl_beta: float | None = None
    pl_sigma2: float | None = None
    pl_psi: float | None = None
    pl_converged: bool | None = None
    pl_iterations: int | None = None
    pl_loglik: float | None = None
    pearson_corr: float | None = None
    model_corr: float | None = None
    fl_beta: float | None = None
    fl_sigma2: float | None = None
    fl_rho: float | None = None
    fl_loglik: float | None = None
    fl_converged: bool | None = None
    fl_skip_reason: str | None = None
    t_pair: float | None = None
    t_pl: float | None = None
    t_fl_build: float | None = None
    t_fl_solve: float | None = None


@dataclass
class CellRow:
    """Aggregated report row for one (phi, n, radius spec) cell."""

    phi: float
    n: int
    radius: str
    reps: int
    n_ok: int
    n_failed: int
    q_mean: float | None
    q_min: int | None
    q_max: int | None
    pl_beta: Metrics | None
    pl_sigma: Metrics | None
    pl_psi: Metrics | None
    pearson_ave: float | None
    model_corr_ave: float | None
    fl_beta: Metrics | None
    fl_sigma: Metrics | None
    fl_rho: Metrics | None
    fl_used: int
    fl_skip_reason: str | None
    t_pair_median: float | None
    t_pl_median: float | None
    t_fl_median: float | None
    base_seed: int
    seeds: tuple[int, ...]
    errors: tuple[str, ...] = ()


@dataclass
class McReport:
    config: McConfig
    rows: list[CellRow]
    details: dict[str, list[RepResult]] = field(default_factory=dict)

    def row(self, phi: float, n: int, radius_label: str) -> CellRow:
        for r in self.rows:
            if r.phi == phi and r.n == n and r.radius == radius_label:
                return r
        raise KeyError((phi, n, radius_label))


def _prep(dataset: Dataset):
    """Build the shared per-dataset pieces: tree and scaled-distance divisor."""
    points = dataset.points
    tree = build_tree(points, leaf_size=min(PAIRING_LEAF_SIZE, points.n))
    cfg = dataset.config
    divisor = distance_divisor(points, cfg.scaling, cfg.resolved_corr_length())
    return tree, divisor


def _pl_stage(dataset: Dataset, tree, divisor: float,
              spec: RadiusSpec, result: RepResult) -> None:
    points = dataset.points
    radius = resolve_radius(points, spec)
    result.radius = radius
    t0 = time.perf_counter()
    cs = pair_points(points, radius, tree=tree)
    result.t_pair = time.perf_counter() - t0
    result.q = cs.q
    sample = extract_paired_sample(points, cs)
    t0 = time.perf_counter()
    fit = solve_pl(sufficient_statistics(sample))
    result.t_pl = time.perf_counter() - t0
    result.pl_beta = fit.params.beta
    result.pl_sigma2 = fit.params.sigma2
    result.pl_psi = fit.params.psi
    result.pl_converged = fit.converged
    result.pl_iterations = fit.iterations
    result.pl_loglik = fit.loglik
    e_i = sample.y_i - fit.params.beta * sample.x_i
    e_l = sample.y_l - fit.params.beta * sample.x_l
    if cs.q >= 2 and e_i.std() > 0 and e_l.std() > 0:
        result.pearson_corr = float(np.corrcoef(e_i, e_l)[0, 1])
    phi = dataset.config.phi
    result.model_corr = float(np.mean(np.exp(-phi * cs.dists / divisor)))


def _fl_stage(dataset: Dataset, tree, knn_k: int, result: RepResult) -> None:
    t0 = time.perf_counter()
    weights = build_knn_weights(dataset.points, knn_k, tree=tree)
    result.t_fl_build = time.perf_counter() - t0
    t0 = time.perf_counter()
    fit = fit_sem_ml(dataset.y, dataset.x, weights)
    result.t_fl_solve = time.perf_counter() - t0
    result.fl_beta = fit.beta
    result.fl_sigma2 = fit.sigma2
    result.fl_rho = fit.rho
    result.fl_loglik = fit.loglik
    result.fl_converged = fit.converged


def run_replication(cfg: DgpConfig, radius: RadiusSpec, run_fl: bool = False,
                    knn_k: int = 5) -> RepResult:
    """One pipeline pass: simulate, pair, fit PL (optionally build W and
    fit FL) on a single dataset, with stage timings."""
    result = RepResult(rep=0, seed=cfg.seed)
    dataset = simulate_dataset(cfg)
    tree, divisor = _prep(dataset)
    _pl_stage(dataset, tree, divisor, radius, result)
    if run_fl:
        _fl_stage(dataset, tree, knn_k, result)
    return result


def _rep_task(args) -> list[tuple[str, RepResult]]:
    """Worker task: one (phi, n, rep) dataset, all radius specs, FL once."""
    (dgp_cfg, specs, labels, run_fl, knn_k, rep) = args
    out: list[tuple[str, RepResult]] = []
    dataset = tree = divisor = None
    fl_proto: RepResult | None = None
    for spec, lbl in zip(specs, labels):
        result = RepResult(rep=rep, seed=dgp_cfg.seed)
        try:
            if dataset is None:
                dataset = simulate_dataset(dgp_cfg)
                tree, divisor = _prep(dataset)
            _pl_stage(dataset, tree, divisor, spec, result)
            if run_fl:
                if fl_proto is None:
                    _fl_stage(dataset, tree, knn_k, result)
                    fl_proto = result
                else:  # FL does not depend on the radius; reuse the fit
                    for name in ("fl_beta", "fl_sigma2", "fl_rho", "fl_loglik",
                                 "fl_converged", "t_fl_build", "t_fl_solve"):
                        setattr(result, name, getattr(fl_proto, name))
        except PairlikError as exc:
            result.ok = False
            result.error = f"{type(exc).__name__}: {exc}"
        out.append((lbl, result))
    return out


def _aggregate_cell(phi: float, n: int, label: str, reps: list[RepResult],
                    mc: McConfig) -> CellRow:
    ok = [r for r in reps if r.ok]
    if not ok:
        raise CellFailed(
            f"all {len(reps)} replications failed in cell "
            f"(phi={phi}, n={n}, radius={label}); first error: {reps[0].error}")
    failed = [r for r in reps if not r.ok]
    qs = [r.q for r in ok]
    pl_beta = compute_metrics([r.pl_beta for r in ok], mc.beta)
    pl_sigma = compute_metrics([np.sqrt(r.pl_sigma2) for r in ok], mc.sigma)
    pl_psi = compute_metrics([r.pl_psi for r in ok], None)
    pearson = [r.pearson_corr for r in ok if r.pearson_corr is not None]
    model = [r.model_corr for r in ok if r.model_corr is not None]
    fl_ok = [r for r in ok if r.fl_beta is not None]
    fl_beta = fl_sigma = fl_rho = None
    if fl_ok:
        fl_beta = compute_metrics([r.fl_beta for r in fl_ok], mc.beta)
        fl_sigma = compute_metrics([np.sqrt(r.fl_sigma2) for r in fl_ok], mc.sigma)
        fl_rho = compute_metrics([r.fl_rho for r in fl_ok], None)
    skip_reasons = {r.fl_skip_reason for r in ok if r.fl_skip_reason}
    return CellRow(
        phi=phi, n=n, radius=label, reps=len(reps), n_ok=len(ok),
        n_failed=len(failed),
        q_mean=float(np.mean(qs)), q_min=int(min(qs)), q_max=int(max(qs)),
        pl_beta=pl_beta, pl_sigma=pl_sigma, pl_psi=pl_psi,
        pearson_ave=float(np.mean(pearson)) if pearson else None,
        model_corr_ave=float(np.mean(model)) if model else None,
        fl_beta=fl_beta, fl_sigma=fl_sigma, fl_rho=fl_rho,
        fl_used=len(fl_ok),
        fl_skip_reason="; ".join(sorted(skip_reasons)) if skip_reasons else None,
        t_pair_median=median(r.t_pair for r in ok if r.t_pair is not None),
        t_pl_median=median(r.t_pl for r in ok if r.t_pl is not None),
        t_fl_median=(median(r.t_fl_build + r.t_fl_solve for r in fl_ok)
                     if fl_ok else None),
        base_seed=mc.base_seed,
        seeds=tuple(r.seed for r in reps),
        errors=tuple(r.error for r in failed),
    )


def run_montecarlo(mc: McConfig) -> McReport:
    """Run the full (phi, n, radius) grid and aggregate metrics per cell."""
    labels = [s.label() for s in mc.radius_specs]
    results: dict[tuple[float, int, str], list[RepResult]] = {
        (phi, n, lbl): [] for phi in mc.phis for n in mc.ns for lbl in labels}

    tasks = []
    for phi in mc.phis:
        for n in mc.ns:
            run_fl = mc.run_fl and n <= mc.fl_max_n
            for rep in range(mc.reps):
                tasks.append((mc.dgp(phi, n, rep), mc.radius_specs, labels,
                              run_fl, mc.knn_k, rep))

    if mc.workers > 1:
        with ProcessPoolExecutor(max_workers=mc.workers) as pool:
            all_outputs = list(pool.map(_rep_task, tasks, chunksize=1))
    else:
        all_outputs = []
        budget_blown: set[tuple[float, int]] = set()
        for task in tasks:
            cfg = task[0]
            key = (cfg.phi, cfg.n)
            if key in budget_blown:
                task = (cfg, task[1], task[2], False, task[4], task[5])
            out = _rep_task(task)
            if key in budget_blown:
                for _, r in out:
                    r.fl_skip_reason = "fl time budget exceeded"
            elif mc.fl_time_budget_s is not None:
                for _, r in out:
                    total = (r.t_fl_build or 0.0) + (r.t_fl_solve or 0.0)
                    if total > mc.fl_time_budget_s:
                        budget_blown.add(key)
                        log.warning("FL budget exceeded at phi=%s n=%s "
                                    "(%.2fs); skipping FL for later reps",
                                    cfg.phi, cfg.n, total)
            all_outputs.append(out)

    for task, out in zip(tasks, all_outputs):
        cfg = task[0]
        for lbl, res in out:
            results[(cfg.phi, cfg.n, lbl)].append(res)

    rows = []
    details: dict[str, list[RepResult]] = {}
    for phi in mc.phis:
        for n in mc.ns:
            for lbl in labels:
                reps = sorted(results[(phi, n, lbl)], key=lambda r: r.rep)
                if mc.run_fl and n > mc.fl_max_n:
                    for r in reps:
                        r.fl_skip_reason = f"n={n} exceeds fl_max_n={mc.fl_max_n}"
                rows.append(_aggregate_cell(phi, n, lbl, reps, mc))
                details[f"phi={phi:g},n={n},radius={lbl}"] = reps
    return McReport(config=mc, rows=rows, details=details)


def buffer_sweep(mc: McConfig,
                 buffers: Sequence[float] = DEFAULT_BUFFERS) -> McReport:
    """Monte Carlo over the radius menu {mean, max, mean+h for h in buffers}."""
    specs = (RadiusSpec.mean(), RadiusSpec.max(),
             *(RadiusSpec.mean_plus(h) for h in buffers))
    return run_montecarlo(replace(mc, radius_specs=specs))


@dataclass
class TimingRow:
    """Deterministic (seed-dependent only) estimates for one benchmark n."""

    n: int
    q: int
    pl_beta: float
    pl_sigma2: float
    pl_psi: float
    fl_beta: float | None
    fl_sigma2: float | None
    fl_rho: float | None


@dataclass
class TimingReport:
    """Wall-clock medians and log-log slopes for the PL and FL pipelines."""

    ns: tuple[int, ...]
    repeats: int
    base_seed: int
    rows: list[TimingRow]
    times: dict[str, dict[int, list[float]]]
    medians: dict[str, dict[int, float]]
    iqrs: dict[str, dict[int, float]]
    slopes: dict[str, tuple[float, float]]

    def median_time(self, method: str, n: int) -> float:
        return self.medians[method][n]


def _loglog_slope(ns: Sequence[int], ts: Sequence[float]) -> tuple[float, float]:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(ts, dtype=float))
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def timing_benchmark(ns: Sequence[int], repeats: int, base_seed: int,
                     phi: float = 1.0, knn_k: int = 5,
                     radius: RadiusSpec = RadiusSpec.mean(),
                     fl_max_n: int | None = None,
                     domain: float = 1000.0, scaling: str = "length",
                     corr_length: float | None = None) -> TimingReport:
    """Median wall-clock of the PL pipeline (pair + solve) versus the FL
    pipeline (weights/spectral build + concentrated ML) on shared datasets.

    Runs strictly sequentially.  One extra warm-up repeat per n is timed
    and discarded (it also absorbs kernel JIT compilation); the pairing
    radius is resolved outside the timed region, as configuration.
    """
    ns = list(ns)
    if ns != sorted(ns):
        raise ValueError("ns must be sorted ascending")
    if repeats < 3 and ns:
        raise ValueError("repeats must be >= 3")
    times: dict[str, dict[int, list[float]]] = {"pl": {}, "fl": {}}
    rows: list[TimingRow] = []
    for n in ns:
        pl_times: list[float] = []
        fl_times: list[float] = []
        run_fl = fl_max_n is None or n <= fl_max_n
        row: TimingRow | None = None
        for rep in range(repeats + 1):
            cfg = DgpConfig(n=n, phi=phi, domain=domain, scaling=scaling,
                            corr_length=corr_length, seed=base_seed + rep)
            dataset = simulate_dataset(cfg)
            rvalue = resolve_radius(dataset.points, radius)
            t0 = time.perf_counter()
            cs = pair_points(dataset.points, rvalue)
            sample = extract_paired_sample(dataset.points, cs)
            fit = solve_pl(sufficient_statistics(sample))
            t_pl = time.perf_counter() - t0
            fl_fit = None
            t_fl = None
            if run_fl:
                t0 = time.perf_counter()
                weights = build_knn_weights(dataset.points, knn_k)
                fl_fit = fit_sem_ml(dataset.y, dataset.x, weights)
                t_fl = time.perf_counter() - t0
            if rep == 0:
                continue  # discarded warm-up
            pl_times.append(t_pl)
            if t_fl is not None:
                fl_times.append(t_fl)
            row = TimingRow(
                n=n, q=cs.q, pl_beta=fit.params.beta,
                pl_sigma2=fit.params.sigma2, pl_psi=fit.params.psi,
                fl_beta=fl_fit.beta if fl_fit else None,
                fl_sigma2=fl_fit.sigma2 if fl_fit else None,
                fl_rho=fl_fit.rho if fl_fit else None)
        if row is not None:
            rows.append(row)
        times["pl"][n] = pl_times
        if fl_times:
            times["fl"][n] = fl_times

    def quartiles(ts: list[float]) -> tuple[float, float]:
        med = median(ts)
        q1, q3 = np.percentile(ts, [25, 75])
        return float(med), float(q3 - q1)

    medians = {m: {n: quartiles(ts)[0] for n, ts in d.items()}
               for m, d in times.items()}
    iqrs = {m: {n: quartiles(ts)[1] for n, ts in d.items()}
            for m, d in times.items()}
    slopes = {}
    for m, d in medians.items():
        if len(d) >= 2:
            slopes[m] = _loglog_slope(list(d.keys()), list(d.values()))
    return TimingReport(ns=tuple(ns), repeats=repeats, base_seed=base_seed,
                        rows=rows, times=times, medians=medians, iqrs=iqrs,
                        slopes=slopes)
