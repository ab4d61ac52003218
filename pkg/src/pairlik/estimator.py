"""Closed-form pairwise-likelihood estimation for coupled observations.

The model: each couplet's errors (e_i, e_l) = (y_i - beta*x_i, y_l - beta*x_l)
are bivariate normal with common variance sigma2 and correlation psi, and
couplets are treated as independent of one another.  Six sums over the
coupled data (a1..a6) are sufficient; the estimator solves the coupled
stationarity system

    beta   = (a3 - psi*a4) / (a1 - 2*psi*a5)
    sigma2 = (a2 + beta^2*a1 - 2*beta*a3 - 2*psi*a6
              - 2*psi*beta^2*a5 + 2*psi*beta*a4) / (2*q*(1 - psi^2))
    psi    = (a6 - beta*a4 + beta^2*a5) / (q*sigma2)

by fixed-point iteration from psi = 0.  ``numerical_pl_mle`` maximizes the
same log-likelihood with a derivative-free simplex search and serves as an
independent cross-check of the closed-form solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .coupling import CoupletSet
from .errors import (DegenerateVariance, EmptySample, InsufficientCouples,
                     InvalidParams, MissingData, NoConvergence, SingularSystem)
from .spatial import PointSet

PSI_CLAMP = 0.999
MIN_COUPLES = 3


@dataclass(frozen=True)
class PairedSample:
    """Covariate/response values aligned by couplet: arrays of length q."""

    x_i: np.ndarray
    y_i: np.ndarray
    x_l: np.ndarray
    y_l: np.ndarray

    def __post_init__(self):
        q = len(self.x_i)
        for arr in (self.y_i, self.x_l, self.y_l):
            if len(arr) != q:
                raise ValueError("paired arrays must share length q")
        for arr in (self.x_i, self.y_i, self.x_l, self.y_l):
            if q and not np.all(np.isfinite(arr)):
                raise ValueError("paired values must be finite")

    @property
    def q(self) -> int:
        return len(self.x_i)


@dataclass(frozen=True)
class SufficientStats:
    """The six sums over coupled observations plus the couple count."""

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    q: int


@dataclass(frozen=True)
class PlParams:
    """(beta, sigma2, psi) with sigma2 > 0 and |psi| < 1."""

    beta: float
    sigma2: float
    psi: float

    def validate(self) -> None:
        if not self.sigma2 > 0 or not abs(self.psi) < 1:
            raise InvalidParams(
                f"need sigma2 > 0 and |psi| < 1, got sigma2={self.sigma2}, psi={self.psi}")


@dataclass(frozen=True)
class PlFit:
    params: PlParams
    iterations: int
    converged: bool
    loglik: float
    q: int


def extract_paired_sample(points: PointSet, cs: CoupletSet) -> PairedSample:
    """Pull covariate/response at each couplet's members, in couplet order."""
    if not points.has_values():
        raise MissingData("point set carries no covariate/response values")
    x, y = points.x_cov, points.y_resp
    idx = np.concatenate([cs.i_idx, cs.l_idx]) if cs.q else np.empty(0, np.int64)
    if cs.q and not (np.all(np.isfinite(x[idx])) and np.all(np.isfinite(y[idx]))):
        raise MissingData("missing covariate/response at a coupled index")
    return PairedSample(x_i=x[cs.i_idx], y_i=y[cs.i_idx],
                        x_l=x[cs.l_idx], y_l=y[cs.l_idx])


def sufficient_statistics(s: PairedSample) -> SufficientStats:
    """The six sums a1..a6 over the paired sample."""
    if s.q == 0:
        raise EmptySample("sufficient statistics need q >= 1")
    return SufficientStats(
        a1=float(np.sum(s.x_i ** 2) + np.sum(s.x_l ** 2)),
        a2=float(np.sum(s.y_i ** 2) + np.sum(s.y_l ** 2)),
        a3=float(np.sum(s.x_i * s.y_i) + np.sum(s.x_l * s.y_l)),
        a4=float(np.sum(s.x_i * s.y_l) + np.sum(s.x_l * s.y_i)),
        a5=float(np.sum(s.x_i * s.x_l)),
        a6=float(np.sum(s.y_i * s.y_l)),
        q=s.q,
    )


def pairwise_loglik(s: PairedSample, p: PlParams) -> float:
    """Sum of bivariate-normal log densities over couplets."""
    p.validate()
    e_i = s.y_i - p.beta * s.x_i
    e_l = s.y_l - p.beta * s.x_l
    omega = 1.0 - p.psi ** 2
    quad = np.sum(e_i ** 2 - 2.0 * p.psi * e_i * e_l + e_l ** 2)
    return float(-s.q * np.log(2.0 * np.pi * p.sigma2 * np.sqrt(omega))
                 - quad / (2.0 * p.sigma2 * omega))


def _loglik_from_stats(st: SufficientStats, beta: float, sigma2: float,
                       psi: float) -> float:
    # identical to pairwise_loglik, expressed through a1..a6
    s_sq = st.a2 + beta ** 2 * st.a1 - 2.0 * beta * st.a3
    s_cross = st.a6 - beta * st.a4 + beta ** 2 * st.a5
    omega = 1.0 - psi ** 2
    return float(-st.q * np.log(2.0 * np.pi * sigma2 * np.sqrt(omega))
                 - (s_sq - 2.0 * psi * s_cross) / (2.0 * sigma2 * omega))


def _beta_update(st: SufficientStats, psi: float) -> float:
    denom = st.a1 - 2.0 * psi * st.a5
    if abs(denom) < 1e-12:
        raise SingularSystem(f"slope denominator {denom} is numerically zero")
    return (st.a3 - psi * st.a4) / denom


def _sigma2_update(st: SufficientStats, beta: float, psi: float) -> float:
    num = (st.a2 + beta ** 2 * st.a1 - 2.0 * beta * st.a3
           - 2.0 * psi * st.a6 - 2.0 * psi * beta ** 2 * st.a5
           + 2.0 * psi * beta * st.a4)
    return num / (2.0 * st.q * (1.0 - psi ** 2))


def _psi_update(st: SufficientStats, beta: float, sigma2: float) -> float:
    return (st.a6 - beta * st.a4 + beta ** 2 * st.a5) / (st.q * sigma2)


def solve_pl(st: SufficientStats, tol: float = 1e-10,
             max_iter: int = 1000) -> PlFit:
    """Solve the three-equation stationarity system by fixed-point iteration.

    Starts from psi = 0 (so the first beta is the pooled OLS slope) and
    sweeps beta -> sigma2 -> psi until the largest absolute parameter
    change drops below ``tol``.  psi is clamped to [-0.999, 0.999]; a fit
    resting on the clamp, or hitting the iteration cap, is reported as
    non-converged rather than as a valid estimate.
    """
    if st.q < MIN_COUPLES:
        raise InsufficientCouples(
            f"q={st.q} couples cannot support a three-parameter fit (need >= {MIN_COUPLES})")
    beta, sigma2, psi = 0.0, 1.0, 0.0
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        beta_new = _beta_update(st, psi)
        sigma2_new = _sigma2_update(st, beta_new, psi)
        if not sigma2_new > 0:
            raise DegenerateVariance(f"sigma2 collapsed to {sigma2_new}")
        psi_new = _psi_update(st, beta_new, sigma2_new)
        psi_new = min(max(psi_new, -PSI_CLAMP), PSI_CLAMP)
        delta = max(abs(beta_new - beta), abs(sigma2_new - sigma2),
                    abs(psi_new - psi))
        beta, sigma2, psi = beta_new, sigma2_new, psi_new
        if delta < tol:
            converged = True
            break
    if abs(psi) >= PSI_CLAMP:
        converged = False
    if not sigma2 > 0:
        raise DegenerateVariance(f"sigma2 settled at {sigma2}")
    params = PlParams(beta=beta, sigma2=sigma2, psi=psi)
    return PlFit(params=params, iterations=iterations, converged=converged,
                 loglik=_loglik_from_stats(st, beta, sigma2, psi), q=st.q)


PSI_GRID = (-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9)


def numerical_pl_mle(s: PairedSample, xatol: float = 1e-10,
                     fatol: float = 1e-12, max_iter: int = 20000) -> PlFit:
    """Independent maximizer of the pairwise log-likelihood.

    Runs Nelder-Mead from every psi value on a coarse grid; optimizes over
    (beta scaled by the covariate RMS, log sigma2, atanh psi) so the search
    space is unconstrained and roughly isotropic.  Returns the best fit
    found; it improves on (or matches) every grid start by construction.
    """
    if s.q < MIN_COUPLES:
        raise InsufficientCouples(
            f"q={s.q} couples cannot support a three-parameter fit (need >= {MIN_COUPLES})")
    st = sufficient_statistics(s)
    x_rms = np.sqrt(st.a1 / (2 * st.q))
    if not x_rms > 0:
        raise SingularSystem("covariate has zero sum of squares")
    beta0 = st.a3 / st.a1
    resid2 = (st.a2 + beta0 ** 2 * st.a1 - 2 * beta0 * st.a3) / (2 * st.q)
    resid2 = max(resid2, 1e-12)

    def neg_loglik(u):
        beta = u[0] / x_rms
        sigma2 = np.exp(u[1])
        psi = np.tanh(u[2])
        return -_loglik_from_stats(st, beta, sigma2, psi)

    best = None
    for psi0 in PSI_GRID:
        u0 = np.array([beta0 * x_rms, np.log(resid2), np.arctanh(psi0)])
        res = minimize(neg_loglik, u0, method="Nelder-Mead",
                       options={"xatol": xatol, "fatol": fatol,
                                "maxiter": max_iter, "maxfev": 2 * max_iter})
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None or not np.isfinite(best.fun):
        raise NoConvergence("simplex search failed from every grid start")
    beta = best.x[0] / x_rms
    sigma2 = float(np.exp(best.x[1]))
    psi = float(np.tanh(best.x[2]))
    params = PlParams(beta=float(beta), sigma2=sigma2, psi=psi)
    return PlFit(params=params, iterations=int(best.nit),
                 converged=bool(best.success),
                 loglik=float(-best.fun), q=s.q)
