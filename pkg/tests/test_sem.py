import numpy as np
import pytest

from pairlik.datagen import DgpConfig, simulate_dataset
from pairlik.errors import InvalidK, InvalidRho, SingularDesign
from pairlik.sem import (build_knn_weights, concentrated_loglik, fit_sem_ml,
                         sem_loglik, simulate_sem_errors)
from pairlik.spatial import PointSet

from helpers import uniform_points


def weights_for(n, seed, k=5):
    return build_knn_weights(PointSet(uniform_points(n, seed)), k)


class TestBuildKnnWeights:
    def test_rows_sum_to_one_diagonal_zero(self):
        W = weights_for(120, 0)
        dense = W.w.toarray()
        assert np.allclose(dense.sum(axis=1), 1.0)
        assert np.all(np.diag(dense) == 0.0)

    def test_collinear_hand_symmetrization(self):
        # point 2's neighbor is 1; symmetrization adds the reciprocal edge
        pts = PointSet([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
        W = build_knn_weights(pts, k=1)
        dense = W.w.toarray()
        assert np.allclose(dense[0], [0.0, 1.0, 0.0])
        assert np.allclose(dense[1], [0.5, 0.0, 0.5])
        assert np.allclose(dense[2], [0.0, 1.0, 0.0])

    def test_spectrum_real_in_unit_interval_max_one(self):
        W = weights_for(300, 1)
        lam = W.eigenvalues
        assert lam.max() == pytest.approx(1.0, abs=1e-10)
        assert lam.min() >= -1.0 - 1e-10
        # spectrum of the similar symmetric operator equals spectrum of w
        dense_lam = np.sort(np.linalg.eigvals(W.w.toarray()).real)
        assert np.allclose(np.sort(lam), dense_lam, atol=1e-8)

    def test_invalid_k(self):
        pts = PointSet(uniform_points(10, 2))
        with pytest.raises(InvalidK):
            build_knn_weights(pts, k=0)
        with pytest.raises(InvalidK):
            build_knn_weights(pts, k=10)


class TestSemLoglik:
    def test_rho_zero_zero_residuals(self):
        W = weights_for(50, 3)
        x = np.ones(50)
        y = 2.0 * x
        val = sem_loglik(y, x, W, beta=2.0, sigma2=1.0, rho=0.0)
        assert val == pytest.approx(-25.0 * np.log(2 * np.pi), abs=1e-10)

    def test_rho_zero_reduces_to_iid_gaussian(self):
        rng = np.random.default_rng(4)
        W = weights_for(80, 4)
        x = rng.standard_normal(80)
        y = 0.5 * x + rng.standard_normal(80)
        sigma2 = 1.3
        resid = y - 0.5 * x
        want = (-40.0 * np.log(2 * np.pi * sigma2)
                - (resid @ resid) / (2 * sigma2))
        assert sem_loglik(y, x, W, 0.5, sigma2, 0.0) == pytest.approx(want)

    def test_invalid_rho_rejected(self):
        W = weights_for(40, 5)
        x = np.ones(40)
        with pytest.raises(InvalidRho):
            sem_loglik(x, x, W, 1.0, 1.0, rho=1.0)
        with pytest.raises(InvalidRho):
            sem_loglik(x, x, W, 1.0, 1.0, rho=1.0 / W.lambda_min - 0.01)

    def test_finite_differences_match_analytic_gradient(self):
        rng = np.random.default_rng(6)
        W = weights_for(60, 6)
        dense = W.w.toarray()
        x = rng.standard_normal(60)
        y = x + rng.standard_normal(60)
        lam = W.eigenvalues
        for _ in range(5):
            beta = rng.uniform(0.5, 1.5)
            sigma2 = rng.uniform(0.5, 2.0)
            rho = rng.uniform(-0.4, 0.8)
            r = y - beta * x
            B = np.eye(60) - rho * dense
            # analytic score components
            g_beta = (B @ r) @ (B @ x) / sigma2
            g_sig = -30.0 / sigma2 + (B @ r) @ (B @ r) / (2 * sigma2 ** 2)
            g_rho = (-np.sum(lam / (1 - rho * lam))
                     + (B @ r) @ (dense @ r) / sigma2)
            for name, analytic in (("beta", g_beta), ("sigma2", g_sig),
                                   ("rho", g_rho)):
                h = 1e-6
                args = {"beta": beta, "sigma2": sigma2, "rho": rho}
                hi, lo = dict(args), dict(args)
                hi[name] += h
                lo[name] -= h
                fd = (sem_loglik(y, x, W, **hi) - sem_loglik(y, x, W, **lo)) / (2 * h)
                assert fd == pytest.approx(analytic, abs=1e-4)

    def test_eigenvalue_logdet_matches_dense_slogdet(self):
        for n, seed in [(60, 7), (150, 8), (300, 9)]:
            W = weights_for(n, seed)
            dense = W.w.toarray()
            for rho in (-0.6, -0.1, 0.0, 0.3, 0.9):
                via_eigs = np.sum(np.log(1 - rho * W.eigenvalues))
                sign, logabs = np.linalg.slogdet(np.eye(n) - rho * dense)
                assert sign == 1.0
                assert via_eigs == pytest.approx(logabs, abs=1e-8)


class TestFitSemMl:
    def test_recovers_ols_when_no_spatial_structure(self):
        rng = np.random.default_rng(10)
        W = weights_for(400, 10)
        x = rng.standard_normal(400)
        y = 1.0 * x + rng.standard_normal(400)
        fit = fit_sem_ml(y, x, W)
        assert abs(fit.rho) < 0.1
        se_beta = 1.0 / np.sqrt(400)
        assert abs(fit.beta - 1.0) < 3 * se_beta
        assert fit.converged

    def test_recovers_true_sem_rho(self):
        rhos = []
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            pts = PointSet(uniform_points(400, 200 + seed))
            W = build_knn_weights(pts, 5)
            x = rng.standard_normal(400)
            u = simulate_sem_errors(W, rho=0.5, sigma=1.0, rng=rng)
            fit = fit_sem_ml(x + u, x, W)
            rhos.append(fit.rho)
        assert 0.4 <= np.mean(rhos) <= 0.6

    def test_profile_at_zero_rho_equals_ols(self):
        rng = np.random.default_rng(11)
        W = weights_for(100, 11)
        x = rng.standard_normal(100)
        y = 2.0 * x + rng.standard_normal(100)
        from pairlik.sem import _profile
        beta, sigma2 = _profile(y, x, W.w @ y, W.w @ x, 0.0, 100)
        beta_ols = (x @ y) / (x @ x)
        resid = y - beta_ols * x
        assert beta == pytest.approx(beta_ols, abs=1e-8)
        assert sigma2 == pytest.approx((resid @ resid) / 100, abs=1e-8)

    def test_no_better_rho_on_grid(self):
        ds = simulate_dataset(DgpConfig(n=300, phi=1.0, seed=12))
        W = build_knn_weights(ds.points, 5)
        fit = fit_sem_ml(ds.y, ds.x, W)
        lo, hi = W.rho_interval()
        grid = np.linspace(lo + 1e-6, hi - 1e-6, 41)
        best_grid = max(concentrated_loglik(ds.y, ds.x, W, r) for r in grid)
        own = concentrated_loglik(ds.y, ds.x, W, fit.rho)
        assert own >= best_grid - 1e-9

    def test_singular_design_rejected(self):
        W = weights_for(50, 13)
        x = np.zeros(50)
        y = np.ones(50)
        with pytest.raises(SingularDesign):
            fit_sem_ml(y, x, W)

    def test_deterministic_for_fixed_input(self):
        ds = simulate_dataset(DgpConfig(n=150, phi=1.0, seed=14))
        W1 = build_knn_weights(ds.points, 5)
        W2 = build_knn_weights(ds.points, 5)
        f1 = fit_sem_ml(ds.y, ds.x, W1)
        f2 = fit_sem_ml(ds.y, ds.x, W2)
        assert f1 == f2

    def test_simulate_sem_errors_rejects_bad_rho(self):
        W = weights_for(30, 15)
        with pytest.raises(InvalidRho):
            simulate_sem_errors(W, rho=1.2, sigma=1.0,
                                rng=np.random.default_rng(0))
