import numpy as np
import pytest

from pairlik.coupling import RadiusSpec
from pairlik.datagen import DgpConfig
from pairlik.errors import CellFailed
from pairlik.experiments import (McConfig, RepResult, _aggregate_cell,
                                 buffer_sweep, compute_metrics,
                                 run_montecarlo, run_replication,
                                 timing_benchmark)


def small_mc(**kw):
    defaults = dict(phis=(1.0,), ns=(120,), reps=4,
                    radius_specs=(RadiusSpec.mean(),), knn_k=5,
                    base_seed=500, run_fl=True)
    defaults.update(kw)
    return McConfig(**defaults)


class TestComputeMetrics:
    def test_all_estimates_equal_truth(self):
        m = compute_metrics([1.0, 1.0, 1.0], 1.0)
        assert (m.bias, m.rel_bias, m.mse) == (0.0, 0.0, 0.0)
        assert m.ave == 1.0

    def test_hand_case_two_estimates(self):
        m = compute_metrics([0.9, 1.1], 1.0)
        assert m.ave == pytest.approx(1.0)
        assert m.bias == pytest.approx(0.0)
        assert m.rel_bias == pytest.approx(0.0)
        assert m.mse == pytest.approx(0.01)

    def test_relative_bias_from_reported_average(self):
        m = compute_metrics([0.99517], 1.0)
        assert m.rel_bias == pytest.approx(0.00483, abs=1e-12)

    def test_zero_truth_relative_bias_absent(self):
        m = compute_metrics([0.1, -0.1], 0.0)
        assert m.rel_bias is None
        assert m.bias == pytest.approx(0.0)

    def test_unknown_truth_gives_average_only(self):
        m = compute_metrics([0.2, 0.4], None)
        assert m.ave == pytest.approx(0.3)
        assert m.bias is None and m.rel_bias is None and m.mse is None

    def test_mse_decomposition_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            values = rng.normal(1.0, 0.3, size=rng.integers(2, 50))
            m = compute_metrics(values, 1.0)
            var = float(np.mean((values - values.mean()) ** 2))
            assert abs(m.mse - (var + m.bias ** 2)) < 1e-12

    def test_single_estimate_mse_is_squared_bias(self):
        m = compute_metrics([0.97], 1.0)
        assert m.mse == pytest.approx(m.bias ** 2)


class TestRunReplication:
    def test_deterministic_for_fixed_seed(self):
        cfg = DgpConfig(n=150, phi=1.0, seed=77)
        a = run_replication(cfg, RadiusSpec.mean(), run_fl=True)
        b = run_replication(cfg, RadiusSpec.mean(), run_fl=True)
        assert (a.pl_beta, a.pl_sigma2, a.pl_psi) == \
            (b.pl_beta, b.pl_sigma2, b.pl_psi)
        assert (a.fl_beta, a.fl_rho) == (b.fl_beta, b.fl_rho)

    def test_fl_fields_absent_without_fl(self):
        r = run_replication(DgpConfig(n=100, phi=1.0, seed=5),
                            RadiusSpec.mean(), run_fl=False)
        assert r.fl_beta is None and r.fl_rho is None
        assert r.t_fl_build is None

    def test_single_replication_sanity_n200(self):
        r = run_replication(DgpConfig(n=200, phi=1.0, seed=9),
                            RadiusSpec.mean(), run_fl=False)
        assert np.isfinite(r.pl_beta)
        assert -1 < r.pl_psi < 1
        assert r.q >= 90
        assert r.t_pair is not None and r.t_pl is not None


class TestAggregation:
    def test_failed_reps_recorded_not_dropped(self):
        ok = RepResult(rep=0, seed=0, q=50, pl_beta=1.0, pl_sigma2=1.0,
                       pl_psi=0.1, t_pair=0.0, t_pl=0.0)
        bad = RepResult(rep=1, seed=1, ok=False,
                        error="InsufficientCouples: q=0")
        row = _aggregate_cell(1.0, 100, "mean", [ok, bad], small_mc())
        assert row.n_ok == 1 and row.n_failed == 1
        assert row.errors == ("InsufficientCouples: q=0",)
        assert row.pl_beta.n_used == 1

    def test_all_failed_cell_raises(self):
        bad = RepResult(rep=0, seed=0, ok=False, error="boom")
        with pytest.raises(CellFailed):
            _aggregate_cell(1.0, 100, "mean", [bad], small_mc())


class TestRunMontecarlo:
    def test_row_count_and_keys(self):
        mc = small_mc(phis=(0.8, 1.0), ns=(60, 120), reps=2,
                      radius_specs=(RadiusSpec.mean(), RadiusSpec.fixed(80.0)),
                      run_fl=False)
        report = run_montecarlo(mc)
        assert len(report.rows) == 2 * 2 * 2
        labels = {(r.phi, r.n, r.radius) for r in report.rows}
        assert (0.8, 60, "mean") in labels and (1.0, 120, "80") in labels

    def test_reps_one_mse_equals_squared_bias(self):
        report = run_montecarlo(small_mc(reps=1, run_fl=False))
        for row in report.rows:
            assert row.pl_beta.mse == pytest.approx(row.pl_beta.bias ** 2)

    def test_seed_provenance_and_cell_reproducibility(self):
        mc = small_mc(phis=(0.8, 1.0), ns=(60, 120), reps=3, run_fl=False)
        full = run_montecarlo(mc)
        row = full.row(1.0, 120, "mean")
        assert row.seeds == tuple(mc.base_seed + k for k in range(3))
        # re-running the single cell in isolation reproduces its numbers
        alone = run_montecarlo(small_mc(phis=(1.0,), ns=(120,), reps=3,
                                        run_fl=False))
        lone_row = alone.row(1.0, 120, "mean")
        assert lone_row.pl_beta == row.pl_beta
        assert lone_row.pl_psi == row.pl_psi

    def test_cell_order_permutation_leaves_values_unchanged(self):
        specs = (RadiusSpec.mean(), RadiusSpec.fixed(90.0))
        a = run_montecarlo(small_mc(phis=(0.8, 1.0), ns=(60, 100), reps=2,
                                    radius_specs=specs, run_fl=False))
        b = run_montecarlo(small_mc(phis=(1.0, 0.8), ns=(100, 60), reps=2,
                                    radius_specs=specs[::-1], run_fl=False))
        for row in a.rows:
            other = b.row(row.phi, row.n, row.radius)
            assert other.pl_beta == row.pl_beta
            assert other.pl_sigma == row.pl_sigma
            assert other.pl_psi == row.pl_psi
            assert other.q_mean == row.q_mean

    def test_fl_shared_across_radius_specs(self):
        specs = (RadiusSpec.mean(), RadiusSpec.fixed(100.0))
        report = run_montecarlo(small_mc(radius_specs=specs, reps=2))
        r1 = report.row(1.0, 120, "mean")
        r2 = report.row(1.0, 120, "100")
        assert r1.fl_beta == r2.fl_beta
        assert r1.fl_rho == r2.fl_rho

    def test_fl_skipped_beyond_max_n(self):
        report = run_montecarlo(small_mc(reps=2, fl_max_n=100))
        row = report.rows[0]
        assert row.fl_beta is None
        assert "fl_max_n" in row.fl_skip_reason

    def test_all_reps_fail_raises_cell_failed(self):
        mc = small_mc(radius_specs=(RadiusSpec.fixed(1e-6),), reps=2,
                      run_fl=False)
        with pytest.raises(CellFailed):
            run_montecarlo(mc)

    def test_parallel_workers_match_sequential(self):
        mc_seq = small_mc(phis=(1.0,), ns=(60, 100), reps=3, run_fl=False)
        mc_par = small_mc(phis=(1.0,), ns=(60, 100), reps=3, run_fl=False,
                          workers=2)
        a = run_montecarlo(mc_seq)
        b = run_montecarlo(mc_par)
        for row in a.rows:
            other = b.row(row.phi, row.n, row.radius)
            assert other.pl_beta == row.pl_beta
            assert other.pl_psi == row.pl_psi


class TestBufferSweep:
    def test_row_count_two_phis_eight_specs(self):
        mc = small_mc(phis=(0.8, 1.0), ns=(60,), reps=1, run_fl=False)
        report = buffer_sweep(mc)
        assert len(report.rows) == 2 * 1 * 8
        labels = [r.radius for r in report.rows if r.phi == 1.0]
        assert labels[:2] == ["mean", "max"]
        assert labels[2] == "mean+50"

    def test_q_nondecreasing_in_buffer(self):
        mc = small_mc(phis=(1.0,), ns=(150,), reps=3, run_fl=False)
        report = buffer_sweep(mc, buffers=(50.0, 200.0, 500.0))
        qs = [report.row(1.0, 150, lbl).q_mean
              for lbl in ("mean", "mean+50", "mean+200", "mean+500")]
        assert qs == sorted(qs)


class TestTimingBenchmark:
    def test_empty_ns_empty_report(self):
        report = timing_benchmark([], repeats=5, base_seed=1)
        assert report.rows == []
        assert report.medians == {"pl": {}, "fl": {}}
        assert report.slopes == {}

    def test_requires_sorted_ns_and_min_repeats(self):
        with pytest.raises(ValueError):
            timing_benchmark([200, 100], repeats=5, base_seed=1)
        with pytest.raises(ValueError):
            timing_benchmark([100], repeats=2, base_seed=1)

    def test_structure_and_determinism_of_estimates(self):
        a = timing_benchmark([80, 160], repeats=3, base_seed=42)
        b = timing_benchmark([80, 160], repeats=3, base_seed=42)
        assert [r.__dict__ for r in a.rows] == [r.__dict__ for r in b.rows]
        assert set(a.medians["pl"]) == {80, 160}
        assert set(a.medians["fl"]) == {80, 160}
        assert all(t > 0 for ts in a.times["pl"].values() for t in ts)
        assert len(a.times["pl"][80]) == 3
        assert "pl" in a.slopes and "fl" in a.slopes

    def test_fl_cap_excludes_large_n(self):
        report = timing_benchmark([80, 160], repeats=3, base_seed=7,
                                  fl_max_n=100)
        assert set(report.medians["fl"]) == {80}
        assert report.rows[1].fl_beta is None


def test_relative_bias_undefined_at_zero_truth():
    from pairlik.errors import RBUndefined
    from pairlik.experiments import relative_bias

    with pytest.raises(RBUndefined):
        relative_bias(0.1, 0.0)
    assert relative_bias(0.05, 2.0) == pytest.approx(0.025)


def test_fl_time_budget_skips_later_reps():
    mc = small_mc(reps=3, fl_time_budget_s=1e-9)  # first FL always "too slow"
    report = run_montecarlo(mc)
    row = report.rows[0]
    assert row.fl_used == 1  # only the rep that revealed the overrun ran FL
    assert "budget" in row.fl_skip_reason
    reps = report.details["phi=1,n=120,radius=mean"]
    assert reps[0].fl_beta is not None
    assert all(r.fl_beta is None for r in reps[1:])
