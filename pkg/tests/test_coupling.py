import numpy as np
import pytest

from pairlik.coupling import (RadiusSpec, filter_separated, pair_points,
                              pairing_report, resolve_radius)
from pairlik.errors import InsufficientPoints, InvalidRadius
from pairlik.spatial import PointSet, distance_summary

from helpers import brute_greedy_pairs, uniform_points


def collinear(*xs):
    return PointSet([[float(x), 0.0] for x in xs])


class TestRadiusSpec:
    def test_parse_grammar(self):
        assert RadiusSpec.parse("mean") == RadiusSpec.mean()
        assert RadiusSpec.parse("max") == RadiusSpec.max()
        assert RadiusSpec.parse("mean+200") == RadiusSpec.mean_plus(200.0)
        assert RadiusSpec.parse("412.5") == RadiusSpec.fixed(412.5)

    def test_labels_round_trip(self):
        for text in ["mean", "max", "mean+50", "812.4"]:
            assert RadiusSpec.parse(RadiusSpec.parse(text).label()) == \
                RadiusSpec.parse(text)

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            RadiusSpec.mean_plus(-1.0)
        with pytest.raises(ValueError):
            RadiusSpec.fixed(0.0)
        with pytest.raises(ValueError):
            RadiusSpec.parse("0")


class TestResolveRadius:
    def test_mean_is_identity_on_r_mean(self):
        pts = collinear(0, 4)  # single pair, r_mean = 4
        assert resolve_radius(pts, RadiusSpec.mean()) == 4.0

    def test_buffer_adds_to_mean(self):
        pts = collinear(0, 612.4)
        assert resolve_radius(pts, RadiusSpec.mean_plus(200.0)) == \
            pytest.approx(812.4)

    def test_max_on_collinear_points(self):
        assert resolve_radius(collinear(0, 1, 3), RadiusSpec.max()) == \
            pytest.approx(3.0)

    def test_fixed_passthrough(self):
        assert resolve_radius(collinear(0, 1), RadiusSpec.fixed(7.0)) == 7.0

    def test_needs_two_points(self):
        with pytest.raises(InsufficientPoints):
            resolve_radius(PointSet([[0.0, 0.0]]), RadiusSpec.mean())

    def test_degenerate_radius_rejected(self):
        pts = PointSet([[1.0, 1.0], [1.0, 1.0]])  # coincident: r_mean = 0
        with pytest.raises(InvalidRadius):
            resolve_radius(pts, RadiusSpec.mean())


class TestPairPoints:
    def test_two_points_in_radius(self):
        cs = pair_points(collinear(0, 1), radius=1.5)
        assert cs.q == 1
        assert cs.couplets[0][:2] == (0, 1)
        assert cs.unpaired == frozenset()

    def test_two_points_out_of_radius(self):
        cs = pair_points(collinear(0, 10), radius=2.0)
        assert cs.q == 0
        assert cs.unpaired == {0, 1}

    def test_six_collinear_points_hand_trace(self):
        cs = pair_points(collinear(0, 1, 2, 3, 4, 5), radius=1.5)
        assert [(c.i, c.l) for c in cs.couplets] == [(0, 1), (2, 3), (4, 5)]
        assert cs.q == 3

    def test_straggler_stays_unpaired(self):
        cs = pair_points(collinear(0, 1, 10), radius=2.0)
        assert [(c.i, c.l) for c in cs.couplets] == [(0, 1)]
        assert cs.unpaired == {2}
        assert cs.q == 1

    def test_needs_two_points(self):
        with pytest.raises(InsufficientPoints):
            pair_points(PointSet([[0.0, 0.0]]), radius=1.0)

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(InvalidRadius):
            pair_points(collinear(0, 1), radius=0.0)

    def test_sparse_distances_symmetric_one_entry_per_couplet(self):
        pts = PointSet(uniform_points(60, 2))
        cs = pair_points(pts, radius=resolve_radius(pts, RadiusSpec.mean()))
        sd = cs.sparse_distances
        assert len(sd) == 2 * cs.q
        for c in cs.couplets:
            assert sd[(c.i, c.l)] == sd[(c.l, c.i)] == c.dist

    def test_couplet_distances_match_geometry(self):
        pts = PointSet(uniform_points(80, 3))
        cs = pair_points(pts, radius=120.0)
        for c in cs.couplets:
            d = np.sqrt(((pts.coords[c.i] - pts.coords[c.l]) ** 2).sum())
            assert c.dist == pytest.approx(d, abs=1e-12)
            assert c.dist <= 120.0
            assert c.i != c.l

    def test_matches_brute_force_oracle(self):
        # identical couplet lists against the O(n^2) greedy reference
        for seed in range(25):
            rng = np.random.default_rng(seed)
            n = int(rng.integers(10, 300))
            coords = uniform_points(n, seed + 1000)
            pts = PointSet(coords)
            r_mean = distance_summary(pts).r_mean
            for factor in (0.2, 1.0, 5.0):
                radius = factor * r_mean
                cs = pair_points(pts, radius)
                want = brute_greedy_pairs(coords, radius)
                got = [(c.i, c.l, c.dist) for c in cs.couplets]
                assert got == want

    def test_custom_order_changes_outcome_deterministically(self):
        coords = uniform_points(100, 8)
        pts = PointSet(coords)
        order = np.random.default_rng(5).permutation(100)
        cs1 = pair_points(pts, radius=80.0, order=order)
        cs2 = pair_points(pts, radius=80.0, order=order)
        assert [(c.i, c.l) for c in cs1.couplets] == \
            [(c.i, c.l) for c in cs2.couplets]
        want = brute_greedy_pairs(coords, 80.0, order=order.tolist())
        assert [(c.i, c.l, c.dist) for c in cs1.couplets] == want

    def test_disjointness_and_feasibility_fuzz(self):
        # across many random instances no index repeats and all couplet
        # distances respect the radius
        rng = np.random.default_rng(99)
        for trial in range(300):
            n = int(rng.integers(10, 500))
            pts = PointSet(uniform_points(n, int(rng.integers(1 << 30))))
            r_mean = distance_summary(pts).r_mean
            radius = float(rng.choice([0.2, 1.0, 5.0])) * r_mean
            cs = pair_points(pts, radius)
            members = np.concatenate([cs.i_idx, cs.l_idx])
            assert len(set(members.tolist())) == 2 * cs.q
            assert np.all(cs.dists <= radius)
            assert cs.paired | cs.unpaired == frozenset(range(n))
            assert not (cs.paired & cs.unpaired)

    def test_pairing_count_monotone_in_radius(self):
        rng = np.random.default_rng(123)
        for trial in range(40):
            n = int(rng.integers(10, 200))
            pts = PointSet(uniform_points(n, trial))
            r_mean = distance_summary(pts).r_mean
            qs = [pair_points(pts, f * r_mean).q
                  for f in (0.05, 0.2, 0.5, 1.0, 5.0)]
            assert qs == sorted(qs)

    def test_partner_optimality(self):
        # replay the scan: when (p, c) was formed, no unpaired point in
        # radius was strictly closer to p than c
        coords = uniform_points(150, 44)
        pts = PointSet(coords)
        radius = 0.5 * distance_summary(pts).r_mean
        cs = pair_points(pts, radius)
        emitted = {c.i: c for c in cs.couplets}
        paired = set()
        d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1)
        for p in range(150):
            if p in paired or p not in emitted:
                continue
            c = emitted[p]
            for other in range(150):
                if other in paired or other in (p, c.l):
                    continue
                if d2[p, other] <= radius * radius:
                    assert d2[p, other] >= c.dist ** 2
            paired.add(p)
            paired.add(c.l)


class TestSeparationFilter:
    def test_filter_drops_adjacent_couplets(self):
        # two tight couplets 5 units apart: the second one is discarded
        pts = PointSet([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0], [6.0, 0.0]])
        cs = pair_points(pts, radius=2.0)
        assert cs.q == 2
        filtered = filter_separated(pts, cs, min_separation=10.0)
        assert filtered.q == 1
        assert (filtered.i_idx[0], filtered.l_idx[0]) == (0, 1)

    def test_filter_keeps_separated_couplets(self):
        pts = PointSet([[0.0, 0.0], [1.0, 0.0], [500.0, 0.0], [501.0, 0.0]])
        cs = pair_points(pts, radius=2.0)
        filtered = filter_separated(pts, cs, min_separation=10.0)
        assert filtered.q == 2

    def test_pair_points_flag(self):
        pts = PointSet([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0], [6.0, 0.0]])
        cs = pair_points(pts, radius=2.0, min_separation=10.0)
        assert cs.q == 1


class TestPairingReport:
    def test_empty_couplet_set(self):
        cs = pair_points(collinear(0, 10), radius=1.0)
        rep = pairing_report(cs)
        assert rep.q == 0
        assert rep.pairing_rate == 0.0
        assert rep.mean_dist is None and rep.max_dist is None
        assert rep.unpaired_count == 2

    def test_six_point_example(self):
        cs = pair_points(collinear(0, 1, 2, 3, 4, 5), radius=1.5)
        rep = pairing_report(cs)
        assert rep.pairing_rate == 1.0
        assert rep.mean_dist == 1.0
        assert rep.max_dist == 1.0

    def test_high_pairing_rate_at_mean_radius(self):
        pts = PointSet(uniform_points(800, 77))
        cs = pair_points(pts, resolve_radius(pts, RadiusSpec.mean()))
        assert pairing_report(cs).pairing_rate >= 0.95


def test_pair_points_thread_safe_on_distinct_inputs():
    from concurrent.futures import ThreadPoolExecutor

    inputs = [PointSet(uniform_points(150, seed)) for seed in range(12)]
    sequential = [pair_points(p, radius=100.0).couplets for p in inputs]
    with ThreadPoolExecutor(max_workers=6) as pool:
        threaded = list(pool.map(lambda p: pair_points(p, radius=100.0).couplets,
                                 inputs))
    assert threaded == sequential


def test_integer_grid_exact_ties_match_oracle():
    # integer grids maximize exact distance ties; radii sit exactly on
    # attainable distances so the inclusive boundary is exercised too
    rng = np.random.default_rng(777)
    for trial in range(15):
        w, h = int(rng.integers(3, 9)), int(rng.integers(3, 9))
        coords = np.array([[float(i), float(j)]
                           for i in range(w) for j in range(h)])
        coords = coords[rng.permutation(len(coords))]
        pts = PointSet(coords)
        for radius in (1.0, float(np.sqrt(2.0)), 2.0):
            got = [(c.i, c.l, c.dist) for c in pair_points(pts, radius).couplets]
            assert got == brute_greedy_pairs(coords, radius)
