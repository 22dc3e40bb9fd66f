import numpy as np
import pytest

from concave_ot.costs import PiecewiseConcaveCost, PowerCost
from concave_ot.measures import DiscreteMeasure, three_segments, uniform_box
from concave_ot.solver import DualPotentials, TransportPlan, solve_exact
from concave_ot.structure import (
    decompose,
    detect_kink_events,
    extract_map,
    reconstruct_map_from_potential,
    translation_mass,
    verify_ccm,
    verify_stay_at_rest,
)
from support import lebesgue_grid_pair, overlapping_instance

P05 = PowerCost(0.5)


def limit_plan(n):
    """Half/half coupling of the segment source onto its two translates."""
    mu, _ = three_segments(n)
    pts = np.vstack([mu.points + [1.0, 0.0], mu.points + [-1.0, 0.0]])
    nu = DiscreteMeasure(pts, np.concatenate([mu.weights / 2, mu.weights / 2]))
    key_to_j = {row.tobytes(): j for j, row in enumerate(nu.points)}
    src, tgt, mass = [], [], []
    for i, x in enumerate(mu.points):
        for e in ((1.0, 0.0), (-1.0, 0.0)):
            src.append(i)
            tgt.append(key_to_j[(x + np.asarray(e)).tobytes()])
            mass.append(mu.weights[i] / 2)
    return TransportPlan(source=mu, target=nu, src_idx=src, tgt_idx=tgt, mass=mass).validate()


class TestDecompose:
    def test_identical_measures_all_diagonal(self):
        mu = uniform_box(25, 2, seed=0)
        plan, _, _ = solve_exact(mu, mu, P05)
        dec = decompose(plan)
        assert dec.off_diagonal.n_entries == 0
        assert dec.diagonal_mass == pytest.approx(1.0, abs=1e-12)
        assert dec.diag_source_marginal == mu

    def test_disjoint_supports_all_off(self):
        mu = uniform_box(10, 2, seed=1)
        nu = uniform_box(10, 2, seed=2)
        plan, _, _ = solve_exact(mu, nu, P05)
        dec = decompose(plan)
        assert dec.diagonal.n_entries == 0
        assert dec.off_diagonal_mass == pytest.approx(1.0, abs=1e-12)

    def test_mixed_instance_diag_mass(self):
        mu = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
        nu = DiscreteMeasure([[0.0], [2.0]], [0.3, 0.7])
        plan, _, _ = solve_exact(mu, nu, P05)
        dec = decompose(plan)
        assert dec.diagonal_mass == pytest.approx(0.3, abs=1e-12)
        assert dec.diag_source_marginal.points[0, 0] == 0.0

    def test_masses_partition(self):
        mu, nu = overlapping_instance(np.random.default_rng(3))
        plan, _, _ = solve_exact(mu, nu, P05)
        dec = decompose(plan)
        assert dec.diagonal_mass + dec.off_diagonal_mass == pytest.approx(
            plan.mass.sum(), abs=1e-12
        )


class TestStayAtRest:
    def test_identical_measures(self):
        mu = uniform_box(15, 2, seed=4)
        plan, _, _ = solve_exact(mu, mu, P05)
        rep = verify_stay_at_rest(mu, mu, plan)
        assert rep.ok and rep.diag_mass == pytest.approx(1.0)

    def test_lebesgue_grid_shift(self):
        mu, nu = lebesgue_grid_pair(100)
        plan, _, _ = solve_exact(mu, nu, P05)
        rep = verify_stay_at_rest(mu, nu, plan)
        assert rep.ok
        assert rep.diag_mass == pytest.approx(0.5, abs=1e-12)
        assert rep.meet_mass == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("seed", range(12))
    def test_random_overlapping_instances(self, seed):
        mu, nu = overlapping_instance(np.random.default_rng(seed))
        plan, _, _ = solve_exact(mu, nu, P05)
        rep = verify_stay_at_rest(mu, nu, plan, tol=1e-9)
        assert rep.diag_matches_meet, rep
        assert rep.off_marginals_singular, rep

    def test_detects_moved_common_mass(self):
        # a feasible but suboptimal plan that ships the shared atom away
        mu = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
        nu = DiscreteMeasure([[0.0], [2.0]], [0.5, 0.5])
        plan = TransportPlan(
            source=mu, target=nu, src_idx=[0, 1], tgt_idx=[1, 0], mass=[0.5, 0.5]
        ).validate()
        rep = verify_stay_at_rest(mu, nu, plan)
        assert not rep.diag_matches_meet
        assert not rep.off_marginals_singular  # atom 0 is both source and target


class TestCcm:
    def test_optimal_plan_clean(self):
        mu, nu = overlapping_instance(np.random.default_rng(7))
        plan, _, _ = solve_exact(mu, nu, P05)
        rep = verify_ccm(plan, P05, max_cycle_len=3)
        assert rep.ok
        assert rep.worst_violation <= 1e-9

    def test_swapped_pair_flagged(self):
        mu = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
        nu = DiscreteMeasure([[0.3], [1.5]], [0.5, 0.5])
        crossed = TransportPlan(
            source=mu, target=nu, src_idx=[0, 1], tgt_idx=[1, 0], mass=[0.5, 0.5]
        ).validate()
        rep = verify_ccm(crossed, P05)
        assert not rep.ok
        assert rep.worst_violation > 0.1
        entries, permuted = rep.violating_cycle
        assert sorted(entries) == [0, 1]

    def test_chain_through_middle_point_flagged(self):
        # a point acting as both target and source off the diagonal loses
        # to the direct connection under any strictly subadditive cost
        mu = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
        nu = DiscreteMeasure([[1.0], [2.0]], [0.5, 0.5])
        chain = TransportPlan(
            source=mu, target=nu, src_idx=[0, 1], tgt_idx=[0, 1], mass=[0.5, 0.5]
        ).validate()
        rep = verify_ccm(chain, P05)
        assert not rep.ok
        expected = 2.0 - 2.0**0.5  # f(1)+f(1) - (f(2)+f(0))
        assert rep.worst_violation == pytest.approx(expected, abs=1e-12)
        rest = verify_stay_at_rest(mu, nu, chain)
        assert not rest.off_marginals_singular

    def test_length3_exhaustive_counts(self):
        mu = uniform_box(12, 2, seed=8)
        nu = uniform_box(12, 2, seed=9)
        plan, _, _ = solve_exact(mu, nu, P05)
        rep = verify_ccm(plan, P05, max_cycle_len=3)
        s = plan.n_entries
        assert rep.cycles_checked == s * (s - 1) + 2 * (s * (s - 1) * (s - 2) // 6)

    def test_sampled_length3_on_large_support(self):
        mu = uniform_box(500, 2, seed=10)
        nu = uniform_box(500, 2, seed=11)
        plan, _, _ = solve_exact(mu, nu, P05)
        rep = verify_ccm(plan, P05, max_cycle_len=3, sample_size=20_000, seed=1)
        assert rep.ok

    def test_cycle_len_bounds(self):
        plan = limit_plan(1)
        with pytest.raises(ValueError):
            verify_ccm(plan, P05, max_cycle_len=5)


class TestExtractMap:
    def test_permutation_plan_no_splits(self):
        mu = uniform_box(30, 2, seed=12)
        nu = uniform_box(30, 2, seed=13)
        plan, _, _ = solve_exact(mu, nu, P05)
        ex = extract_map(decompose(plan))
        assert ex.split_fraction == 0.0
        assert len(ex.assigned_sources) == 30

    @pytest.mark.parametrize("n", [1, 2, 4, 8])
    def test_three_segments_assignment(self, n):
        mu, nu = three_segments(n)
        plan, _, _ = solve_exact(mu, nu, P05)
        ex = extract_map(decompose(plan))
        assert ex.split_fraction == 0.0
        assert len(ex.assigned_sources) == 2 * n

    def test_limit_plan_fully_split(self):
        plan = limit_plan(4)
        ex = extract_map(decompose(plan))
        assert ex.split_fraction == pytest.approx(1.0, abs=1e-12)
        assert len(ex.assigned_sources) == 0
        assert all(len(s.targets) == 2 for s in ex.splits)
        assert plan.transport_cost(P05) == pytest.approx(1.0, abs=1e-15)


class TestReconstruction:
    def test_affine_potential_exact(self):
        cloud = uniform_box(200, 2, seed=3)
        g = np.array([0.3, 0.1])
        gn = np.linalg.norm(g)
        r0 = P05.inv_deriv(gn)
        pots = DualPotentials(phi=cloud.points @ g, psi=np.zeros(1))
        res = reconstruct_map_from_potential(
            pots, cloud, DiscreteMeasure([[0.0, 0.0]], [1.0]), P05, k_neighbors=8
        )
        expected = cloud.points - r0 * g / gn
        np.testing.assert_allclose(res.y_pred, expected, atol=1e-10)
        assert res.gap_count == 0
        assert not res.out_of_range.any()

    def test_gap_uses_kink_radius(self):
        pw = PiecewiseConcaveCost([1.0], [2.0, 0.5])
        cloud = uniform_box(50, 2, seed=4)
        g = np.array([1.0, 0.0])  # magnitude 1.0 sits inside the slope gap
        pots = DualPotentials(phi=cloud.points @ g, psi=np.zeros(1))
        res = reconstruct_map_from_potential(
            pots, cloud, DiscreteMeasure([[0.0, 0.0]], [1.0]), pw, k_neighbors=8
        )
        assert res.gap_count == len(cloud)
        np.testing.assert_allclose(res.radii, 1.0, atol=1e-9)

    def test_out_of_range_flagged(self):
        from concave_ot.costs import LogShiftCost

        ls = LogShiftCost(0.5)  # slopes bounded by 0.5
        cloud = uniform_box(50, 2, seed=5)
        pots = DualPotentials(phi=cloud.points @ np.array([2.0, 0.0]), psi=np.zeros(1))
        res = reconstruct_map_from_potential(
            pots, cloud, DiscreteMeasure([[0.0, 0.0]], [1.0]), ls, k_neighbors=8
        )
        assert res.out_of_range.all()
        assert np.isnan(res.y_pred).all()

    def test_flat_potential_near_diagonal(self):
        cloud = uniform_box(30, 2, seed=6)
        pots = DualPotentials(phi=np.zeros(30), psi=np.zeros(1))
        res = reconstruct_map_from_potential(
            pots, cloud, DiscreteMeasure([[0.0, 0.0]], [1.0]), P05, k_neighbors=8
        )
        assert res.near_diagonal.all()
        np.testing.assert_array_equal(res.y_pred, cloud.points)

    def test_single_atom_rejected(self):
        tiny = DiscreteMeasure([[0.0, 0.0]], [1.0])
        pots = DualPotentials(phi=np.zeros(1), psi=np.zeros(1))
        with pytest.raises(ValueError, match="source atoms"):
            reconstruct_map_from_potential(pots, tiny, tiny, P05)

    def test_plan_diagnostics_on_separated_clouds(self):
        mu = uniform_box(400, 2, corner_lo=(0, 0), corner_hi=(1, 1), seed=7)
        nu = uniform_box(400, 2, corner_lo=(3, 3), corner_hi=(4, 4), seed=8)
        plan, pots, _ = solve_exact(mu, nu, P05)
        res = reconstruct_map_from_potential(pots, mu, nu, P05, k_neighbors=8, plan=plan)
        err = res.pred_error[~np.isnan(res.pred_error)]
        assert err.size == 400
        assert np.median(err) <= 0.1
        cos = res.direction_cosine[~np.isnan(res.direction_cosine)]
        assert (cos >= 0.9).mean() >= 0.9


class TestKinkEvents:
    def test_smooth_cost_no_events(self):
        mu = uniform_box(20, 2, seed=9)
        nu = uniform_box(20, 2, seed=10)
        plan, _, _ = solve_exact(mu, nu, P05)
        rep = detect_kink_events(plan, P05, tol=0.1)
        assert rep.count == 0 and rep.mass == 0.0

    def test_engineered_kink_pair_counted(self):
        pw = PiecewiseConcaveCost([1.0], [2.0, 0.5])
        mu = DiscreteMeasure([[0.0, 0.0], [5.0, 0.0]], [0.5, 0.5])
        nu = DiscreteMeasure([[1.0, 0.0], [8.0, 0.0]], [0.5, 0.5])
        plan = TransportPlan(
            source=mu, target=nu, src_idx=[0, 1], tgt_idx=[0, 1], mass=[0.5, 0.5]
        ).validate()
        rep = detect_kink_events(plan, pw, tol=1e-9)
        assert rep.count == 1 and rep.mass == pytest.approx(0.5)


class TestTranslationMass:
    def test_exact_translation_plan(self):
        mu = uniform_box(40, 2, seed=11)
        from concave_ot.measures import translate

        nu = translate(mu, [1.0, 0.0])
        order = {row.tobytes(): j for j, row in enumerate(nu.points)}
        tgt = [order[(x + np.array([1.0, 0.0])).tobytes()] for x in mu.points]
        plan = TransportPlan(
            source=mu, target=nu, src_idx=np.arange(40), tgt_idx=tgt, mass=mu.weights
        ).validate()
        assert translation_mass(plan, [1.0, 0.0]) == pytest.approx(1.0, abs=1e-12)
        assert translation_mass(plan, [0.0, 1.0]) == 0.0

    def test_zero_vector_rejected(self):
        plan = limit_plan(1)
        with pytest.raises(ValueError, match="diagonal"):
            translation_mass(plan, [0.0, 0.0])

    def test_limit_plan_half_each_way(self):
        plan = limit_plan(3)
        assert translation_mass(plan, [1.0, 0.0]) == pytest.approx(0.5, abs=1e-12)
        assert translation_mass(plan, [-1.0, 0.0]) == pytest.approx(0.5, abs=1e-12)

    def test_concave_optimum_sheds_translation_mass_with_n(self):
        from concave_ot.measures import translate

        e = [1.0, 0.0]
        masses = []
        for n in (200, 800):
            mu = uniform_box(n, 2, seed=14)
            plan, _, obj = solve_exact(mu, translate(mu, e), P05)
            assert obj < 1.0  # strictly cheaper than the translation
            masses.append(translation_mass(plan, e, tol=0.02))
        assert masses[0] < 1.0
        assert masses[1] <= masses[0]
