import math
import time

import numpy as np
import pytest

from slopepath import (
    EngineState,
    GroupStructure,
    PathOptions,
    ProblemInstance,
    WeightRay,
    check_optimality,
    eval_path,
    grouped_design,
    run_path,
    segment_solution,
    solve_slope,
    structure_from_beta,
    validate_ray,
)
from slopepath.datagen import ScenarioSpec, generate
from slopepath.engine import next_fuse_times, next_split_times, next_switch_times
from slopepath.errors import IterationCapError


def make_state(instance, ray, options=None):
    gram = instance.X.T @ instance.X + instance.ridge * np.eye(instance.p)
    beta0 = np.linalg.solve(gram, instance.X.T @ instance.y)
    return EngineState(instance, ray, beta0, options or PathOptions())


def fused_t2_structure():
    """Both coordinates fused at value 1 with positive signs."""
    return GroupStructure(
        order=np.array([1, 0]),
        offsets=np.array([0, 2]),
        levels=np.array([1.0]),
        signs=np.array([-1.0, -1.0]),
    )


class TestGroupedDesign:
    def test_fused_pair_sums_columns(self, t2_instance):
        XG = grouped_design(fused_t2_structure(), t2_instance.X)
        assert XG == pytest.approx(np.array([[1.0], [1.0]]))

    def test_negative_sign_flips_column(self):
        X = np.array([[2.0, 0.0], [0.0, 3.0]])
        structure = GroupStructure(
            order=np.array([0, 1]),
            offsets=np.array([1, 2]),  # coordinate 0 zeroed, group {1}
            levels=np.array([0.7]),
            signs=np.array([1.0, 1.0]),  # beta_1 < 0
        )
        XG = grouped_design(structure, X)
        assert XG == pytest.approx(np.array([[0.0], [-3.0]]))

    def test_zero_group_contributes_nothing(self, t2_instance):
        structure = GroupStructure(
            order=np.array([0, 1]),
            offsets=np.array([2]),
            levels=np.zeros(0),
            signs=np.array([1.0, 1.0]),
        )
        XG = grouped_design(structure, t2_instance.X)
        assert XG.shape == (2, 0)


class TestSegmentSolution:
    def test_t2_separate_groups(self, t2_instance, t2_ray):
        structure = GroupStructure(
            order=np.array([1, 0]),
            offsets=np.array([0, 1, 2]),
            levels=np.array([1.0, 3.0]),
            signs=np.array([-1.0, -1.0]),
        )
        for eta in (0.0, 0.5, 1.9):
            levels, slope = segment_solution(structure, t2_instance, t2_ray, eta)
            assert levels == pytest.approx([1.0, 3.0 - eta])
            assert slope == pytest.approx([0.0, -1.0])

    def test_t2_fused_group(self, t2_instance, t2_ray):
        for eta in (2.0, 3.0):
            levels, slope = segment_solution(fused_t2_structure(), t2_instance,
                                             t2_ray, eta)
            assert levels == pytest.approx([(4.0 - eta) / 2.0])
            assert slope == pytest.approx([-0.5])

    def test_zero_direction_sum_means_flat(self, t2_instance):
        # a direction whose grouped sum vanishes leaves the value constant
        ray = WeightRay(np.zeros(2), np.array([0.0, 1.0]))
        structure = fused_t2_structure()
        _, slope = segment_solution(
            structure, t2_instance,
            WeightRay(np.zeros(2), np.array([-1.0, 1.0]), 5.0), 0.5)
        assert slope == pytest.approx([0.0])
        del ray


class TestEventTimings:
    def test_t2_fuse_times_at_start(self, t2_instance, t2_ray):
        state = make_state(t2_instance, t2_ray)
        dt = next_fuse_times(state)
        assert math.isinf(dt[0])  # lower group has zero slope, never dies first
        assert dt[1] == pytest.approx(2.0, abs=1e-12)

    def test_t2_death_after_fuse(self, t2_instance, t2_ray):
        path = run_path(t2_instance, t2_ray)
        fuse_etas = [e.eta for e in path.events if e.kind == "fuse"]
        assert fuse_etas == pytest.approx([2.0, 4.0], abs=1e-12)

    def test_parallel_trajectories_never_fuse(self):
        # orthogonal columns with equal weights: equal slopes, no fuse
        inst = ProblemInstance(y=np.array([3.0, 1.0]), X=np.eye(2))
        ray = validate_ray(np.zeros(2), np.array([1.0, 1.0]))
        state = make_state(inst, ray)
        dt = next_fuse_times(state)
        assert math.isinf(dt[1])  # equal slopes keep the gap constant
        assert dt[0] == pytest.approx(1.0)  # lower value heads to zero

    def test_t2_split_times_all_infinite(self, t2_instance, t2_ray):
        state = make_state(t2_instance, t2_ray)
        assert next_split_times(state) == {}

    def test_t2_switch_times_all_infinite(self, t2_instance, t2_ray):
        state = make_state(t2_instance, t2_ray)
        order_times, sign_time = next_switch_times(state)
        assert order_times == {}
        assert math.isinf(sign_time)

    def test_descending_direction_splits_fused_pair(self, t2_instance):
        # start fused under lam0 = (0, 3); the direction (0, -1) relaxes the
        # top weight until the pair separates at eta = 1
        ray = validate_ray(np.array([0.0, 3.0]), np.array([0.0, -1.0]))
        path = run_path(t2_instance, ray)
        splits = [e for e in path.events if e.kind == "split"]
        assert len(splits) == 1
        assert splits[0].eta == pytest.approx(1.0, abs=1e-8)
        assert (splits[0].g, splits[0].k) == (1, 2)
        # oracle re-solve just past the event confirms the separation
        for eta in (splits[0].eta - 1e-4, splits[0].eta + 1e-4):
            res = solve_slope(t2_instance, ray.at(eta))
            assert np.max(np.abs(eval_path(path, eta) - res.beta)) < 1e-7

    def test_boundary_margin_splits_immediately(self, t2_instance):
        # lam0 = (0, 2) puts the fused pair exactly on the inequality
        # boundary with a shrinking margin: the split fires at eta = 0
        ray = validate_ray(np.array([0.0, 2.0]), np.array([0.0, -1.0]))
        path = run_path(t2_instance, ray)
        splits = [e for e in path.events if e.kind == "split"]
        assert splits and splits[0].eta == pytest.approx(0.0, abs=1e-9)

    def test_duplicate_columns_never_switch(self):
        X = np.array([[1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
        inst = ProblemInstance(y=np.array([2.0, 0.0, 2.0]), X=X, ridge=1e-4)
        ray = validate_ray(np.zeros(2), np.array([0.5, 1.0]))
        path = run_path(inst, ray)
        assert all(e.kind != "switch_order" for e in path.events)


class TestApplyEvents:
    def test_t2_fuse_updates_structure(self, t2_instance, t2_ray):
        state = make_state(t2_instance, t2_ray)
        state.advance(2.0)
        state.n_events += 1
        state.apply_fuse(1)
        assert state.n_groups == 1
        assert state.levels == pytest.approx([1.0])
        assert state.slopeG == pytest.approx([-0.5])
        assert state.A == pytest.approx(np.array([[2.0]]))
        assert state.scratch_check() < 1e-12

    def test_switch_leaves_slope_and_fuse_times_untouched(self):
        state = _state_with_pending_switch()
        t, kind, idx = state.next_event()
        assert kind == "switch_order"
        slope_before = state.slopeG.copy()
        fuse_before = state.fuse_t.copy()
        state.advance(t)
        state.apply_switch(idx)
        assert np.array_equal(state.slopeG, slope_before)
        assert np.array_equal(state.fuse_t, fuse_before)

    def test_terminal_structure_after_total_death(self, t2_instance, t2_ray):
        path = run_path(t2_instance, t2_ray)
        terminal = path.events[-1]
        assert terminal.kind == "terminate"
        assert terminal.nnz == 0 and terminal.n_groups == 0


def _state_with_pending_switch(max_seed=200):
    """Search small instances for a state whose next event is a switch."""
    rng_master = np.random.default_rng(0)
    for seed in range(max_seed):
        rng = np.random.default_rng(seed)
        p = 4
        n = 12
        X = rng.standard_normal((n, p)) / np.sqrt(n)
        y = X @ (2 * rng.standard_normal(p)) + rng.standard_normal(n)
        inst = ProblemInstance(y=y, X=X)
        ray = validate_ray(np.zeros(p), np.sort(rng.uniform(0.2, 1.0, p)))
        state = make_state(inst, ray)
        for _ in range(60):
            t, kind, idx = state.next_event()
            if math.isinf(t):
                break
            if kind == "switch_order":
                return state
            state.advance(t)
            state.n_events += 1
            if kind == "fuse":
                state.apply_fuse(idx)
            elif kind == "split":
                state.apply_split(idx)
            else:
                state.apply_sign_switch()
    del rng_master
    raise RuntimeError("no switch event found in the search budget")


class TestRunPath:
    def test_orthonormal_design_first_event_matches_sorted_response(self):
        # diagonal Gram: group i has level |y_i| and slope -lam_bar at its
        # rank, so the first event time has a closed form
        y = np.array([0.8, -2.5, 1.6, 3.1])
        inst = ProblemInstance(y=y, X=np.eye(4))
        from slopepath import qs_sequence
        lam_bar = qs_sequence(4)
        ray = validate_ray(np.zeros(4), lam_bar)
        order = np.argsort(np.abs(y))
        levels = np.abs(y)[order]
        slopes = -lam_bar
        death = levels[0] / lam_bar[0]
        gaps = np.diff(levels)
        closing = slopes[:-1] - slopes[1:]
        with np.errstate(divide="ignore"):
            collide = np.where(closing > 0, gaps / np.where(closing > 0, closing, 1.0),
                               np.inf)
        expected_first = min(death, float(np.min(collide)))
        path = run_path(inst, ray)
        first = next(iter(path.breakpoints()))
        assert first.eta == pytest.approx(expected_first, rel=1e-12)

    def test_finite_eta_max_without_events(self, t2_instance):
        ray = WeightRay(np.zeros(2), np.array([0.0, 1.0]), eta_max=1.0)
        path = run_path(t2_instance, ray)
        assert len(path.segments) == 1
        seg = path.segments[0]
        assert (seg.eta_start, seg.eta_end) == (0.0, 1.0)
        assert seg.ending_event.kind == "terminate"
        assert seg.ending_event.eta == 1.0

    def test_eta_max_clipped_to_ray_validity(self, t2_instance):
        # the ray itself turns invalid at eta = 2; the path must stop there
        ray = WeightRay(np.array([0.0, 2.0]), np.array([0.0, -1.0]), math.inf)
        path = run_path(t2_instance, ray)
        assert path.segments[-1].eta_end == pytest.approx(2.0)

    def test_iteration_cap_raises(self, t2_instance, t2_ray):
        with pytest.raises(IterationCapError):
            run_path(t2_instance, t2_ray, PathOptions(iteration_cap=1))

    def test_kkt_on_segment_midpoints(self):
        rng = np.random.default_rng(77)
        inst, _ = generate(ScenarioSpec(scenario=2, p=6, n=20, seed=5))
        from slopepath import bh_sequence
        ray = validate_ray(np.zeros(6), bh_sequence(6, 0.15))
        path = run_path(inst, ray)
        for seg in path.segments:
            mid = 0.5 * (seg.eta_start + seg.eta_end) if math.isfinite(seg.eta_end) \
                else seg.eta_start + 1.0
            beta = eval_path(path, mid)
            lam = ray.at(mid)
            report = check_optimality(beta, inst.gradient(beta), lam,
                                      tol_eq=1e-7 * (1 + lam.max()),
                                      tol_ineq=1e-7 * (1 + lam.max()))
            assert report.optimal
        del rng

    def test_sign_switches_mark_gradient_roots(self):
        # at each sign switch some zeroed coordinate's gradient crosses zero;
        # a bisection on the affine gradient recovers the same eta
        found = 0
        for seed in range(40):
            inst, _ = generate(ScenarioSpec(scenario=2, p=5, n=15, seed=seed))
            from slopepath import bh_sequence
            ray = validate_ray(np.zeros(5), bh_sequence(5, 0.2))
            path = run_path(inst, ray)
            signs = [e for e in path.events if e.kind == "switch_sign"]
            for event in signs:
                eta_star = event.eta
                beta = eval_path(path, eta_star)
                grads = inst.gradient(beta)
                zeroed = np.abs(beta) < 1e-12
                assert zeroed.any()
                best = np.min(np.abs(grads[zeroed]))
                scale = 1.0 + float(np.max(np.abs(grads)))
                assert best <= 1e-8 * scale
                found += 1
            if found >= 3:
                return
        pytest.fail("no sign-switch events found across the seed sweep")

    def test_incremental_inverse_matches_scratch(self):
        inst, _ = generate(ScenarioSpec(scenario=1, p=12, n=80, seed=9))
        from slopepath import qs_sequence
        ray = validate_ray(np.zeros(12), qs_sequence(12))
        path = run_path(inst, ray, PathOptions(validate_every=10))
        checks = path.provenance["diagnostics"]["gram_checks"]
        assert checks, "expected at least one scratch comparison"
        assert max(err for _, err in checks) <= 1e-8

    def test_ridge_path_matches_solver(self):
        rng = np.random.default_rng(10)
        X = np.column_stack([rng.standard_normal(15)] * 2) \
            + 0.05 * rng.standard_normal((15, 2))
        y = rng.standard_normal(15)
        inst = ProblemInstance(y=y, X=X, ridge=0.05)
        from slopepath import qs_sequence
        ray = validate_ray(np.zeros(2), qs_sequence(2))
        path = run_path(inst, ray)
        eta_last = max((e.eta for e in path.breakpoints()), default=1.0)
        for eta in rng.uniform(0, eta_last * 1.1, size=8):
            res = solve_slope(inst, ray.at(eta))
            assert np.max(np.abs(eval_path(path, eta) - res.beta)) \
                <= 1e-6 * (1 + np.max(np.abs(res.beta)))

    def test_nonzero_lam0_start(self, t2_instance):
        # starting weights (0, 3) give the fused point (1, 1) via the solver
        ray = validate_ray(np.array([0.0, 3.0]), np.array([0.0, 1.0]))
        path = run_path(t2_instance, ray)
        assert eval_path(path, 0.0) == pytest.approx([0.5, 0.5], abs=1e-7)
        # fused value (4 - (3 + eta)) / 2 shrinks to zero at eta = 1
        deaths = [e for e in path.events if e.kind == "fuse" and e.g == 0]
        assert deaths and deaths[0].eta == pytest.approx(1.0, abs=1e-7)

    def test_event_local_consistency(self):
        """Colliding values agree at each fuse; the optimality conditions
        hold (boundary-tight) right at each event point."""
        inst, _ = generate(ScenarioSpec(scenario=1, p=8, n=40, seed=21))
        from slopepath import bh_sequence
        ray = validate_ray(np.zeros(8), bh_sequence(8, 0.1))
        state = make_state(inst, ray)
        events = 0
        while events < 120:
            t, kind, idx = state.next_event()
            if math.isinf(t):
                break
            if kind == "fuse" and idx > 0:
                gap_now = (state.levels[idx] - state.levels[idx - 1]
                           + (t - state.eta) * (state.slopeG[idx] - state.slopeG[idx - 1]))
                assert abs(gap_now) <= 1e-9 * (1.0 + state.levels[idx])
            state.advance(t)
            state.n_events += 1
            events += 1
            if kind == "fuse":
                state.apply_fuse(idx)
            elif kind == "split":
                state.apply_split(idx)
            elif kind == "switch_order":
                state.apply_switch(idx)
            else:
                state.apply_sign_switch()
            beta = state.scatter_beta()
            lam = ray.at(state.eta)
            tol = 1e-7 * (1.0 + lam.max())
            report = check_optimality(beta, inst.gradient(beta), lam,
                                      tol_eq=tol, tol_ineq=tol)
            assert report.optimal, f"{kind} at eta={t}: {report.worst_violation}"
        assert events >= 20

    def test_affine_design_parameterizations_agree(self, t2_instance):
        # constant-offset start with slope-only direction versus the pure
        # ray through the origin: both pass through the weights (1, 2)
        ray_a = validate_ray(np.ones(2), np.array([0.0, 1.0]))
        ray_b = validate_ray(np.zeros(2), np.array([1.0, 2.0]))
        path_a = run_path(t2_instance, ray_a)
        path_b = run_path(t2_instance, ray_b)
        assert np.array_equal(ray_a.at(1.0), ray_b.at(1.0))
        assert eval_path(path_a, 1.0) == pytest.approx(
            np.asarray(eval_path(path_b, 1.0)), abs=1e-7)


class TestStructureFromBeta:
    def test_reads_groups_and_signs(self):
        beta = np.array([2.0, -2.0, 0.0, 0.5])
        gradient = np.array([0.1, 0.2, -0.3, 0.4])
        order, offsets, levels, s = structure_from_beta(beta, gradient, tol=1e-9)
        assert offsets.tolist() == [1, 2, 4]
        assert order.tolist() == [2, 3, 0, 1] or order.tolist() == [2, 3, 1, 0]
        assert levels == pytest.approx([0.5, 2.0])
        assert s[0] == -1.0 and s[1] == 1.0 and s[3] == -1.0
        assert s[2] == -1.0  # sign of the (negative) gradient

    def test_all_zero(self):
        order, offsets, levels, s = structure_from_beta(
            np.zeros(3), np.array([0.5, -0.1, 0.2]), tol=1e-9)
        assert offsets.tolist() == [3]
        assert levels.size == 0
        assert order.tolist() == [1, 2, 0]


class TestSwitchCost:
    def test_switch_handling_does_not_grow_with_dimension(self):
        """Per-switch work depends on the group sizes, not on p."""
        medians = {}
        for p in (40, 80, 160):
            inst, _ = generate(ScenarioSpec(scenario=2, p=p, n=200, seed=1))
            from slopepath import qs_sequence
            ray = validate_ray(np.zeros(p), qs_sequence(p))
            state = make_state(inst, ray)
            times = []
            while len(times) < 400:
                t, kind, idx = state.next_event()
                if math.isinf(t):
                    break
                state.advance(t)
                state.n_events += 1
                if kind == "fuse":
                    state.apply_fuse(idx)
                elif kind == "split":
                    state.apply_split(idx)
                elif kind == "switch_order":
                    tic = time.perf_counter()
                    state.apply_switch(idx)
                    times.append(time.perf_counter() - tic)
                else:
                    state.apply_sign_switch()
            assert len(times) >= 30, f"too few switches at p={p}"
            medians[p] = float(np.median(times))
        assert medians[160] <= 3.0 * medians[40] + 1e-4
