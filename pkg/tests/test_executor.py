import numpy as np
import pytest
from hypothesis import given, settings

from hnc.clustering import INTERIOR, hc_2means, stratum_contains
from hnc.configuration import Configuration, min_clearance
from hnc.executor import (HybridState, IntegrationError, Mode, diameter, run_hnc, step,
                          transition_budget)
from hnc.field import FieldParams
from hnc.hierarchy import Tree, nni_adjacent, parse_newick
from hnc.scenarios import Scenario, four_disk_line, line_order, six_disk_row_swap, two_disk_swap

from conftest import line, seeds

PAIR = Tree((1, 2))


def pair_state(x, y, r=0.0):
    p = FieldParams(line(*y, radius=r), PAIR)
    return HybridState(0.0, line(*x).positions, PAIR, p.goal.positions, Mode.GOAL_STRATUM, p)


def test_step_fixed_point_at_goal():
    s = pair_state([0, 10], [0, 10])
    out = step(s, 5e-3)
    assert np.array_equal(out.x, s.x) and out.t == 5e-3


def test_step_matches_exponential_decay():
    # Far apart and aligned, the field is -(x - y), so one step scales the error by ~e^-dt.
    s = pair_state([1, 12], [0, 10])
    dt = 1e-3
    out = step(s, dt)
    assert np.allclose(out.x - s.params.goal.positions, np.exp(-dt) * (s.x - s.params.goal.positions),
                       atol=1e-6)


def test_error_monotone_under_attraction():
    s = pair_state([2, 14], [0, 10])
    y = s.params.goal.positions
    prev = np.linalg.norm(s.x - y)
    for _ in range(200):
        s = step(s, 5e-3)
        err = np.linalg.norm(s.x - y)
        assert err < prev
        prev = err


def test_huge_step_raises():
    sc = two_disk_swap()
    p = FieldParams(sc.goal, PAIR)
    s = HybridState(0.0, sc.initial.positions, PAIR, p.goal.positions, Mode.GOAL_STRATUM, p)
    assert step(s, 1e-3).t == 1e-3
    with pytest.raises(IntegrationError, match="overlap"):
        step(s, 1.0)


def test_transition_budget():
    assert [transition_budget(n) for n in (1, 2, 3, 4, 6)] == [1, 1, 2, 4, 11]


def test_start_at_goal_single_controller():
    sc = four_disk_line()
    sc = Scenario(sc.goal, sc.goal)
    res = run_hnc(sc)
    assert res.reached and res.stats.deployed_trees == 1 and res.stats.transitions == 0
    assert res.stats.steps == 0
    assert [e.kind for e in res.events] == ["start", "entered_goal_stratum", "goal_reached"]


def test_near_goal_single_controller():
    sc = four_disk_line()
    start = Configuration(sc.goal.positions + 0.05, sc.goal.radii)
    res = run_hnc(Scenario(start, sc.goal))
    assert res.reached and res.stats.deployed_trees == 1
    assert res.stats.final_error <= 1e-3 * diameter(sc.goal.positions)


def test_four_disk_benchmark():
    res = run_hnc(four_disk_line())
    assert res.reached
    assert res.stats.deployed_trees == 4
    assert res.stats.transitions <= transition_budget(4)
    assert res.stats.min_clearance > 0


def test_two_disk_swap():
    res = run_hnc(two_disk_swap())
    assert res.reached
    assert res.stats.transitions <= 1
    assert res.stats.min_clearance > 0


def test_exact_symmetric_swap_does_not_reach_goal():
    # On the invariant line the field never breaks the tie; the run ends without success.
    res = run_hnc(two_disk_swap(jitter=0.0, t_max=20.0))
    assert not res.reached
    assert res.status in ("timeout", "stall")


def test_runs_are_deterministic():
    a, b = run_hnc(four_disk_line()), run_hnc(four_disk_line())
    assert np.array_equal(a.trajectory, b.trajectory)
    assert [e.to_dict() for e in a.events] == [e.to_dict() for e in b.events]


def test_event_log_consistent():
    sc = four_disk_line()
    res = run_hnc(sc)
    ev = res.events
    assert ev[0].kind == "start" and ev[-1].kind == "goal_reached"
    assert ev[0].to_tree == hc_2means(sc.initial)
    times = [e.t for e in ev]
    assert times == sorted(times)
    index = {round(t / sc.dt): i for i, t in enumerate(res.times)}
    for e in ev:
        if e.kind == "tree_transition":
            assert nni_adjacent(e.from_tree, e.to_tree)
            x = res.trajectory[index[round(e.t / sc.dt)]]
            assert stratum_contains(x, e.to_tree, INTERIOR)
            d = e.to_dict()
            assert parse_newick(d["from_tree"]) == e.from_tree
            assert parse_newick(d["to_tree"]) == e.to_tree
    assert sum(e.kind == "tree_transition" for e in ev) == res.stats.transitions


def test_trajectory_is_collision_free():
    sc = four_disk_line()
    res = run_hnc(sc)
    gaps = [min_clearance(x, sc.initial.radii) for x in res.trajectory]
    assert min(gaps) > 0
    assert min(gaps) == pytest.approx(res.stats.min_clearance)
    assert res.times[0] == 0.0 and np.array_equal(res.trajectory[0], sc.initial.positions)


def test_stride_and_record():
    full = run_hnc(four_disk_line())
    sparse = run_hnc(four_disk_line(), stride=10)
    assert np.array_equal(sparse.trajectory[1:-1], full.trajectory[10:-1:10][: len(sparse.trajectory) - 2])
    assert np.array_equal(sparse.trajectory[-1], full.trajectory[-1])
    bare = run_hnc(four_disk_line(), record=False)
    assert bare.trajectory.shape[0] == 0 and bare.reached


def test_stall_path():
    # A huge stall threshold declares a stall once the field slows near the goal.
    sc = four_disk_line().replace(goal_tol=1e-12)
    res = run_hnc(sc, stall_speed=1e-2, stall_steps=50)
    assert res.status == "stall"
    assert res.events[-1].kind == "stall"


def test_perturb_kicks_once_then_stalls():
    sc = four_disk_line().replace(goal_tol=1e-12, perturb_seed=3)
    plain = run_hnc(sc.replace(perturb_seed=None), stall_speed=1e-2, stall_steps=50)
    kicked = run_hnc(sc, stall_speed=1e-2, stall_steps=50)
    assert kicked.status == "stall"
    assert kicked.stats.steps >= plain.stats.steps + 50


def test_timeout():
    res = run_hnc(four_disk_line(t_max=1.0))
    assert res.status == "timeout"
    assert res.times[-1] == pytest.approx(1.0 + 5e-3)


def test_integration_error_on_huge_dt():
    with pytest.raises(IntegrationError):
        run_hnc(six_disk_row_swap(), dt=1.0)


@settings(max_examples=15)
@given(seeds)
def test_random_permutations_reach_goal(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 6))
    perm = [int(v) + 1 for v in rng.permutation(n)]
    start = line_order(range(1, n + 1)) + rng.normal(scale=0.05, size=(n, 2))
    r = np.ones(n)
    sc = Scenario(Configuration(start, r), Configuration(line_order(perm), r))
    res = run_hnc(sc, record=False)
    assert res.reached
    assert res.stats.transitions <= transition_budget(n)
    assert res.stats.min_clearance > 0
