import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoop.abstraction import AbstractionConfig, generate_abstract_state
from hoop.belief import init_belief
from hoop.errors import IllegalAbstractAction
from hoop.navigation import NavCache
from hoop.planner import (
    DONE_ACTION, POUCT, AbstractAction, AbstractModel, PlannerConfig, enumerate_actions, plan, rollout,
)
from hoop.world import ReceptacleInfo

from conftest import walled
from oracles import exhaustive_q


def setup(grid, truth, goals, robot, heading=0, sizes=None, recs=()):
    nav = NavCache(grid)
    ids = sorted(truth)
    b = init_belief(grid, [(o, "Apple") for o in ids], goals, mode="delta", true_locations=truth,
                    agent_cell=robot, sizes=sizes)
    s = generate_abstract_state(b, nav, list(recs), robot, heading)
    return b, s, nav


def kinds(actions):
    return sorted(a.kind for a in actions)


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(simulations=0)
    with pytest.raises(ValueError):
        PlannerConfig(gamma=1.0)


def test_far_agent_gets_moves_and_done():
    grid = walled(30, 30)
    _, s, nav = setup(grid, {"a": (26, 3), "b": (26, 26)}, {"a": (3, 3), "b": (3, 26)}, (3, 14))
    acts = enumerate_actions(s, nav)
    assert kinds(acts) == ["Done", "Move", "Move"]
    assert {a.object_id for a in acts if a.kind == "Move"} == {"a", "b"}


def test_in_range_object_gets_pickplace_per_place_pair():
    recs = [ReceptacleInfo("T", c, 0) for c in [(2, 20), (20, 2), (20, 20), (12, 25)]]
    grid = walled(24, 28, receptacles=[(r.class_name, r.cell) for r in recs])
    _, s, nav = setup(grid, {"a": (5, 5)}, {"a": (15, 15)}, (5, 8), recs=recs)
    assert len(s.obj("a").place_locs) == 4
    acts = enumerate_actions(s, nav)
    assert sum(a.kind == "PickPlace" for a in acts) == 4
    assert DONE_ACTION in acts


def test_all_at_goal_plans_done():
    grid = walled(12, 12)
    b, s, nav = setup(grid, {"a": (3, 3), "b": (8, 8)}, {"a": (3, 3), "b": (8, 8)}, (5, 5))
    assert DONE_ACTION in enumerate_actions(s, nav)
    assert plan(b, s, PlannerConfig(simulations=200), nav) == DONE_ACTION


def test_rotate_only_toward_uncertain_objects():
    grid = walled(12, 12)
    _, s, nav = setup(grid, {"a": (5, 8)}, {"a": (2, 2)}, (5, 5), heading=0)
    assert "Rotate" not in kinds(enumerate_actions(s, nav))
    b = init_belief(grid, [("a", "Apple")], {"a": (2, 2)})
    cfg = AbstractionConfig(min_separation=2.0)
    states = [generate_abstract_state(b, nav, [], (5, 5), h, rng=np.random.default_rng(0), cfg=cfg) for h in (0, 90, 180, 270)]
    assert len(states[0].obj("a").candidates) > 1
    # from three of the four headings the believed cell lies off-axis
    assert sum("Rotate" in kinds(enumerate_actions(s, nav)) for s in states) >= 3


def test_transition_and_reward_examples():
    grid = walled(20, 20)
    b, s, nav = setup(grid, {"a": (2, 17)}, {"a": (17, 17)}, (2, 2), heading=90)
    m = AbstractModel(s, nav)
    st0 = m.root_state()
    move = next(a for a in m.enumerate(st0) if a.kind == "Move")
    nxt = m.transition(st0, move)
    assert nxt[0] == move.stand and nxt[2] == st0[2]
    # stand is straight east of the agent and faces east: cost is the path length only
    assert move.stand[0] == 2
    assert m.reward(st0, move) == -(move.stand[1] - 2)
    assert m.reward(st0, DONE_ACTION) == -50
    pp = next(a for a in m.enumerate(nxt) if a.kind == "PickPlace" and a.target == (17, 17))
    after = m.transition(nxt, pp)
    assert after[2][0] == (17, 17) and after[0] == pp.place_stand
    assert m.reward(after, DONE_ACTION) == 50
    r = m.reward(nxt, pp)
    assert r == -nav.distance(nxt[0], pp.place_stand) - 2 + 50
    with pytest.raises(IllegalAbstractAction):
        m.transition(st0, pp)


def test_seven_step_move_costs_seven():
    grid = walled(5, 20)
    _, s, nav = setup(grid, {"a": (2, 17)}, {"a": (2, 1)}, (2, 2), heading=90)
    m = AbstractModel(s, nav)
    st0 = m.root_state()
    a = AbstractAction("Move", "a", (2, 9), (2, 17))
    nxt, r, _ = m._transition(st0, a)
    assert r == -7 and nxt[0] == (2, 9)


def test_moving_blocker_unseals_object():
    walls = [(r, 9) for r in range(1, 9) if r not in (4, 5)]
    grid = walled(10, 19, walls=walls)
    truth = {"box": (4, 9), "o": (6, 15)}
    _, s, nav = setup(grid, truth, {"box": (4, 9), "o": (2, 3)}, (2, 3), sizes={"box": 2, "o": 1})
    m = AbstractModel(s, nav)
    st0 = m.root_state()
    assert not any(a.kind == "Move" and a.object_id == "o" for a in m.enumerate(st0))
    # the blocker is already within reach of the agent
    park = next(a for a in m.enumerate(st0) if a.kind == "PickPlace" and a.object_id == "box")
    assert park.target != (4, 9)
    st2 = m.transition(st0, park)
    assert any(a.kind == "Move" and a.object_id == "o" for a in m.enumerate(st2))


def test_one_object_first_action_matches_exhaustive():
    grid = walled(20, 20)
    b, s, nav = setup(grid, {"a": (17, 17)}, {"a": (2, 17)}, (2, 2))
    cfg = PlannerConfig(simulations=2000, seed=3)
    m = AbstractModel(s, nav, cfg)
    q = exhaustive_q(m, m.state_id(m.root_state()), cfg)
    best = m.actions[max(q, key=q.get)]
    got = plan(b, s, cfg, nav)
    assert got.kind == "Move" and got == best


def test_swap_uses_alternate_first():
    recs = [ReceptacleInfo("T", c, 0) for c in [(1, 8), (7, 2), (7, 14)]]
    grid = walled(9, 16, receptacles=[(r.class_name, r.cell) for r in recs])
    truth = {"a": (4, 4), "b": (4, 11)}
    goals = {"a": (4, 11), "b": (4, 4)}
    b, s, nav = setup(grid, truth, goals, (4, 7), recs=recs)
    cfg = PlannerConfig(simulations=3000, seed=1)
    first = plan(b, s, cfg, nav)
    assert first.kind == "PickPlace"
    assert first.target != goals[first.object_id]
    m = AbstractModel(s, nav, cfg)
    q = exhaustive_q(m, m.state_id(m.root_state()), PlannerConfig(depth=4))
    assert q[m.action_id(first)] == pytest.approx(max(q.values()))


def test_rollout_cutoff_and_determinism():
    grid = walled(12, 12)
    _, s, nav = setup(grid, {"a": (8, 8)}, {"a": (3, 3)}, (2, 2))
    cfg = PlannerConfig(seed=5)
    m = AbstractModel(s, nav, cfg)
    st0 = m.root_state()
    assert rollout(m, st0, 12, cfg) == 0.0
    assert rollout(m, st0, 104, cfg) == 0.0  # gamma**104 < epsilon
    assert rollout(m, st0, 0, cfg) == rollout(m, st0, 0, cfg)
    ucfg = PlannerConfig(seed=5, rollout_policy="uniform")
    assert rollout(m, st0, 0, ucfg) == rollout(m, st0, 0, ucfg)


def test_done_rollout_all_at_goal_pays_fifty():
    grid = walled(12, 12)
    _, s, nav = setup(grid, {"a": (3, 3)}, {"a": (3, 3)}, (5, 5))
    m = AbstractModel(s, nav)
    # preferred rollouts pick Done when everything is home
    assert rollout(m, m.root_state(), 0) == 50.0


def test_ucb_bookkeeping_and_seed_determinism():
    grid = walled(16, 16)
    b = init_belief(grid, [("a", "Apple"), ("b", "Mug")], {"a": (2, 2), "b": (13, 13)}, agent_cell=(7, 7))
    nav = NavCache(grid)
    s = generate_abstract_state(b, nav, [], (7, 7), 0, rng=np.random.default_rng(0))
    cfg = PlannerConfig(simulations=300, seed=9)
    search = POUCT(AbstractModel(s, nav, cfg), cfg)
    a1 = search.search(b)
    root = search.root
    assert root.N == 300 == sum(root.n)
    assert plan(b, s, cfg, nav) == a1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_sampled_transitions_are_deterministic(seed):
    rng = np.random.default_rng(seed)
    grid = walled(14, 14)
    cells = grid.free_cells()
    pick = lambda: cells[rng.integers(len(cells))]
    truth = {"a": pick(), "b": pick()}
    goals = {"a": pick(), "b": pick()}
    if len({*truth.values()}) < 2 or len({*goals.values()}) < 2:
        return
    _, s, nav = setup(grid, truth, goals, pick())
    m = AbstractModel(s, nav)
    st0 = m.root_state()
    for a in m.enumerate(st0):
        assert m._transition(st0, a) == m._transition(st0, a)
        sid = m.state_id(st0)
        assert m.step(sid, m.action_id(a)) == m.step(sid, m.action_id(a))


def test_action_json_and_str():
    a = AbstractAction("PickPlace", "a", (1, 1), (2, 3), (2, 2))
    assert str(a) == "PickPlace(a->2,3)"
    assert a.to_json()["target"] == [2, 3]
    assert str(AbstractAction("Rotate", angle=90)) == "Rotate(90)"
