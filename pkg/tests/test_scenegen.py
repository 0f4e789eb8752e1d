from dataclasses import replace

import numpy as np
import pytest

from hoop.errors import ConstraintUnsatisfiable, NoCutFound
from hoop.scenegen import (
    GenConfig, SceneInstance, blocked_path_certificate, generate_scene, insert_blocked_path, load_scene,
    room_of, save_scene, scripted_solution, sealed_objects, verify_scene, visibility_fraction,
)
from hoop.world import GridMap

from conftest import bfs_dist


def test_deterministic_bytes():
    cfg = GenConfig(n_rooms=2, n_objects=10, seed=7)
    assert generate_scene(cfg).dumps() == generate_scene(cfg).dumps()


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(n_rooms=0)
    with pytest.raises(ValueError):
        GenConfig(n_objects=0)


def test_displacement_and_cross_room_by_bfs():
    s = generate_scene(GenConfig(seed=3))
    occ = s.map.occupancy
    d = [bfs_dist(occ, o.start, o.goal) for o in s.objects]
    assert np.mean(d) > 25
    cross = sum(room_of(s.map, o.start) != room_of(s.map, o.goal) for o in s.objects)
    assert cross >= 0.5 * len(s.objects)
    goals = [o.goal for o in s.objects]
    assert len(set(goals)) == len(goals)
    assert all(s.map.is_free(o.start) and s.map.is_free(o.goal) for o in s.objects)


def test_swap_pair_exists():
    s = generate_scene(GenConfig(seed=2, swap=True))
    assert s.metadata.has_swap
    objs = s.objects
    assert any(a.start == b.goal and b.start == a.goal for a in objs for b in objs if a is not b)


def test_blocked_goal_exists():
    s = generate_scene(GenConfig(seed=4, blocked_goal=True))
    starts = {o.start for o in s.objects}
    assert s.metadata.has_blocked_goal and any(o.goal in starts for o in s.objects)


def test_blocked_path_connectivity_oracle():
    s = generate_scene(GenConfig(seed=5, blocked_path=True))
    (bid, fp), = s.blockers
    occ = s.map.occupancy
    sealed = [o for o in s.objects if o.size == 1 and bfs_dist(occ, s.agent_start, o.start, frozenset(fp)) is None]
    assert sealed and {o.id for o in sealed} == set(sealed_objects(s))
    assert all(bfs_dist(occ, s.agent_start, o.start) is not None for o in s.objects)
    assert blocked_path_certificate(s)
    blocker = s.object(bid)
    assert bfs_dist(occ, s.agent_start, blocker.goal, frozenset(fp)) is not None


def test_no_cut_with_two_doors():
    s = generate_scene(GenConfig(seed=1))
    occ = s.map.occupancy.copy()
    rooms = s.map.room_id.copy()
    # open a second door far from the first in the dividing wall (column 17)
    doors = [r for r in range(occ.shape[0]) if not occ[r, 17]]
    r = 3 if min(doors) > 8 else occ.shape[0] - 5
    occ[r, 17] = occ[r + 1, 17] = False
    rooms[r, 17] = rooms[r + 1, 17] = -2
    s2 = replace(s, map=GridMap(occ, rooms, s.map.receptacles))
    with pytest.raises(NoCutFound):
        insert_blocked_path(s2)


def test_visibility_fraction_matches_world_oracle():
    for seed in range(4):
        s = generate_scene(GenConfig(seed=seed))
        w = s.to_world()
        want = len(w.visible_objects()) / len(s.objects)
        assert visibility_fraction(s) == want == s.metadata.visibility_fraction


def test_visibility_zero_when_all_behind():
    s = generate_scene(GenConfig(seed=0))
    behind = [replace(o, start=(s.agent_start[0] + 1, s.agent_start[1])) for o in s.objects[:1]]
    s2 = replace(s, objects=behind, agent_heading=0)
    if s.map.is_free(behind[0].start):
        assert visibility_fraction(s2) == 0.0


def test_json_roundtrip(tmp_path):
    s = generate_scene(GenConfig(seed=9, blocked_path=True))
    save_scene(s, tmp_path / "s.json")
    back = load_scene(tmp_path / "s.json")
    assert back.dumps() == s.dumps()
    with pytest.raises(ValueError):
        SceneInstance.from_json({**s.to_json(), "version": 99})


@pytest.mark.parametrize("kw", [{}, {"swap": True}, {"blocked_goal": True}, {"blocked_path": True},
                                {"blocked_path": True, "blocker_at_goal": True}, {"n_rooms": 3}, {"n_rooms": 4, "n_objects": 8}])
def test_certificates(kw):
    cfg = GenConfig(seed=11, **kw)
    s = generate_scene(cfg)
    assert all(verify_scene(s, cfg).values())
    plan = scripted_solution(s)
    assert plan is not None


def test_single_room_cannot_meet_displacement():
    with pytest.raises(ConstraintUnsatisfiable):
        generate_scene(GenConfig(n_rooms=1, n_objects=3, max_retries=5))
    s = generate_scene(GenConfig(n_rooms=1, n_objects=2, min_avg_displacement=5))
    assert s.metadata.n_rooms == 1
