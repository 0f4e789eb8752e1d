import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoop.errors import MissingParams
from hoop.geometry import cone_offsets, cone_size
from hoop.sensor import ClassSensorParams, SensorModel, load_params, obs_likelihood, view_cells
from hoop.world import AgentPose

from conftest import walled

ALARM = ClassSensorParams("AlarmClock", tp=0.383, fp=0.022, r=3.010)


def test_table_values():
    p = load_params()
    assert p["AlarmClock"] == ALARM
    assert len(p) >= 40
    assert all(0 <= q.tp <= 1 and 0 <= q.fp <= 1 and q.r > 0 for q in p.values())


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        ClassSensorParams("X", 1.2, 0.0, 1.0)
    with pytest.raises(ValueError):
        ClassSensorParams("X", 0.5, 0.0, 0.0)


def test_missing_class():
    s = SensorModel({"AlarmClock": ALARM})
    with pytest.raises(MissingParams):
        s.detect([], {"o": "Teapot"}, AgentPose((1, 1)), [], np.random.default_rng(0))


def test_perfect_detector_always_hits():
    s = SensorModel(load_params(), perfect=True)
    rng = np.random.default_rng(0)
    for _ in range(200):
        z = s.detect([("o", (3, 3))], {"o": "Pencil"}, AgentPose((3, 12)), [(3, 3)], rng)
        assert z.per_object["o"] == (3, 3)


def test_every_tracked_object_has_an_entry():
    s = SensorModel(load_params())
    z = s.detect([("a", (2, 2))], {"a": "Apple", "b": "Mug", "c": "Book"}, AgentPose((2, 5)), [(2, 2)], np.random.default_rng(1))
    assert set(z.per_object) == {"a", "b", "c"}


def test_five_cases_by_hand():
    grid = walled(30, 30)
    robot = AgentPose((5, 10), 180)
    s = SensorModel({"AlarmClock": ALARM})
    ve = cone_size(ALARM.r / 0.25)
    ahead = (10, 10)  # 1.25 m away, in view
    behind = (2, 10)
    # (c) in view, z on the candidate
    assert obs_likelihood(ahead, ahead, robot, ALARM, grid) == pytest.approx(0.383)
    # (a) in view, no detection
    assert obs_likelihood(None, ahead, robot, ALARM, grid) == pytest.approx(1 - 0.383)
    # (d) out of view, no detection
    assert obs_likelihood(None, behind, robot, ALARM, grid) == pytest.approx(0.978)
    # (b) in view, detection far away from the candidate
    assert obs_likelihood((14, 10), ahead, robot, ALARM, grid) == pytest.approx(0.022 / ve)
    # (e) out of view, some detection
    assert obs_likelihood(ahead, behind, robot, ALARM, grid) == pytest.approx(0.022 / ve)
    # delta = 1/d once the candidate is beyond r (13 cells = 3.25 m, off to the side)
    assert obs_likelihood(ahead, (5, 23), robot, ALARM, grid) == pytest.approx(0.022 / ve / 3.25)


def test_distance_attenuation_example():
    grid = walled(30, 30)
    robot = AgentPose((20, 10), 0)
    c = (4, 10)  # 16 cells = 4 m ahead
    assert obs_likelihood(c, c, robot, ALARM, grid) == pytest.approx(0.383 / 4, abs=1e-12)
    assert 0.383 / 4 == pytest.approx(0.09575)


def test_grid_likelihood_matches_scalar():
    grid = walled(20, 20, walls=[(8, 9), (8, 10)])
    s = SensorModel({"AlarmClock": ALARM})
    robot = AgentPose((15, 10), 0)
    view = s.view(grid.occupancy, robot)
    for z in (None, (10, 10), (5, 3)):
        g = s.likelihood_grid(z, "AlarmClock", robot, view)
        for cell in [(10, 10), (10, 11), (3, 10), (17, 10), (5, 3), (1, 1)]:
            want = s.likelihood(z, cell, robot, "AlarmClock", bool(view[cell]))
            assert g[cell] == pytest.approx(want)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_case_exhaustive_and_positive(seed):
    rng = np.random.default_rng(seed)
    grid = walled(16, 16)
    robot = AgentPose(tuple(int(x) for x in rng.integers(1, 15, 2)), int(rng.choice([0, 90, 180, 270])))
    cand = tuple(int(x) for x in rng.integers(1, 15, 2))
    z = None if rng.random() < 0.3 else tuple(int(x) for x in rng.integers(1, 15, 2))
    p = obs_likelihood(z, cand, robot, ALARM, grid)
    assert 0 < p <= 1


def test_null_in_view_is_less_likely_than_out_of_view():
    s = SensorModel({"AlarmClock": ALARM})
    r = AgentPose((5, 5))
    assert s.likelihood(None, (3, 5), r, "AlarmClock", True) < s.likelihood(None, (3, 5), r, "AlarmClock", False)


def test_false_positives_land_in_view():
    s = SensorModel({"AlarmClock": ALARM})
    grid = walled(20, 20)
    robot = AgentPose((10, 10), 0)
    cells = view_cells(s.view(grid.occupancy, robot))
    rng = np.random.default_rng(3)
    hits = [s.detect([], {"o": "AlarmClock"}, robot, cells, rng).per_object["o"] for _ in range(3000)]
    hits = [h for h in hits if h is not None]
    assert hits and all(h in set(cells) for h in hits)


def test_cone_size_same_for_all_headings():
    for h in (0, 90, 180, 270):
        assert len(cone_offsets(h, 12.04)) == cone_size(12.04)
