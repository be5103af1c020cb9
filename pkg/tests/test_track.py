"""Track geometry: arc length, projection, lateral sign, scenario files."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from autorc.geometry import wrap_angle
from autorc.track import (
    Obstacle,
    Scenario,
    ScenarioError,
    TrackDefinition,
    builtin_scenario,
    default_scenario,
    load_scenario,
    obstacle_on_track,
    resolve_scenario,
    rounded_rectangle_track,
    save_scenario,
)


def square_track(side=4.0, lane=0.6):
    pts = np.array([
        [0.0, 0.0], [side, 0.0], [side, side], [0.0, side], [0.0, 0.0]
    ])
    return TrackDefinition(pts, lane_width=lane, bounds=(-1, -1, side + 1, side + 1))


def test_wrap_angle_interval():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.1 - 2 * math.pi) == pytest.approx(0.1)


def test_default_track_length_matches_closed_form():
    # 2*sx + 2*sy + 2*pi*r with sy solved for a 12 m total
    track = rounded_rectangle_track()
    assert track.length == pytest.approx(12.0, abs=2e-3)


def test_square_track_progress_and_lateral_sign():
    track = square_track()
    assert track.length == pytest.approx(16.0)
    s, lateral = track.lap_progress(2.0, 0.0)
    assert s == pytest.approx(2.0)
    assert lateral == pytest.approx(0.0)
    # travel along +x on the bottom edge: a point above it is to the left
    _, lateral = track.lap_progress(2.0, 0.2)
    assert lateral == pytest.approx(0.2)
    _, lateral = track.lap_progress(2.0, -0.2)
    assert lateral == pytest.approx(-0.2)


def test_point_at_wraps_and_matches_progress():
    track = square_track()
    for s in (0.0, 3.7, 8.0, 15.999, 16.0, 20.5):
        p, tangent = track.point_at(s)
        s_back, lateral = track.lap_progress(float(p[0]), float(p[1]))
        assert s_back == pytest.approx(s % track.length, abs=1e-9)
        assert abs(lateral) < 1e-9
        assert np.hypot(*tangent) == pytest.approx(1.0)


@given(st.floats(0.0, 32.0), st.floats(-0.29, 0.29))
@settings(max_examples=80)
def test_offset_points_round_trip(s, lateral):
    track = square_track()
    p, tangent = track.point_at(s)
    normal = np.array([-tangent[1], tangent[0]])
    q = p + lateral * normal
    s_back, lat_back = track.lap_progress(float(q[0]), float(q[1]))
    # at a right-angle corner the point can be equidistant to both edges,
    # so the recovered arc position may land on the neighbor: bound 2|lat|
    ds = min(abs(s_back - s % track.length),
             track.length - abs(s_back - s % track.length))
    assert ds <= 2.0 * abs(lateral) + 1e-9
    assert abs(lat_back) <= abs(lateral) + 1e-9


def test_off_track_threshold_is_half_lane():
    track = square_track(lane=0.6)
    assert not track.off_track(2.0, 0.3)
    assert track.off_track(2.0, 0.30001)


def test_track_validation_rejects_bad_input():
    with pytest.raises(ScenarioError):
        TrackDefinition(np.zeros((3, 2)))
    open_loop = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(ScenarioError):
        TrackDefinition(open_loop)
    with pytest.raises(ScenarioError):
        TrackDefinition(np.array([[0, 0], [9, 0], [9, 9], [0, 9], [0, 0]],
                                 dtype=float), bounds=(0, 0, 5, 5))


def test_obstacle_footprint_distance():
    ob = Obstacle(center=(1.0, 1.0), width=0.2, depth=0.2)
    assert ob.footprint_distance(1.0, 1.0) == 0.0
    assert ob.footprint_distance(1.1, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert ob.footprint_distance(1.3, 1.0) == pytest.approx(0.2)
    assert ob.footprint_distance(1.2, 1.2) == pytest.approx(math.hypot(0.1, 0.1))


def test_obstacle_corners3d_box():
    ob = Obstacle(center=(0.0, 0.0), width=0.2, depth=0.4, height=0.15)
    corners = ob.corners3d()
    assert corners.shape == (8, 3)
    assert set(corners[:, 2]) == {0.0, 0.15}
    assert corners[:, 0].min() == pytest.approx(-0.1)
    assert corners[:, 1].max() == pytest.approx(0.2)


def test_builtin_scenarios():
    plain = builtin_scenario("default")
    assert plain.obstacles == []
    obst = builtin_scenario("obstacles")
    assert len(obst.obstacles) == 2
    with pytest.raises(ScenarioError):
        builtin_scenario("mystery")


def test_obstacle_placement_offsets_laterally():
    scenario = default_scenario(True)
    track = scenario.track
    for ob, expected in zip(scenario.obstacles, (+0.15, -0.15)):
        _, lateral = track.lap_progress(*ob.center)
        assert lateral == pytest.approx(expected, abs=1e-6)


def test_scenario_validation_rejects_decorative_obstacle():
    track = square_track()
    far = Obstacle(center=(10.0, 10.0))
    with pytest.raises(ScenarioError):
        Scenario(track=track, obstacles=[far]).validate()


def test_scenario_file_roundtrip(tmp_path):
    scenario = default_scenario(True)
    path = tmp_path / "scene.json"
    save_scenario(scenario, path)
    loaded = load_scenario(path)
    assert loaded.name == scenario.name
    assert loaded.track.length == pytest.approx(scenario.track.length)
    assert len(loaded.obstacles) == 2
    assert loaded.spawn_pose() == pytest.approx(scenario.spawn_pose())


def test_resolve_scenario_accepts_builtin_and_file(tmp_path):
    assert resolve_scenario("default").name == "default"
    assert len(resolve_scenario("default", with_obstacles=True).obstacles) == 2
    path = tmp_path / "s.json"
    save_scenario(default_scenario(False), path)
    assert resolve_scenario(str(path)).track.length == pytest.approx(12.0, abs=2e-3)
    with pytest.raises(ScenarioError):
        resolve_scenario("missing-name")
