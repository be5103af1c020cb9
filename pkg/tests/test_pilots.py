"""Expert path follower, jittered data collector, and model-backed pilot."""

import math

import numpy as np
import pytest

from autorc import (
    CameraFrame,
    ExpertConfig,
    ExpertPilot,
    JitteredExpert,
    NeuralPilot,
    Scenario,
    SimConfig,
    VehicleState,
    builtin_scenario,
)
from autorc.geometry import wrap_angle
from autorc.nn.models import LinearCnnModel, RnnModel
from autorc.sim import throttle_for_speed
from autorc.track import Obstacle


def plain() -> Scenario:
    return builtin_scenario("default")


def spawn_state(scenario: Scenario, lateral: float = 0.0, dheading: float = 0.0,
                speed: float = 0.0) -> VehicleState:
    x, y, heading = scenario.spawn_pose()
    nx, ny = -math.sin(heading), math.cos(heading)  # left of travel
    return VehicleState(x=x + lateral * nx, y=y + lateral * ny,
                        heading=heading + dheading, speed=speed)


def test_steering_matches_pure_pursuit_arithmetic():
    scenario = plain()
    pilot = ExpertPilot(scenario)
    cfg, sim = pilot.cfg, pilot.sim_cfg
    state = spawn_state(scenario, lateral=0.12, dheading=0.2)

    s, _ = scenario.track.lap_progress(state.x, state.y)
    point, _ = scenario.track.point_at((s + cfg.lookahead) % scenario.track.length)
    alpha = wrap_angle(math.atan2(point[1] - state.y, point[0] - state.x)
                       - state.heading)
    expected = 2.0 * sim.wheelbase * math.sin(alpha) / cfg.lookahead / sim.max_steer
    expected = max(-1.0, min(1.0, expected))

    cmd = pilot.decide(state)
    assert cmd.steering == pytest.approx(expected, abs=1e-12)


def test_centerline_heading_gives_straight_steering():
    scenario = plain()
    pilot = ExpertPilot(scenario)
    cmd = pilot.decide(spawn_state(scenario))
    assert abs(cmd.steering) < 0.05


def test_offset_left_steers_right():
    scenario = plain()
    pilot = ExpertPilot(scenario)
    cmd = pilot.decide(spawn_state(scenario, lateral=0.2))
    assert cmd.steering < -0.05


def test_throttle_feedforward_plus_proportional():
    scenario = plain()
    cfg = ExpertConfig()
    pilot = ExpertPilot(scenario, cfg)
    ff = throttle_for_speed(cfg.target_speed, pilot.sim_cfg)

    at_speed = pilot.decide(spawn_state(scenario, speed=cfg.target_speed))
    assert at_speed.throttle == pytest.approx(ff, abs=1e-12)

    stopped = pilot.decide(spawn_state(scenario, speed=0.0))
    assert stopped.throttle == pytest.approx(
        min(1.0, ff + cfg.speed_gain * cfg.target_speed), abs=1e-12)

    fast = pilot.decide(spawn_state(scenario, speed=2.0))
    assert fast.throttle < ff


def test_obstacle_shift_picks_side_with_more_room():
    track = plain().track
    x, y, heading = track.spawn_pose()
    s, _ = track.lap_progress(x, y)
    ahead, tangent = track.point_at((s + 0.8) % track.length)
    normal = np.array([-tangent[1], tangent[0]])

    for lat, want_sign in ((0.15, -1.0), (-0.15, 1.0)):
        center = ahead + lat * normal
        scenario = Scenario(track=track,
                            obstacles=[Obstacle(center=(center[0], center[1]))],
                            name="side")
        pilot = ExpertPilot(scenario)
        shift, blocked = pilot._lateral_shift(s)
        assert not blocked
        assert shift is not None and math.copysign(1.0, shift) == want_sign
        # shifted target stays inside the drivable band
        assert abs(shift) <= track.lane_width / 2.0


def test_obstacle_behind_or_far_is_ignored():
    track = plain().track
    x, y, heading = track.spawn_pose()
    s, _ = track.lap_progress(x, y)
    for ds in (-0.5, 2.0):
        point, _ = track.point_at((s + ds) % track.length)
        scenario = Scenario(track=track,
                            obstacles=[Obstacle(center=(point[0], point[1]))],
                            name="far")
        shift, blocked = ExpertPilot(scenario)._lateral_shift(s)
        assert shift is None and not blocked


def test_lane_wide_obstacle_blocks_and_brakes():
    track = plain().track
    x, y, heading = track.spawn_pose()
    s, _ = track.lap_progress(x, y)
    point, _ = track.point_at((s + 0.6) % track.length)
    wall = Obstacle(center=(point[0], point[1]), width=2.0, depth=2.0)
    scenario = Scenario(track=track, obstacles=[wall], name="wall")
    pilot = ExpertPilot(scenario)
    cmd = pilot.decide(spawn_state(scenario, speed=0.4))
    assert pilot.blocked
    assert cmd.steering == 0.0
    assert cmd.throttle == -pilot.cfg.brake


def test_nearest_obstacle_wins():
    track = plain().track
    x, y, heading = track.spawn_pose()
    s, _ = track.lap_progress(x, y)
    near, tn = track.point_at((s + 0.5) % track.length)
    far, tf = track.point_at((s + 1.0) % track.length)
    obstacles = [
        Obstacle(center=tuple(far + 0.15 * np.array([-tf[1], tf[0]]))),
        Obstacle(center=tuple(near - 0.15 * np.array([-tn[1], tn[0]]))),
    ]
    scenario = Scenario(track=track, obstacles=obstacles, name="two")
    shift, blocked = ExpertPilot(scenario)._lateral_shift(s)
    # the nearer box sits right of center, so the dodge goes left
    assert not blocked and shift > 0


def test_expert_config_validation():
    with pytest.raises(ValueError):
        ExpertConfig(lookahead=0.0)
    with pytest.raises(ValueError):
        ExpertConfig(target_speed=-0.1)
    with pytest.raises(ValueError):
        ExpertConfig(obstacle_clearance=-0.01)


def test_jitter_is_seeded_and_zero_mean_ish():
    scenario = plain()
    state = spawn_state(scenario)
    base = ExpertPilot(scenario).decide(state)

    a = JitteredExpert(ExpertPilot(scenario), jitter_std=0.05, seed=42)
    b = JitteredExpert(ExpertPilot(scenario), jitter_std=0.05, seed=42)
    seq_a = [a.decide(state).steering for _ in range(50)]
    seq_b = [b.decide(state).steering for _ in range(50)]
    assert seq_a == seq_b
    devs = np.array(seq_a) - base.steering
    assert devs.std() > 0.01
    assert abs(devs.mean()) < 0.05
    # throttle passes through untouched
    assert a.decide(state).throttle == base.throttle


def test_zero_jitter_passes_through():
    scenario = plain()
    state = spawn_state(scenario, lateral=0.1)
    inner = ExpertPilot(scenario)
    wrapped = JitteredExpert(ExpertPilot(scenario), jitter_std=0.0, seed=0)
    assert wrapped.decide(state) == inner.decide(state)
    with pytest.raises(ValueError):
        JitteredExpert(inner, jitter_std=-0.1)


def test_jitter_suppressed_when_blocked():
    track = plain().track
    x, y, heading = track.spawn_pose()
    s, _ = track.lap_progress(x, y)
    point, _ = track.point_at((s + 0.6) % track.length)
    wall = Obstacle(center=(point[0], point[1]), width=2.0, depth=2.0)
    scenario = Scenario(track=track, obstacles=[wall], name="wall")
    pilot = JitteredExpert(ExpertPilot(scenario), jitter_std=0.5, seed=1)
    state = spawn_state(scenario)
    for _ in range(5):
        cmd = pilot.decide(state)
        assert pilot.blocked
        assert cmd.steering == 0.0


def rand_frame(rng, fid=0):
    px = rng.integers(0, 256, (120, 160, 3), dtype=np.uint8)
    return CameraFrame(pixels=px, frame_id=fid, timestamp=fid * 0.05)


def test_neural_pilot_per_frame_model():
    rng = np.random.default_rng(0)
    model = LinearCnnModel(seed=0)
    pilot = NeuralPilot(model)
    frame = rand_frame(rng)
    got = pilot.decide(frame)
    want = model.predict(frame.pixels.astype(np.float64) / 255.0)
    assert got == want
    pilot.reset()  # no-op for per-frame models
    assert pilot.decide(frame) == want


def test_neural_pilot_sequence_cold_start_and_window():
    rng = np.random.default_rng(1)
    model = RnnModel(seed=0)
    T = model.sequence_len
    pilot = NeuralPilot(model)
    frames = [rand_frame(rng, i) for i in range(T + 1)]
    xs = [f.pixels.astype(np.float64) / 255.0 for f in frames]

    # first tick: window is the first frame repeated T times
    got0 = pilot.decide(frames[0])
    want0 = model.predict(np.stack([xs[0]] * T))
    assert np.allclose(got0, want0, atol=1e-12)

    for f in frames[1:T]:
        pilot.decide(f)
    got = pilot.decide(frames[T])
    want = model.predict(np.stack(xs[1 : T + 1]))
    assert np.allclose(got, want, atol=1e-12)

    # reset refills from the next frame
    pilot.reset()
    again = pilot.decide(frames[0])
    assert np.allclose(again, want0, atol=1e-12)
