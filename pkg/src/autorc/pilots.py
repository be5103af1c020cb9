"""Pilots: things that turn vehicle state or camera frames into commands.

Three kinds drive the car:

* teleop (a human command cell, handled by the drive loop directly)
* ExpertPilot, a pure-pursuit path follower with obstacle avoidance,
  used to mass-produce training data and as an evaluation baseline
* NeuralPilot, wrapping a trained model; per-frame models get the
  current frame, sequence models keep a rolling window of conv
  features so one tick encodes one frame
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .camera import CameraFrame, to_model_input
from .geometry import wrap_angle
from .nn.models import Model, RnnModel
from .pwm import NormalizedCommand, clamp_unit
from .sim import SimConfig, VehicleState, throttle_for_speed
from .track import Scenario

CAR_HALF_WIDTH = 0.08  # lateral margin the planner keeps from the lane edge


@dataclass(frozen=True)
class ExpertConfig:
    lookahead: float = 0.5
    target_speed: float = 0.42
    obstacle_clearance: float = 0.25
    speed_gain: float = 0.5  # throttle per m/s of speed error
    brake: float = 0.4
    avoid_range: float = 1.2  # obstacles closer than this (along track) shift the target

    def __post_init__(self) -> None:
        if self.lookahead <= 0.0:
            raise ValueError("lookahead must be > 0")
        if self.target_speed <= 0.0:
            raise ValueError("target_speed must be > 0")
        if self.obstacle_clearance < 0.0:
            raise ValueError("obstacle_clearance must be >= 0")


class ExpertPilot:
    """Pure pursuit on the centerline with lateral-offset avoidance.

    The target point sits ``lookahead`` meters ahead along the
    centerline. When an obstacle's inflated footprint blocks the lane
    ahead, the target shifts sideways to whichever side has more room;
    if neither side has room the pilot brakes and reports blocked.
    """

    def __init__(self, scenario: Scenario, cfg: ExpertConfig | None = None,
                 sim_cfg: SimConfig | None = None):
        self.scenario = scenario
        self.cfg = cfg or ExpertConfig()
        self.sim_cfg = sim_cfg or SimConfig()
        self.blocked = False

    def _lateral_shift(self, s: float) -> tuple[float | None, bool]:
        """Target lateral offset for obstacles ahead of progress s.

        Returns (offset or None, blocked). None means no shift needed.
        """
        track = self.scenario.track
        cfg = self.cfg
        length = track.length
        best_ds = None
        chosen = None
        for ob in self.scenario.obstacles:
            s_ob, l_ob = track.lap_progress(ob.center[0], ob.center[1])
            ds = (s_ob - s) % length
            if 0.0 < ds <= cfg.avoid_range and (best_ds is None or ds < best_ds):
                best_ds = ds
                chosen = (ob, l_ob)
        if chosen is None:
            return None, False
        ob, l_ob = chosen
        half = max(ob.width, ob.depth) / 2.0
        r = half + cfg.obstacle_clearance
        usable = track.lane_width / 2.0 - CAR_HALF_WIDTH
        room_left = usable - (l_ob + r)
        room_right = (l_ob - r) - (-usable)
        if room_left <= 0.0 and room_right <= 0.0:
            return None, True
        if room_left >= room_right:
            return min(l_ob + r, usable), False
        return max(l_ob - r, -usable), False

    def decide(self, state: VehicleState) -> NormalizedCommand:
        track = self.scenario.track
        cfg = self.cfg
        s, _ = track.lap_progress(state.x, state.y)
        shift, blocked = self._lateral_shift(s)
        self.blocked = blocked
        if blocked:
            return NormalizedCommand(0.0, -cfg.brake)

        target_s = (s + cfg.lookahead) % track.length
        point, tangent = track.point_at(target_s)
        if shift is not None:
            normal = np.array([-tangent[1], tangent[0]])  # left of travel
            point = point + shift * normal

        alpha = wrap_angle(
            np.arctan2(point[1] - state.y, point[0] - state.x) - state.heading
        )
        steer_angle = 2.0 * self.sim_cfg.wheelbase * np.sin(alpha) / cfg.lookahead
        steering = clamp_unit(steer_angle / self.sim_cfg.max_steer)

        feedforward = throttle_for_speed(cfg.target_speed, self.sim_cfg)
        throttle = clamp_unit(
            feedforward + cfg.speed_gain * (cfg.target_speed - state.speed)
        )
        return NormalizedCommand(steering, throttle)


class JitteredExpert:
    """Expert plus seeded zero-mean steering noise, for data collection.

    The noise is executed and recorded identically, so the dataset
    covers recovery situations (slightly off line, slightly
    misaligned) instead of only the clean pursuit trajectory.
    """

    def __init__(self, inner: ExpertPilot, jitter_std: float = 0.05, seed: int = 0):
        if jitter_std < 0.0:
            raise ValueError("jitter_std must be >= 0")
        self.inner = inner
        self.jitter_std = jitter_std
        self._rng = np.random.default_rng(seed)

    @property
    def blocked(self) -> bool:
        return self.inner.blocked

    def decide(self, state: VehicleState) -> NormalizedCommand:
        cmd = self.inner.decide(state)
        if self.inner.blocked or self.jitter_std == 0.0:
            return cmd
        steering = clamp_unit(cmd.steering + self._rng.normal(0.0, self.jitter_std))
        return NormalizedCommand(steering, cmd.throttle)


class NeuralPilot:
    """Model-backed pilot; returns raw head outputs (the loop clamps)."""

    def __init__(self, model: Model):
        self.model = model
        self._features: deque | None = None
        if isinstance(model, RnnModel):
            self._features = deque(maxlen=model.sequence_len)

    def reset(self) -> None:
        if self._features is not None:
            self._features.clear()

    def decide(self, frame: CameraFrame) -> tuple[float, float]:
        x = to_model_input(frame)
        if self._features is None:
            return self.model.predict(x)
        model = self.model
        assert isinstance(model, RnnModel)
        feats = model.encode_frame(x)
        self._features.append(feats)
        while len(self._features) < model.sequence_len:
            # cold start: repeat the first frame until the window fills
            self._features.appendleft(feats)
        window = np.stack(list(self._features))
        return model.predict_from_features(window)
