"""Fixed-step kinematic bicycle simulator with ground-truth sensing.

The vehicle model is a rear-axle kinematic bicycle: position and heading
integrate with the pre-update speed, the steering servo is treated as
instantaneous within a tick, and speed relaxes toward the drivetrain
target with a first-order lag exp(-dt/tau). All functions are pure; a
trajectory is fully determined by (config, command sequence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import wrap_angle


class SimulationError(ValueError):
    """Raised when a state or configuration is unusable."""


@dataclass(frozen=True)
class NoiseConfig:
    """Additive Gaussian noise sigmas for the ground-truth sensors."""

    yaw_rate: float = 0.0        # rad/s
    accel: float = 0.0           # m/s^2


@dataclass(frozen=True)
class SimConfig:
    wheelbase: float = 0.26      # m
    dt: float = 0.05             # s, 20 Hz drive loop
    max_steer: float = 0.45      # rad
    max_speed: float = 2.0       # m/s
    motor_tau: float = 0.25      # s, first-order drivetrain lag
    ticks_per_meter: float = 350.0
    seed: int = 0
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise SimulationError("dt must be positive")
        if self.wheelbase <= 0.0:
            raise SimulationError("wheelbase must be positive")
        if self.motor_tau <= 0.0:
            raise SimulationError("motor_tau must be positive")


@dataclass(frozen=True)
class VehicleState:
    """Ground-truth pose and motion. heading is wrapped to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0           # signed, negative = reverse
    steering_angle: float = 0.0  # front-wheel angle, rad

    def is_finite(self) -> bool:
        return all(
            math.isfinite(v)
            for v in (self.x, self.y, self.heading, self.speed, self.steering_angle)
        )


# Throttle deadband of the static command->target map, expressed in the
# normalized domain. Matches the 1480..1520 us ESC deadband: 20/480.
THROTTLE_DEADBAND = 20.0 / 480.0
_THROTTLE_SPAN = 1.0 - THROTTLE_DEADBAND


def esc_target_speed(throttle: float, cfg: SimConfig) -> float:
    """Static normalized-throttle to target-speed map (no arming logic).

    Inside the deadband the target is zero; outside it scales linearly so
    full deflection commands max_speed. The stateful brushed-ESC behavior
    (brake, re-arm, reverse) lives in autorc.esc and is wired in by the
    drive loop instead of this map.
    """
    t = min(1.0, max(-1.0, throttle))
    if abs(t) <= THROTTLE_DEADBAND:
        return 0.0
    sign = 1.0 if t > 0.0 else -1.0
    return sign * cfg.max_speed * (abs(t) - THROTTLE_DEADBAND) / _THROTTLE_SPAN


def throttle_for_speed(speed: float, cfg: SimConfig) -> float:
    """Inverse of esc_target_speed, used as pilot feed-forward."""
    if speed == 0.0:
        return 0.0
    sign = 1.0 if speed > 0.0 else -1.0
    mag = min(abs(speed), cfg.max_speed) / cfg.max_speed
    return sign * (THROTTLE_DEADBAND + mag * _THROTTLE_SPAN)


def step_dynamics(
    state: VehicleState, steering_norm: float, target_speed: float, cfg: SimConfig
) -> VehicleState:
    """Advance one tick given a normalized steering and a target speed.

    Position and heading integrate with the current speed; the new
    steering angle applies immediately (stiff servo); speed then relaxes
    toward the target with time constant motor_tau and saturates at
    max_speed.
    """
    if not state.is_finite():
        raise SimulationError("invalid state: non-finite component")
    steering_norm = min(1.0, max(-1.0, steering_norm))
    delta = steering_norm * cfg.max_steer

    x = state.x + state.speed * math.cos(state.heading) * cfg.dt
    y = state.y + state.speed * math.sin(state.heading) * cfg.dt
    heading = wrap_angle(
        state.heading + (state.speed / cfg.wheelbase) * math.tan(delta) * cfg.dt
    )

    decay = math.exp(-cfg.dt / cfg.motor_tau)
    speed = target_speed + (state.speed - target_speed) * decay
    speed = min(cfg.max_speed, max(-cfg.max_speed, speed))

    return VehicleState(x=x, y=y, heading=heading, speed=speed, steering_angle=delta)


def step(state: VehicleState, cmd, cfg: SimConfig) -> VehicleState:
    """Advance one tick from a NormalizedCommand (steering, throttle)."""
    return step_dynamics(state, cmd.steering, esc_target_speed(cmd.throttle, cfg), cfg)


def distance_traveled(history: list[VehicleState], cfg: SimConfig) -> float:
    """Total path length of a trajectory: sum of per-step |speed| * dt.

    Position integrates with the pre-update speed, so the distance covered
    between history[i] and history[i+1] is |history[i].speed| * dt.
    """
    if not history:
        raise SimulationError("history must be non-empty")
    if len(history) == 1:
        return 0.0
    return sum(abs(s.speed) for s in history[:-1]) * cfg.dt


@dataclass(frozen=True)
class RawSensorSample:
    """One tick of microcontroller-side sensor truth, physical units."""

    encoder_delta: int            # signed ticks this tick
    encoder_total: int            # signed cumulative ticks
    yaw_rate: float               # rad/s
    accel_long: float             # m/s^2
    accel_lat: float              # m/s^2


class EncoderModel:
    """Driveshaft optical encoder with fractional-tick remainder carrying.

    Accumulated distance is converted to ticks once, against a running
    real-valued accumulator, so the cumulative tick count over any
    trajectory equals round(total_distance * ticks_per_meter) exactly,
    however the trajectory is partitioned into steps.
    """

    def __init__(self, ticks_per_meter: float) -> None:
        self.ticks_per_meter = ticks_per_meter
        self._accumulated = 0.0   # |distance| * ticks_per_meter, real-valued
        self._emitted = 0         # unsigned ticks already reported
        self.total_signed = 0

    def advance(self, distance: float, direction: float) -> int:
        """Consume |distance| meters; returns the signed tick delta."""
        self._accumulated += abs(distance) * self.ticks_per_meter
        target = int(math.floor(self._accumulated + 0.5))
        delta = target - self._emitted
        self._emitted = target
        signed = delta if direction >= 0.0 else -delta
        self.total_signed += signed
        return signed

    @property
    def total_unsigned(self) -> int:
        return self._emitted


class GroundTruthSensors:
    """Derives encoder/IMU readings from consecutive simulator states."""

    def __init__(self, cfg: SimConfig, rng: np.random.Generator | None = None) -> None:
        self.cfg = cfg
        self.encoder = EncoderModel(cfg.ticks_per_meter)
        self._rng = rng if rng is not None else np.random.default_rng(cfg.seed)

    def read(self, prev: VehicleState, new: VehicleState) -> RawSensorSample:
        """Sensor sample for the step that took prev to new."""
        cfg = self.cfg
        distance = abs(prev.speed) * cfg.dt
        delta = self.encoder.advance(distance, prev.speed)
        yaw_rate = wrap_angle(new.heading - prev.heading) / cfg.dt
        accel_long = (new.speed - prev.speed) / cfg.dt
        accel_lat = new.speed * yaw_rate
        noise = cfg.noise
        if noise.yaw_rate > 0.0:
            yaw_rate += float(self._rng.normal(0.0, noise.yaw_rate))
        if noise.accel > 0.0:
            accel_long += float(self._rng.normal(0.0, noise.accel))
            accel_lat += float(self._rng.normal(0.0, noise.accel))
        return RawSensorSample(
            encoder_delta=delta,
            encoder_total=self.encoder.total_signed,
            yaw_rate=yaw_rate,
            accel_long=accel_long,
            accel_lat=accel_lat,
        )


def read_ground_truth_sensors(
    prev: VehicleState, new: VehicleState, cfg: SimConfig,
    sensors: GroundTruthSensors | None = None,
) -> RawSensorSample:
    """One-shot sensor read; pass a GroundTruthSensors to carry tick remainders."""
    if sensors is None:
        sensors = GroundTruthSensors(cfg)
    return sensors.read(prev, new)
