"""Fixed-rate vehicle loop.

Each tick: render the camera frame, pick a command for the active mode
(user teleop, scripted expert, or neural), clamp and slew-limit it,
convert to PWM, run the ESC state machine, step the vehicle dynamics,
read the sensors through the real wire protocol, optionally append to
the recording tub, and publish a telemetry snapshot.

The loop runs on simulated time by default (one tick = dt seconds, no
sleeping), which keeps tests and dataset generation deterministic and
machine-independent. Wall-clock pacing is opt-in for live driving; it
reports overruns instead of stretching dt.

Thread model: one thread owns the loop and all mutable world state.
Teleop inputs and outbound snapshots cross threads through single-slot
cells (plain attribute swaps, atomic in CPython); stale teleop is
overwritten, never queued.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import asdict, dataclass

from .camera import CameraFrame, CameraModel, Renderer
from .esc import EscState, esc_step
from .pilots import ExpertConfig, ExpertPilot, JitteredExpert, NeuralPilot
from .pwm import ActuationConfig, NormalizedCommand, clamp_unit, command_to_pwm
from .sensorlink import StreamParser, encode_sample
from .sim import GroundTruthSensors, SimConfig, VehicleState, step_dynamics
from .track import Scenario
from .tub import Tub

MODES = ("user", "expert", "auto")


class LoopError(RuntimeError):
    """Raised for drive-loop misuse: bad mode, missing model, bad config."""


@dataclass(frozen=True)
class LoopConfig:
    rate_hz: float = 20.0
    auto_throttle_ceiling: float = 0.6
    throttle_slew: float = 0.5  # max |throttle change| per tick
    wall_clock: bool = False

    def __post_init__(self) -> None:
        if self.rate_hz <= 0.0:
            raise ValueError("rate_hz must be > 0")
        if not 0.0 < self.auto_throttle_ceiling <= 1.0:
            raise ValueError("auto_throttle_ceiling must be in (0, 1]")
        if self.throttle_slew <= 0.0:
            raise ValueError("throttle_slew must be > 0")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz


@dataclass(frozen=True)
class TelemetrySnapshot:
    """Flat per-tick document published to the telemetry service."""

    timestamp: float
    frame_id: int
    mode: str
    steering: float
    throttle: float
    speed: float
    encoder_ticks: int
    yaw_rate: float
    lap: int
    lap_time: float
    overruns: int
    recording: bool
    x: float
    y: float
    heading: float
    progress: float
    lateral: float
    off_track: bool
    blocked: bool

    def to_dict(self) -> dict:
        return asdict(self)


class DriveLoop:
    def __init__(
        self,
        scenario: Scenario,
        sim_cfg: SimConfig | None = None,
        act_cfg: ActuationConfig | None = None,
        loop_cfg: LoopConfig | None = None,
        expert_cfg: ExpertConfig | None = None,
        camera: CameraModel | None = None,
        model=None,
        tub: Tub | None = None,
        run_id: int = 0,
        jitter_std: float = 0.0,
        jitter_seed: int = 0,
    ):
        self.loop_cfg = loop_cfg or LoopConfig()
        self.sim_cfg = sim_cfg or SimConfig(dt=self.loop_cfg.dt)
        if abs(self.sim_cfg.dt - self.loop_cfg.dt) > 1e-12:
            raise LoopError(
                f"sim dt {self.sim_cfg.dt} != loop dt {self.loop_cfg.dt}"
            )
        self.act_cfg = act_cfg or ActuationConfig()
        self.scenario = scenario
        self.renderer = Renderer(scenario, camera)
        self.model = model
        self.tub = tub
        self.run_id = run_id

        expert = ExpertPilot(scenario, expert_cfg, self.sim_cfg)
        if jitter_std > 0.0:
            self.expert = JitteredExpert(expert, jitter_std, jitter_seed)
        else:
            self.expert = expert
        self.neural = NeuralPilot(model) if model is not None else None

        x, y, heading = scenario.spawn_pose()
        self.state = VehicleState(x=x, y=y, heading=heading, speed=0.0,
                                  steering_angle=0.0)
        self.esc = EscState()
        self._sensors = GroundTruthSensors(self.sim_cfg)
        self._parser = StreamParser()
        self._encoder_ticks = 0

        self.mode = "user"
        self.recording = False
        self.frame_id = 0
        self.overruns = 0
        self.lap = 0
        self._lap_start = 0.0
        self.lap_times: list[float] = []
        self._prev_progress: float | None = None
        self._prev_cmd = NormalizedCommand(0.0, 0.0)
        self.blocked = False

        # cross-thread cells: written by one side, read by the other
        self._teleop: tuple[float, float] = (0.0, 0.0)
        self.latest_snapshot: TelemetrySnapshot | None = None
        self.latest_frame: CameraFrame | None = None
        self.tick_seconds: deque = deque(maxlen=512)
        self.snapshot_sink = None  # optional callable(snapshot), e.g. a CSV log

    # -- control surface (callable from other threads) ----------------

    def submit_teleop(self, steering: float, throttle: float) -> tuple[float, float]:
        """Latest-wins teleop input; returns the clamped values."""
        clamped = (clamp_unit(steering), clamp_unit(throttle))
        self._teleop = clamped
        return clamped

    def set_mode(self, mode: str) -> None:
        if mode not in MODES:
            raise LoopError(f"unknown mode {mode!r} (one of {MODES})")
        if mode == "auto" and self.neural is None:
            raise LoopError("cannot enter auto mode: no model loaded")
        if mode == "auto" and self.mode != "auto" and self.neural is not None:
            self.neural.reset()
        self.mode = mode

    def set_recording(self, recording: bool) -> bool:
        """Recording only arms in user/expert modes; returns applied value."""
        if recording and self.mode == "auto":
            self.recording = False
        else:
            self.recording = bool(recording)
        return self.recording

    # -- the tick ------------------------------------------------------

    def _pilot_command(self, frame: CameraFrame) -> NormalizedCommand:
        if self.mode == "user":
            s, t = self._teleop
            self.blocked = False
            return NormalizedCommand(s, t)
        if self.mode == "expert":
            cmd = self.expert.decide(self.state)
            self.blocked = self.expert.blocked
            return cmd
        # auto
        assert self.neural is not None
        t0 = time.perf_counter()
        raw_s, raw_t = self.neural.decide(frame)
        inference = time.perf_counter() - t0
        self.blocked = False
        if self.loop_cfg.wall_clock and inference > self.loop_cfg.dt:
            self.overruns += 1
            return self._prev_cmd
        throttle = min(clamp_unit(raw_t), self.loop_cfg.auto_throttle_ceiling)
        return NormalizedCommand(clamp_unit(raw_s), throttle)

    def tick(self) -> TelemetrySnapshot:
        t_start = time.perf_counter()
        cfg = self.sim_cfg
        now = self.frame_id * cfg.dt

        frame = self.renderer.render(self.state, frame_id=self.frame_id,
                                     timestamp=now)
        wanted = self._pilot_command(frame)

        # throttle slew limit, so mode switches cannot step the motor
        slew = self.loop_cfg.throttle_slew
        delta = wanted.throttle - self._prev_cmd.throttle
        delta = min(slew, max(-slew, delta))
        cmd = NormalizedCommand(wanted.steering, self._prev_cmd.throttle + delta)

        steering_pwm, throttle_pwm = command_to_pwm(cmd, self.act_cfg)
        self.esc, target_speed = esc_step(self.esc, throttle_pwm.pulse_us,
                                          cfg.dt, cfg.max_speed)
        prev_state = self.state
        self.state = step_dynamics(prev_state, cmd.steering, target_speed, cfg)

        sample = self._sensors.read(prev_state, self.state)
        wire = encode_sample(sample, seq=self.frame_id % 256)
        frames = self._parser.feed(wire)
        if frames:
            self._encoder_ticks = frames[-1].encoder_ticks
        yaw_rate = frames[-1].yaw_rate if frames else sample.yaw_rate

        progress, lateral = self.scenario.track.lap_progress(
            self.state.x, self.state.y
        )
        length = self.scenario.track.length
        if (
            self._prev_progress is not None
            and self._prev_progress > 0.8 * length
            and progress < 0.2 * length
        ):
            self.lap += 1
            self.lap_times.append(now - self._lap_start)
            self._lap_start = now
        self._prev_progress = progress

        if self.recording and self.mode in ("user", "expert") and self.tub is not None:
            self.tub.append(frame, cmd, self.mode, lap=self.lap, run=self.run_id,
                            timestamp=now)

        snapshot = TelemetrySnapshot(
            timestamp=now,
            frame_id=self.frame_id,
            mode=self.mode,
            steering=cmd.steering,
            throttle=cmd.throttle,
            speed=self.state.speed,
            encoder_ticks=self._encoder_ticks,
            yaw_rate=yaw_rate,
            lap=self.lap,
            lap_time=now - self._lap_start,
            overruns=self.overruns,
            recording=self.recording,
            x=self.state.x,
            y=self.state.y,
            heading=self.state.heading,
            progress=progress,
            lateral=lateral,
            off_track=self.scenario.track.off_track(self.state.x, self.state.y),
            blocked=self.blocked,
        )
        self._prev_cmd = cmd
        self.latest_frame = frame
        self.latest_snapshot = snapshot
        if self.snapshot_sink is not None:
            self.snapshot_sink(snapshot)
        self.frame_id += 1
        self.tick_seconds.append(time.perf_counter() - t_start)
        return snapshot

    def run(self, ticks: int | None = None, laps: int | None = None,
            max_ticks: int | None = None, stop=None) -> TelemetrySnapshot | None:
        """Run until a tick/lap budget or a stop() predicate fires."""
        if ticks is None and laps is None and max_ticks is None and stop is None:
            raise LoopError("run() needs a stopping condition")
        dt = self.loop_cfg.dt
        done = 0
        last = self.latest_snapshot
        while True:
            if ticks is not None and done >= ticks:
                break
            if max_ticks is not None and self.frame_id >= max_ticks:
                break
            if laps is not None and self.lap >= laps:
                break
            if stop is not None and stop():
                break
            t0 = time.perf_counter()
            last = self.tick()
            done += 1
            if self.loop_cfg.wall_clock:
                elapsed = time.perf_counter() - t0
                if elapsed > dt:
                    self.overruns += 1
                else:
                    time.sleep(dt - elapsed)
        return last
