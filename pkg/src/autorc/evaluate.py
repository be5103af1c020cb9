"""Closed-loop evaluation: drive N laps, measure, compare to references.

The report carries per-lap time/distance/speed, off-track and collision
counts, and an abort reason if the run ended early. Summaries print the
reference lines (28.4 s lap, 0.42 m/s cruise) next to the measured
numbers so regressions are visible at a glance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .loop import DriveLoop, LoopConfig
from .pilots import CAR_HALF_WIDTH, ExpertConfig
from .sim import SimConfig
from .track import Scenario

REFERENCE_LAP_SECONDS = 28.4
REFERENCE_SPEED_MPS = 0.42


class EvalError(RuntimeError):
    pass


@dataclass(frozen=True)
class LapStats:
    index: int
    seconds: float
    distance: float

    @property
    def mean_speed(self) -> float:
        return self.distance / self.seconds if self.seconds > 0 else 0.0


@dataclass
class EvalReport:
    scenario: str
    pilot: str
    laps_requested: int
    laps_completed: int = 0
    lap_stats: list[LapStats] = field(default_factory=list)
    total_seconds: float = 0.0
    total_distance: float = 0.0
    off_track_events: int = 0
    collisions: int = 0
    aborted: str | None = None

    @property
    def mean_speed(self) -> float:
        return self.total_distance / self.total_seconds if self.total_seconds > 0 else 0.0

    @property
    def completed(self) -> bool:
        return self.laps_completed >= self.laps_requested and self.aborted is None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["lap", "seconds", "distance_m", "mean_speed_mps"])
            for lap in self.lap_stats:
                w.writerow([lap.index, f"{lap.seconds:.3f}", f"{lap.distance:.3f}",
                            f"{lap.mean_speed:.4f}"])
            w.writerow(["total", f"{self.total_seconds:.3f}",
                        f"{self.total_distance:.3f}", f"{self.mean_speed:.4f}"])

    def summary(self) -> str:
        lines = [
            f"scenario {self.scenario!r}, pilot {self.pilot}: "
            f"{self.laps_completed}/{self.laps_requested} laps"
            + (f" (aborted: {self.aborted})" if self.aborted else "")
        ]
        for lap in self.lap_stats:
            lines.append(
                f"  lap {lap.index}: {lap.seconds:6.2f} s  {lap.distance:6.2f} m"
                f"  {lap.mean_speed:.3f} m/s"
            )
        lines.append(
            f"  mean speed {self.mean_speed:.3f} m/s"
            f"  (reference {REFERENCE_SPEED_MPS} m/s)"
        )
        if self.lap_stats:
            mean_lap = sum(l.seconds for l in self.lap_stats) / len(self.lap_stats)
            lines.append(
                f"  mean lap  {mean_lap:6.2f} s   (reference"
                f" {REFERENCE_LAP_SECONDS} s)"
            )
        lines.append(
            f"  off-track events {self.off_track_events}, collisions {self.collisions}"
        )
        return "\n".join(lines)


def evaluate(
    scenario: Scenario,
    laps: int = 3,
    model=None,
    sim_cfg: SimConfig | None = None,
    expert_cfg: ExpertConfig | None = None,
    loop_cfg: LoopConfig | None = None,
    max_ticks_per_lap: int = 1800,
    stop_on_incident: bool = True,
) -> EvalReport:
    """Drive ``laps`` laps with the expert (default) or a model.

    Stops early on the first off-track excursion or obstacle collision
    when ``stop_on_incident`` (incidents are still counted otherwise).
    """
    if laps < 1:
        raise EvalError("laps must be >= 1")
    x, y, heading = scenario.spawn_pose()
    if scenario.track.off_track(x, y):
        raise EvalError(f"bad spawn: ({x:.2f}, {y:.2f}) is outside the lane")

    loop = DriveLoop(scenario, sim_cfg=sim_cfg, loop_cfg=loop_cfg,
                     expert_cfg=expert_cfg, model=model)
    pilot = "expert"
    if model is not None:
        loop.set_mode("auto")
        pilot = "auto"
    else:
        loop.set_mode("expert")

    report = EvalReport(scenario=scenario.name, pilot=pilot, laps_requested=laps)
    dt = loop.sim_cfg.dt
    max_ticks = max_ticks_per_lap * laps
    was_off = False
    was_hit = False
    lap_distance = 0.0
    lap_ticks = 0

    while loop.lap < laps:
        if loop.frame_id >= max_ticks:
            report.aborted = "timeout"
            break
        prev_speed = loop.state.speed
        prev_lap = loop.lap
        snap = loop.tick()
        step_dist = abs(prev_speed) * dt
        report.total_seconds += dt
        report.total_distance += step_dist
        lap_distance += step_dist
        lap_ticks += 1

        if snap.lap > prev_lap:
            report.laps_completed = snap.lap
            report.lap_stats.append(
                LapStats(index=snap.lap, seconds=loop.lap_times[-1],
                         distance=lap_distance)
            )
            lap_distance = 0.0
            lap_ticks = 0

        if snap.off_track:
            if not was_off:
                report.off_track_events += 1
                was_off = True
                if stop_on_incident:
                    report.aborted = "off_track"
                    break
        else:
            was_off = False

        hit = any(
            ob.footprint_distance(snap.x, snap.y) <= CAR_HALF_WIDTH
            for ob in scenario.obstacles
        )
        if hit:
            if not was_hit:
                report.collisions += 1
                was_hit = True
                if stop_on_incident:
                    report.aborted = "collision"
                    break
        else:
            was_hit = False

        if snap.blocked:
            report.aborted = "blocked"
            break

    return report
