"""Closed-loop track geometry, obstacles and scenario files.

A track is a closed centerline polyline with a lane width and bounding
box. The default track is a rounded rectangle tuned to a 12.0 m lap
inside a 5 m x 5 m area. Scenario files bundle a track with obstacles
and a spawn pose in a plain-text, versioned format (see FORMAT_VERSION
and `save_scenario` for the exact schema).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import project_point_to_segments, wrap_angle

FORMAT_VERSION = 1

DEFAULT_LANE_WIDTH = 0.6
DEFAULT_BOUNDS = (0.0, 0.0, 5.0, 5.0)


class ScenarioError(ValueError):
    """Raised for unusable tracks, obstacles or scenario files."""


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned box sitting on the ground plane."""

    center: tuple[float, float]
    width: float = 0.15
    depth: float = 0.15
    height: float = 0.15
    color: tuple[int, int, int] = (200, 40, 40)

    def corners(self) -> np.ndarray:
        """Footprint corners, (4, 2)."""
        cx, cy = self.center
        hw, hd = self.width / 2.0, self.depth / 2.0
        return np.array(
            [[cx - hw, cy - hd], [cx + hw, cy - hd], [cx + hw, cy + hd], [cx - hw, cy + hd]]
        )

    def corners3d(self) -> np.ndarray:
        """Box corners, (8, 3): bottom ring then top ring."""
        flat = self.corners()
        bottom = np.column_stack([flat, np.zeros(4)])
        top = np.column_stack([flat, np.full(4, self.height)])
        return np.vstack([bottom, top])

    def footprint_distance(self, x: float, y: float) -> float:
        """Euclidean distance from a point to the footprint (0 inside)."""
        cx, cy = self.center
        dx = max(abs(x - cx) - self.width / 2.0, 0.0)
        dy = max(abs(y - cy) - self.depth / 2.0, 0.0)
        return math.hypot(dx, dy)


@dataclass
class TrackDefinition:
    """Closed centerline loop with a lane width and an axis-aligned bound."""

    centerline: np.ndarray                     # (N, 2), first point == last point
    lane_width: float = DEFAULT_LANE_WIDTH
    bounds: tuple[float, float, float, float] = DEFAULT_BOUNDS
    name: str = "track"

    # derived segment tables, built once
    _starts: np.ndarray = field(init=False, repr=False)
    _ends: np.ndarray = field(init=False, repr=False)
    _seg_len: np.ndarray = field(init=False, repr=False)
    _cum_s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pts = np.asarray(self.centerline, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
            raise ScenarioError("centerline must be an (N, 2) array with N >= 4")
        if not np.allclose(pts[0], pts[-1], atol=1e-9):
            raise ScenarioError("centerline loop is not closed (first point != last point)")
        if self.lane_width <= 0.0:
            raise ScenarioError("lane_width must be positive")
        xmin, ymin, xmax, ymax = self.bounds
        if (pts[:, 0] < xmin - 1e-9).any() or (pts[:, 0] > xmax + 1e-9).any() \
                or (pts[:, 1] < ymin - 1e-9).any() or (pts[:, 1] > ymax + 1e-9).any():
            raise ScenarioError("centerline points fall outside the track bounds")
        self.centerline = pts
        self._starts = pts[:-1]
        self._ends = pts[1:]
        deltas = self._ends - self._starts
        self._seg_len = np.hypot(deltas[:, 0], deltas[:, 1])
        self._cum_s = np.concatenate([[0.0], np.cumsum(self._seg_len)])

    @property
    def length(self) -> float:
        """Total centerline length in meters."""
        return float(self._cum_s[-1])

    def lap_progress(self, x: float, y: float) -> tuple[float, float]:
        """Arc position and signed lateral offset of a point.

        Returns (s, lateral) with s in [0, length) measured along the
        centerline and lateral positive to the left of travel direction.
        """
        p = np.array([x, y])
        t, dist2 = project_point_to_segments(p, self._starts, self._ends)
        i = int(np.argmin(dist2))
        s = self._cum_s[i] + t[i] * self._seg_len[i]
        if s >= self.length:
            s -= self.length
        d = self._ends[i] - self._starts[i]
        proj = self._starts[i] + t[i] * d
        off = p - proj
        # positive z-cross of (travel direction x offset) means left of travel
        cross = d[0] * off[1] - d[1] * off[0]
        lateral = math.copysign(math.sqrt(dist2[i]), cross) if cross != 0.0 else 0.0
        return float(s), float(lateral)

    def off_track(self, x: float, y: float) -> bool:
        _, lateral = self.lap_progress(x, y)
        return abs(lateral) > self.lane_width / 2.0

    def point_at(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        """Centerline point and unit tangent at arc position s (wrapped)."""
        s = s % self.length
        i = int(np.searchsorted(self._cum_s, s, side="right")) - 1
        i = min(max(i, 0), len(self._seg_len) - 1)
        ds = s - self._cum_s[i]
        d = self._ends[i] - self._starts[i]
        tangent = d / self._seg_len[i]
        return self._starts[i] + tangent * ds, tangent

    def spawn_pose(self) -> tuple[float, float, float]:
        """Default spawn: start of the centerline, heading along it."""
        p, t = self.point_at(0.0)
        return float(p[0]), float(p[1]), wrap_angle(math.atan2(t[1], t[0]))


def rounded_rectangle_track(
    straight_x: float = 2.0,
    corner_radius: float = 0.8,
    target_length: float = 12.0,
    center: tuple[float, float] = (2.5, 2.5),
    lane_width: float = DEFAULT_LANE_WIDTH,
    bounds: tuple[float, float, float, float] = DEFAULT_BOUNDS,
    points_per_meter: float = 20.0,
    name: str = "default",
) -> TrackDefinition:
    """Counterclockwise rounded-rectangle loop of a given total length.

    The y-direction straight length is solved from the target length:
    L = 2*sx + 2*sy + 2*pi*r.
    """
    straight_y = (target_length - 2.0 * straight_x - 2.0 * math.pi * corner_radius) / 2.0
    if straight_y <= 0.0:
        raise ScenarioError("target length too short for the given straights and radius")
    cx, cy = center
    hx, hy = straight_x / 2.0, straight_y / 2.0
    r = corner_radius

    pieces: list[np.ndarray] = []

    def arc(ccx: float, ccy: float, a0: float, a1: float, n: int) -> np.ndarray:
        ang = np.linspace(a0, a1, n, endpoint=False)
        return np.stack([ccx + r * np.cos(ang), ccy + r * np.sin(ang)], axis=1)

    def line(p0: tuple[float, float], p1: tuple[float, float], n: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n, endpoint=False)
        return np.stack(
            [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])], axis=1
        )

    n_straight_x = max(2, int(round(straight_x * points_per_meter)))
    n_straight_y = max(2, int(round(straight_y * points_per_meter)))
    n_arc = max(8, int(round((math.pi / 2.0) * r * points_per_meter)))

    # bottom straight, then CCW: right arc, right straight, top arc, ...
    pieces.append(line((cx - hx, cy - hy - r), (cx + hx, cy - hy - r), n_straight_x))
    pieces.append(arc(cx + hx, cy - hy, -math.pi / 2.0, 0.0, n_arc))
    pieces.append(line((cx + hx + r, cy - hy), (cx + hx + r, cy + hy), n_straight_y))
    pieces.append(arc(cx + hx, cy + hy, 0.0, math.pi / 2.0, n_arc))
    pieces.append(line((cx + hx, cy + hy + r), (cx - hx, cy + hy + r), n_straight_x))
    pieces.append(arc(cx - hx, cy + hy, math.pi / 2.0, math.pi, n_arc))
    pieces.append(line((cx - hx - r, cy + hy), (cx - hx - r, cy - hy), n_straight_y))
    pieces.append(arc(cx - hx, cy - hy, math.pi, 1.5 * math.pi, n_arc))

    pts = np.concatenate(pieces, axis=0)
    pts = np.concatenate([pts, pts[:1]], axis=0)  # close the loop
    return TrackDefinition(pts, lane_width=lane_width, bounds=bounds, name=name)


@dataclass
class Scenario:
    """A track plus obstacles plus a spawn pose."""

    track: TrackDefinition
    obstacles: list[Obstacle] = field(default_factory=list)
    spawn: tuple[float, float, float] | None = None
    name: str = "scenario"

    def spawn_pose(self) -> tuple[float, float, float]:
        return self.spawn if self.spawn is not None else self.track.spawn_pose()

    def validate(self) -> None:
        """Reject obstacles that never touch the lane (decorative)."""
        for obs in self.obstacles:
            probe = np.concatenate([obs.corners(), [np.array(obs.center)]])
            if not any(
                abs(self.track.lap_progress(px, py)[1]) <= self.track.lane_width / 2.0
                for px, py in probe
            ):
                raise ScenarioError(
                    f"obstacle at {obs.center} does not intersect the lane"
                )


def obstacle_on_track(
    track: TrackDefinition, s: float, lateral: float, size: float = 0.15,
    color: tuple[int, int, int] = (200, 40, 40),
) -> Obstacle:
    """Place an obstacle at arc position s, offset laterally (left positive)."""
    p, tangent = track.point_at(s)
    normal = np.array([-tangent[1], tangent[0]])  # left of travel
    c = p + lateral * normal
    return Obstacle(center=(float(c[0]), float(c[1])), width=size, depth=size, height=size,
                    color=color)


def default_scenario(with_obstacles: bool = False) -> Scenario:
    """The stock 12 m rounded-rectangle scenario, optionally with two cubes."""
    track = rounded_rectangle_track()
    obstacles: list[Obstacle] = []
    name = "default"
    if with_obstacles:
        # offset to one side so the lane stays passable with default clearance
        obstacles = [
            obstacle_on_track(track, 3.2, +0.15),
            obstacle_on_track(track, 8.4, -0.15),
        ]
        name = "obstacles"
    scenario = Scenario(track=track, obstacles=obstacles, name=name)
    scenario.validate()
    return scenario


BUILTIN_SCENARIOS = ("default", "obstacles")


def builtin_scenario(name: str) -> Scenario:
    if name == "default":
        return default_scenario(False)
    if name == "obstacles":
        return default_scenario(True)
    raise ScenarioError(f"unknown scenario '{name}' (builtins: {', '.join(BUILTIN_SCENARIOS)})")


# ---------------------------------------------------------------------------
# scenario file format
# ---------------------------------------------------------------------------

def save_scenario(scenario: Scenario, path: str) -> None:
    """Write the plain-text scenario format.

    Layout: header key/value lines (`format_version`, `name`, `lane_width`,
    `bounds`, optional `spawn x y heading`), then a `centerline` block of
    `x y` lines closed by `end`, then zero or more `obstacle` blocks with
    `center`, `size` (width depth height) and `color` (r g b) lines.
    """
    track = scenario.track
    lines = [
        f"format_version {FORMAT_VERSION}",
        f"name {scenario.name}",
        f"lane_width {track.lane_width:.6f}",
        "bounds " + " ".join(f"{v:.6f}" for v in track.bounds),
    ]
    if scenario.spawn is not None:
        lines.append("spawn " + " ".join(f"{v:.9f}" for v in scenario.spawn))
    lines.append("centerline")
    lines.extend(f"{x:.9f} {y:.9f}" for x, y in track.centerline)
    lines.append("end")
    for obs in scenario.obstacles:
        lines.append("obstacle")
        lines.append(f"center {obs.center[0]:.9f} {obs.center[1]:.9f}")
        lines.append(f"size {obs.width:.6f} {obs.depth:.6f} {obs.height:.6f}")
        lines.append(f"color {obs.color[0]} {obs.color[1]} {obs.color[2]}")
        lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_scenario(path: str) -> Scenario:
    """Parse the format written by `save_scenario`."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = [ln.strip() for ln in fh]
    lines = [ln for ln in raw if ln and not ln.startswith("#")]

    header: dict[str, str] = {}
    points: list[tuple[float, float]] = []
    obstacles: list[Obstacle] = []
    i = 0
    try:
        while i < len(lines):
            line = lines[i]
            if line == "centerline":
                i += 1
                while lines[i] != "end":
                    xs, ys = lines[i].split()
                    points.append((float(xs), float(ys)))
                    i += 1
            elif line == "obstacle":
                i += 1
                fields: dict[str, list[float]] = {}
                while lines[i] != "end":
                    key, *vals = lines[i].split()
                    fields[key] = [float(v) for v in vals]
                    i += 1
                w, d, h = fields.get("size", [0.15, 0.15, 0.15])
                r, g, b = fields.get("color", [200, 40, 40])
                cx, cy = fields["center"]
                obstacles.append(
                    Obstacle(center=(cx, cy), width=w, depth=d, height=h,
                             color=(int(r), int(g), int(b)))
                )
            else:
                key, _, value = line.partition(" ")
                header[key] = value
            i += 1
    except (IndexError, KeyError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario file {path}: {exc}") from exc

    version = header.get("format_version")
    if version != str(FORMAT_VERSION):
        raise ScenarioError(f"unsupported scenario format_version {version!r}")
    if not points:
        raise ScenarioError("scenario file has no centerline block")

    bounds = tuple(float(v) for v in header.get(
        "bounds", " ".join(str(v) for v in DEFAULT_BOUNDS)).split())
    track = TrackDefinition(
        np.array(points),
        lane_width=float(header.get("lane_width", DEFAULT_LANE_WIDTH)),
        bounds=bounds,  # type: ignore[arg-type]
        name=header.get("name", "track"),
    )
    spawn = None
    if "spawn" in header:
        sx, sy, sh = (float(v) for v in header["spawn"].split())
        spawn = (sx, sy, sh)
    scenario = Scenario(track=track, obstacles=obstacles, spawn=spawn,
                        name=header.get("name", "scenario"))
    scenario.validate()
    return scenario


def resolve_scenario(spec: str, with_obstacles: bool = False) -> Scenario:
    """Resolve a CLI scenario argument: builtin name or file path."""
    import os

    if spec in BUILTIN_SCENARIOS:
        scenario = builtin_scenario(spec)
        if with_obstacles and spec == "default":
            scenario = builtin_scenario("obstacles")
        return scenario
    if os.path.exists(spec):
        scenario = load_scenario(spec)
        if with_obstacles and not scenario.obstacles:
            raise ScenarioError("--obstacles given but scenario file has none")
        return scenario
    raise ScenarioError(f"scenario '{spec}' is neither a builtin name nor a file")


__all__ = [
    "FORMAT_VERSION", "Obstacle", "Scenario", "ScenarioError", "TrackDefinition",
    "builtin_scenario", "default_scenario", "load_scenario", "obstacle_on_track",
    "resolve_scenario", "rounded_rectangle_track", "save_scenario",
]
