"""Forward-facing camera simulation.

Renders the view from a low, wide-angle camera mounted on the car: a
flat ground plane with painted lane lines, a center guide line, box
obstacles, and sky above the horizon. The renderer is deliberately
simple (no lighting, no textures) but geometrically honest: every
ground pixel is the true ray/plane intersection for a pinhole camera
at the car's pose, so line curvature, perspective and obstacle
placement behave like a real camera feed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .geometry import points_segment_distance
from .sim import VehicleState
from .track import Scenario

# palette, RGB uint8
SKY_COLOR = (135, 206, 235)
FLOOR_COLOR = (60, 60, 60)
BOUNDARY_COLOR = (240, 240, 240)
GUIDE_COLOR = (240, 200, 40)

BOUNDARY_HALF_WIDTH = 0.02  # painted lines are 4 cm wide
GUIDE_HALF_WIDTH = 0.02

_FIELD_RESOLUTION = 0.01  # m per distance-field cell
_FIELD_PAD = 0.5  # m of margin around scenario bounds


@dataclass(frozen=True)
class CameraModel:
    """Intrinsics and mounting of the front camera."""

    width: int = 160
    height: int = 120
    height_above_ground: float = 0.12
    pitch_down: float = 0.26
    horizontal_fov: float = 2.0
    near_clip: float = 0.05
    far_clip: float = 6.0

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2:
            raise ValueError("image must be at least 2x2")
        if not 0.0 < self.horizontal_fov < np.pi:
            raise ValueError("horizontal_fov must be in (0, pi)")
        if self.height_above_ground <= 0.0:
            raise ValueError("camera must sit above the ground")
        if not 0.0 < self.near_clip < self.far_clip:
            raise ValueError("need 0 < near_clip < far_clip")

    @property
    def focal_px(self) -> float:
        return (self.width / 2.0) / np.tan(self.horizontal_fov / 2.0)

    @property
    def horizon_row(self) -> float:
        """Image row (fractional) where ground rays become parallel.

        Pitching down moves the horizon above the image center: rows with
        (r - cy) / f <= -tan(pitch) see no ground.
        """
        cy = (self.height - 1) / 2.0
        return cy - self.focal_px * np.tan(self.pitch_down)


@dataclass(frozen=True)
class CameraFrame:
    """One rendered frame plus bookkeeping for logging."""

    pixels: np.ndarray  # (height, width, 3) uint8
    frame_id: int = 0
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError("pixels must be (H, W, 3) uint8")


class _DistanceField:
    """Bilinear lookup grid of distance to the track centerline.

    Building it costs one dense point-to-segment pass over the scenario
    bounds; after that every frame classifies ~10k ground points with a
    handful of vector ops instead of a points x segments product.
    """

    def __init__(self, scenario: Scenario, resolution: float = _FIELD_RESOLUTION):
        track = scenario.track
        xmin, ymin, xmax, ymax = track.bounds
        xmin -= _FIELD_PAD
        ymin -= _FIELD_PAD
        xmax += _FIELD_PAD
        ymax += _FIELD_PAD
        self.origin = np.array([xmin, ymin])
        self.resolution = resolution
        nx = int(np.ceil((xmax - xmin) / resolution)) + 1
        ny = int(np.ceil((ymax - ymin) / resolution)) + 1
        xs = xmin + np.arange(nx) * resolution
        ys = ymin + np.arange(ny) * resolution
        starts = track.centerline
        ends = np.roll(starts, -1, axis=0)
        grid = np.empty((ny, nx))
        # chunk rows to bound the (points x segments) temporary
        chunk = max(1, 2_000_000 // (nx * max(len(starts), 1)))
        for r0 in range(0, ny, chunk):
            r1 = min(ny, r0 + chunk)
            gx, gy = np.meshgrid(xs, ys[r0:r1])
            pts = np.column_stack([gx.ravel(), gy.ravel()])
            grid[r0:r1] = points_segment_distance(pts, starts, ends).reshape(r1 - r0, nx)
        self.grid = grid

    def sample(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Bilinear distance lookup; coordinates clamp to the grid edge."""
        gx = (x - self.origin[0]) / self.resolution
        gy = (y - self.origin[1]) / self.resolution
        ny, nx = self.grid.shape
        gx = np.clip(gx, 0.0, nx - 1.000001)
        gy = np.clip(gy, 0.0, ny - 1.000001)
        ix = gx.astype(np.intp)
        iy = gy.astype(np.intp)
        fx = gx - ix
        fy = gy - iy
        g = self.grid
        top = g[iy, ix] * (1.0 - fx) + g[iy, ix + 1] * fx
        bot = g[iy + 1, ix] * (1.0 - fx) + g[iy + 1, ix + 1] * fx
        return top * (1.0 - fy) + bot * fy


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, CCW in image coords. points is (N, 2)."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _fill_hull(image: np.ndarray, hull: np.ndarray, color: tuple[int, int, int]) -> None:
    """Scanline fill of a convex polygon, clipped to the image."""
    if len(hull) < 3:
        return
    h, w = image.shape[:2]
    ys = hull[:, 1]
    v0 = max(0, int(np.ceil(ys.min())))
    v1 = min(h - 1, int(np.floor(ys.max())))
    if v1 < v0:
        return
    edges = list(zip(hull, np.roll(hull, -1, axis=0)))
    col = np.array(color, dtype=np.uint8)
    for v in range(v0, v1 + 1):
        xs = []
        for (ax, ay), (bx, by) in edges:
            if ay == by:
                if ay == v:
                    xs.extend([ax, bx])
                continue
            lo, hi = (ay, by) if ay < by else (by, ay)
            if lo <= v <= hi:
                xs.append(ax + (v - ay) * (bx - ax) / (by - ay))
        if not xs:
            continue
        u0 = max(0, int(np.ceil(min(xs))))
        u1 = min(w - 1, int(np.floor(max(xs))))
        if u1 >= u0:
            image[v, u0 : u1 + 1] = col


class Renderer:
    """Renders CameraFrames for one scenario.

    Holds the precomputed centerline distance field, so construct one
    per scenario and reuse it across frames.
    """

    def __init__(self, scenario: Scenario, camera: CameraModel | None = None):
        self.scenario = scenario
        self.camera = camera or CameraModel()
        self._field = _DistanceField(scenario)
        cam = self.camera
        cy = (cam.height - 1) / 2.0
        cx = (cam.width - 1) / 2.0
        self._xc = (np.arange(cam.width) - cx) / cam.focal_px
        self._yc = (np.arange(cam.height) - cy) / cam.focal_px
        self._cx = cx
        self._cy = cy

    def render(self, state: VehicleState, frame_id: int = 0, timestamp: float = 0.0) -> CameraFrame:
        cam = self.camera
        H, W = cam.height, cam.width
        image = np.empty((H, W, 3), dtype=np.uint8)
        image[:] = SKY_COLOR

        sinp = np.sin(cam.pitch_down)
        cosp = np.cos(cam.pitch_down)
        sinh_ = np.sin(state.heading)
        cosh_ = np.cos(state.heading)

        denom = self._yc * cosp + sinp  # > 0 for rays that hit the ground
        ground_rows = np.nonzero(denom > 1e-9)[0]
        if ground_rows.size:
            r0 = ground_rows[0]
            yc = self._yc[r0:]
            xc = self._xc
            t = cam.height_above_ground / denom[r0:]  # (rows,)
            # world ray direction per pixel, camera basis expanded inline
            dx = xc[None, :] * sinh_ + (-yc[:, None] * sinp + cosp) * cosh_
            dy = xc[None, :] * (-cosh_) + (-yc[:, None] * sinp + cosp) * sinh_
            gx = state.x + t[:, None] * dx
            gy = state.y + t[:, None] * dy
            horiz = np.hypot(gx - state.x, gy - state.y)
            visible = horiz <= cam.far_clip

            dist = self._field.sample(gx, gy)
            half_lane = self.scenario.track.lane_width / 2.0
            block = np.empty(dist.shape + (3,), dtype=np.uint8)
            block[:] = FLOOR_COLOR
            block[np.abs(dist - half_lane) <= BOUNDARY_HALF_WIDTH] = BOUNDARY_COLOR
            block[dist <= GUIDE_HALF_WIDTH] = GUIDE_COLOR
            image[r0:][visible] = block[visible]

        self._draw_obstacles(image, state, sinp, cosp, sinh_, cosh_)
        return CameraFrame(pixels=image, frame_id=frame_id, timestamp=timestamp)

    def _draw_obstacles(self, image, state, sinp, cosp, sinh_, cosh_):
        cam = self.camera
        origin = np.array([state.x, state.y, cam.height_above_ground])
        # camera basis in world coords: right, down, forward
        x_cam = np.array([sinh_, -cosh_, 0.0])
        y_cam = np.array([-sinp * cosh_, -sinp * sinh_, -cosp])
        z_cam = np.array([cosp * cosh_, cosp * sinh_, -sinp])

        def distance(ob):
            return float(np.hypot(ob.center[0] - state.x, ob.center[1] - state.y))

        for ob in sorted(self.scenario.obstacles, key=distance, reverse=True):
            d = distance(ob)
            if d > cam.far_clip + max(ob.width, ob.depth):
                continue
            corners = ob.corners3d()  # (8, 3)
            rel = corners - origin
            zs = rel @ z_cam
            front = zs >= cam.near_clip
            if front.sum() < 3:
                continue
            rel = rel[front]
            zs = zs[front]
            us = self._cx + cam.focal_px * (rel @ x_cam) / zs
            vs = self._cy + cam.focal_px * (rel @ y_cam) / zs
            hull = _convex_hull(np.column_stack([us, vs]))
            _fill_hull(image, hull, ob.color)


def to_model_input(frame: CameraFrame | np.ndarray) -> np.ndarray:
    """Scale a frame to float64 in [0, 1], shape (H, W, 3)."""
    pixels = frame.pixels if isinstance(frame, CameraFrame) else frame
    if pixels.dtype != np.uint8:
        raise ValueError("expected uint8 pixels")
    return pixels.astype(np.float64) / 255.0


def encode_png(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_png(pixels: np.ndarray, path) -> None:
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")


def load_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)
