"""Small 2D geometry helpers shared by the simulator, tracks and pilots."""

from __future__ import annotations

import math

import numpy as np


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def polyline_lengths(points: np.ndarray) -> np.ndarray:
    """Per-segment lengths of a polyline given as an (N, 2) array."""
    deltas = np.diff(points, axis=0)
    return np.hypot(deltas[:, 0], deltas[:, 1])


def project_point_to_segments(
    point: np.ndarray, starts: np.ndarray, ends: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Project one point onto every segment.

    Returns (t, dist2): the clamped parameter along each segment in [0, 1]
    and the squared distance from the point to the projection.
    """
    d = ends - starts
    len2 = np.einsum("ij,ij->i", d, d)
    rel = point[None, :] - starts
    t = np.einsum("ij,ij->i", rel, d) / np.where(len2 > 0.0, len2, 1.0)
    t = np.clip(t, 0.0, 1.0)
    proj = starts + t[:, None] * d
    diff = point[None, :] - proj
    dist2 = np.einsum("ij,ij->i", diff, diff)
    return t, dist2


def points_segment_distance(
    points: np.ndarray, starts: np.ndarray, ends: np.ndarray
) -> np.ndarray:
    """Distance from each of P points to the nearest of S segments.

    points: (P, 2); starts/ends: (S, 2). Returns (P,) distances. Memory is
    O(P*S); callers prune the segment set first when P is a whole image.
    """
    d = ends - starts                                   # (S, 2)
    len2 = np.einsum("ij,ij->i", d, d)                  # (S,)
    rel = points[:, None, :] - starts[None, :, :]       # (P, S, 2)
    t = np.einsum("psj,sj->ps", rel, d) / np.where(len2 > 0.0, len2, 1.0)
    np.clip(t, 0.0, 1.0, out=t)
    diff = rel - t[:, :, None] * d[None, :, :]
    dist2 = np.einsum("psj,psj->ps", diff, diff)
    return np.sqrt(dist2.min(axis=1))
