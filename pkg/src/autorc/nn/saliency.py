"""Input-gradient saliency for the steering output.

Answers "which pixels move the wheel": the absolute gradient of the
steering scalar with respect to the input image, reduced over color
channels by max and scaled to 0..255. For sequence models the map
covers the newest frame of the window.
"""

from __future__ import annotations

import numpy as np

from .models import Model


def saliency(model: Model, x: np.ndarray) -> np.ndarray:
    """(120,160) uint8 heatmap for one input sample.

    ``x`` is a single input in model layout: (H,W,3) for per-frame
    models, (T,H,W,3) for sequence models.
    """
    batched = np.ascontiguousarray(x[None, ...], dtype=np.float64)
    out = model.forward(batched, train=True)
    seed = np.zeros_like(out)
    seed[:, 0] = 1.0  # steering head only
    for p in model.params():
        p.zero_grad()
    dx = model.backward(seed)
    for p in model.params():
        p.zero_grad()
    grad = dx[0]
    if grad.ndim == 4:  # sequence input: newest frame
        grad = grad[-1]
    heat = np.abs(grad).max(axis=2)
    peak = heat.max()
    if peak > 0.0:
        heat = heat / peak * 255.0
    return heat.astype(np.uint8)


def overlay(frame_pixels: np.ndarray, heat: np.ndarray) -> np.ndarray:
    """50/50 blend of the camera frame with the heatmap in red."""
    if frame_pixels.shape[:2] != heat.shape:
        raise ValueError(
            f"frame {frame_pixels.shape[:2]} vs heatmap {heat.shape}"
        )
    colored = np.zeros_like(frame_pixels)
    colored[:, :, 0] = heat
    return ((frame_pixels.astype(np.uint16) + colored.astype(np.uint16)) // 2).astype(
        np.uint8
    )
