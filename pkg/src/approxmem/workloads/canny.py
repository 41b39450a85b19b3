"""Canny edge detection with the input image buffer in approximate memory.

Intermediate images are critical data and stay in exact memory; only the
non-critical input buffer is routed through the hierarchy.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import ConfigurationError
from ..memory_sim import Hierarchy
from .base import ApproxAllocator, Workload
from .quality import RMSE_MAX, rmse

_EIGHT = np.ones((3, 3), dtype=bool)


def gaussian_blur_u8(img: np.ndarray, sigma: float) -> np.ndarray:
    out = ndimage.gaussian_filter(img.astype(np.float32), sigma, mode="nearest")
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def edges_from_blurred(blurred: np.ndarray, low: float, high: float) -> np.ndarray:
    """Sobel gradients, non-maximum suppression and hysteresis; returns a 0/255 map."""
    f = blurred.astype(np.float32)
    gx = ndimage.sobel(f, axis=1, mode="nearest")
    gy = ndimage.sobel(f, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = ((angle + 22.5) // 45.0).astype(np.int8) % 4

    p = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    # neighbour offsets (row, col) along the gradient for each direction sector
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dr, dc) in offsets.items():
        fwd = p[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
        bwd = p[1 - dr : 1 - dr + h, 1 - dc : 1 - dc + w]
        keep |= (sector == s) & (mag >= fwd) & (mag >= bwd)
    nms = np.where(keep, mag, 0.0)

    weak = nms >= low
    strong = nms >= high
    labels, _ = ndimage.label(weak, structure=_EIGHT)
    seeds = np.unique(labels[strong])
    edges = np.isin(labels, seeds[seeds > 0])
    return edges.astype(np.uint8) * 255


def canny_reference(frame: np.ndarray, sigma: float = 1.4, low: float = 20.0, high: float = 50.0) -> np.ndarray:
    return edges_from_blurred(gaussian_blur_u8(frame, sigma), low, high)


class Canny(Workload):
    name = "canny"
    metric = "rmse"
    max_q = RMSE_MAX

    def __init__(self, width: int = 176, height: int = 144, sigma: float = 1.4, low: float = 20.0, high: float = 50.0):
        if width <= 0 or height <= 0:
            raise ConfigurationError("frame dimensions must be positive")
        self.width, self.height = width, height
        self.sigma, self.low, self.high = sigma, low, high

    def bind(self, h: Hierarchy) -> None:
        super().bind(h)
        self.in_addr = ApproxAllocator(h.region, h.line_bytes).malloc_approx(self.width * self.height)

    def _check(self, frame: np.ndarray) -> None:
        if frame.shape != (self.height, self.width) or frame.dtype != np.uint8:
            raise ConfigurationError(
                f"expected a {self.height}x{self.width} uint8 grayscale frame, got {frame.shape} {frame.dtype}"
            )

    def run(self, h: Hierarchy, frame: np.ndarray) -> np.ndarray:
        self._check(frame)
        shape, n = frame.shape, frame.size
        h.dma_write(self.in_addr, frame)
        img = h.read_block(self.in_addr, n).reshape(shape)
        return canny_reference(img, self.sigma, self.low, self.high)

    def golden(self, frame: np.ndarray) -> np.ndarray:
        self._check(frame)
        return canny_reference(frame, self.sigma, self.low, self.high)

    def qos(self, golden_out, approx_out) -> float:
        return rmse(golden_out, approx_out)


def run_canny(h: Hierarchy, frame: np.ndarray, **params) -> np.ndarray:
    """Run Canny on ``frame`` with its buffers at the start of ``h``'s approximate region."""
    w = Canny(frame.shape[1], frame.shape[0], **params)
    w.bind(h)
    return w.run(h, frame)
