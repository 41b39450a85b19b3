"""k-means colour clustering; the 8-bit pixel array lives in approximate memory."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import ConfigurationError
from ..memory_sim import Hierarchy
from .base import ApproxAllocator, Workload
from .quality import RMSE_MAX, rmse


def _init_centroids(px: np.ndarray, k: int, seed: int) -> np.ndarray:
    """``k`` distinct pixel positions drawn by a fixed seeded generator."""
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = np.sort(rng.choice(px.shape[0], size=min(k, px.shape[0]), replace=False))
    return px[idx].astype(np.float64)


def lloyd(load: Callable[[], np.ndarray], k: int, max_iter: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations; ``load`` is called once per iteration to fetch the pixels.

    Returns ``(labels, centroids)``. Ties go to the lowest cluster index and an
    empty cluster keeps its previous centroid.
    """
    px = load().astype(np.float64)
    cents = _init_centroids(px, k, seed)
    labels = None
    for it in range(max_iter):
        if it:
            px = load().astype(np.float64)
        d = ((px[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(cents)
        np.add.at(sums, labels, px)
        nz = counts > 0
        cents[nz] = sums[nz] / counts[nz, None]
    return labels, cents


def recolor(labels: np.ndarray, cents: np.ndarray, shape) -> np.ndarray:
    palette = np.clip(np.rint(cents), 0, 255).astype(np.uint8)
    return palette[labels].reshape(shape)


class KMeans(Workload):
    name = "kmeans"
    metric = "rmse"
    max_q = RMSE_MAX

    def __init__(self, width: int = 160, height: int = 120, k: int = 6, max_iter: int = 20, seed: int = 0):
        if width <= 0 or height <= 0 or k < 1:
            raise ConfigurationError("frame dimensions and k must be positive")
        self.width, self.height = width, height
        self.k, self.max_iter, self.seed = k, max_iter, seed

    def bind(self, h: Hierarchy) -> None:
        super().bind(h)
        self.addr = ApproxAllocator(h.region, h.line_bytes).malloc_approx(self.width * self.height * 3)

    def _check(self, frame: np.ndarray) -> None:
        if frame.shape != (self.height, self.width, 3) or frame.dtype != np.uint8:
            raise ConfigurationError(
                f"expected a {self.height}x{self.width}x3 uint8 frame, got {frame.shape} {frame.dtype}"
            )

    def run(self, h: Hierarchy, frame: np.ndarray) -> np.ndarray:
        self._check(frame)
        n = frame.size
        h.dma_write(self.addr, frame)
        labels, cents = lloyd(lambda: h.read_block(self.addr, n).reshape(-1, 3), self.k, self.max_iter, self.seed)
        return recolor(labels, cents, frame.shape)

    def golden(self, frame: np.ndarray) -> np.ndarray:
        self._check(frame)
        px = frame.reshape(-1, 3)
        labels, cents = lloyd(lambda: px, self.k, self.max_iter, self.seed)
        return recolor(labels, cents, frame.shape)

    def qos(self, golden_out, approx_out) -> float:
        return rmse(golden_out, approx_out)


def run_kmeans(h: Hierarchy, frame: np.ndarray, k: int = 6, **params) -> np.ndarray:
    w = KMeans(frame.shape[1], frame.shape[0], k=k, **params)
    w.bind(h)
    return w.run(h, frame)
