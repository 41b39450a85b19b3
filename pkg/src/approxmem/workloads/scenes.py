"""Procedural input streams with scene changes, plus PGM/PPM file input and output."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy import ndimage

from ..errors import ConfigurationError


@dataclass(frozen=True)
class SceneSpec:
    """One scene segment.

    Image scenes: smooth textured background plus random rectangles and discs,
    drifting by ``drift`` pixels per frame, with fresh Gaussian noise each frame.
    Option scenes reuse ``brightness`` as the mean spot price and ``contrast``
    as its spread.
    """

    frames: int
    texture: float = 20.0
    texture_scale: float = 8.0
    contrast: float = 100.0
    shapes: int = 8
    noise: float = 2.0
    drift: float = 0.0
    brightness: float = 110.0
    seed: int = 0

    @classmethod
    def from_dict(cls, raw: dict) -> "SceneSpec":
        names = {f.name for f in fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ConfigurationError(f"unknown scene keys: {sorted(unknown)}")
        return cls(**raw)


def _rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) & 0xFFFF_FFFF for k in key])))


def _base_image(spec: SceneSpec, width: int, height: int, channels: int, rng: np.random.Generator) -> np.ndarray:
    shape = (height, width) if channels == 1 else (height, width, channels)
    field = ndimage.gaussian_filter(rng.standard_normal((height, width)), spec.texture_scale, mode="wrap")
    field /= field.std() or 1.0
    tint = rng.uniform(0.6, 1.4, size=channels)
    img = np.empty(shape, dtype=np.float64)
    if channels == 1:
        img[:] = spec.brightness + spec.texture * field
    else:
        img[:] = (spec.brightness + spec.texture * field)[..., None] * tint
    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(spec.shapes):
        level = spec.brightness + rng.choice([-1.0, 1.0]) * spec.contrast * rng.uniform(0.5, 1.0)
        colour = level if channels == 1 else level * rng.uniform(0.5, 1.5, size=channels)
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        size = rng.uniform(0.05, 0.2) * min(width, height)
        if rng.random() < 0.5:
            mask = (np.abs(yy - cy) < size) & (np.abs(xx - cx) < size * rng.uniform(0.5, 2.0))
        else:
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 < size**2
        img[mask] = colour
    return img


def scene_sequence(
    scenes: Sequence[SceneSpec], width: int, height: int, channels: int = 1, seed: int = 0
) -> Iterator[np.ndarray]:
    """Yield uint8 frames scene after scene; scene ``i`` starts at ``sum(frames[:i])``."""
    if not scenes:
        raise ConfigurationError("scene list is empty")
    for i, spec in enumerate(scenes):
        if spec.frames <= 0:
            raise ConfigurationError("every scene needs at least one frame")
        base = _base_image(spec, width, height, channels, _rng(seed, spec.seed, i, 0))
        for t in range(spec.frames):
            shift = int(round(spec.drift * t))
            img = np.roll(base, shift, axis=1) if shift else base
            noise = _rng(seed, spec.seed, i, t + 1).standard_normal(img.shape) * spec.noise
            yield np.clip(np.rint(img + noise), 0, 255).astype(np.uint8)


def option_sequence(scenes: Sequence[SceneSpec], n_entries: int, seed: int = 0) -> Iterator[np.ndarray]:
    """Yield float32 option batches (spot, strike, rate, vol, time, put flag)."""
    if not scenes:
        raise ConfigurationError("scene list is empty")
    for i, spec in enumerate(scenes):
        if spec.frames <= 0:
            raise ConfigurationError("every scene needs at least one frame")
        for t in range(spec.frames):
            rng = _rng(seed, spec.seed, i, t + 1)
            spot = np.maximum(rng.normal(spec.brightness, spec.contrast / 4.0, n_entries), 1.0)
            batch = np.column_stack(
                [
                    spot,
                    spot * rng.uniform(0.7, 1.3, n_entries),
                    rng.uniform(0.01, 0.08, n_entries),
                    rng.uniform(0.05, 0.6, n_entries),
                    rng.uniform(0.1, 2.0, n_entries),
                    (rng.random(n_entries) < 0.5).astype(np.float64),
                ]
            )
            yield batch.astype(np.float32)


def scene_boundaries(scenes: Sequence[SceneSpec]) -> list[int]:
    return list(np.cumsum([0] + [s.frames for s in scenes[:-1]]))


def read_pnm(path: str | Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("L" if im.mode in ("1", "L", "I", "P") else "RGB"), dtype=np.uint8)


def write_pnm(path: str | Path, frame: np.ndarray) -> None:
    """Write a grayscale frame as PGM or an RGB frame as PPM (binary)."""
    from PIL import Image

    Image.fromarray(np.asarray(frame, dtype=np.uint8)).save(path, format="PPM")


def file_sequence(paths: Sequence[str | Path]) -> Iterator[np.ndarray]:
    if not paths:
        raise ConfigurationError("no input files given")
    for p in paths:
        yield read_pnm(p)
