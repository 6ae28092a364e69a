"""Synthetic scenes of touching and isolated shapes for recovery experiments.

Each scene carries the true instance grid plus the merged single-class
semantic mask. Scene generation is reproducible: per-scene generators are
spawned from one seed sequence, so results do not depend on how many
worker threads build scenes.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from .grids import InstanceGrid, LabelGrid, merge_to_semantic, relabel_by_raster_order

_SHAPE_KINDS = ("disc", "ellipse", "mixed")
_MIN_SHAPE_AREA = 12
_PLACE_TRIES = 40
_SCENE_TRIES = 64


@dataclass(frozen=True)
class SynthConfig:
    """Scene generator parameters."""

    num_scenes: int
    height: int = 96
    width: int = 96
    shapes: str = "ellipse"
    instances_per_scene: tuple[int, int] = (2, 5)
    touch_probability: float = 0.7
    rng_seed: int = 0
    radius_range: tuple[float, float] = (5.0, 11.0)

    def __post_init__(self) -> None:
        if self.num_scenes < 1:
            raise ValueError("num_scenes must be >= 1")
        if self.height < 8 or self.width < 8:
            raise ValueError("grid must be at least 8x8")
        if self.shapes not in _SHAPE_KINDS:
            raise ValueError(f"shapes must be one of {_SHAPE_KINDS}")
        lo, hi = self.instances_per_scene
        if lo < 1 or hi < lo:
            raise ValueError("instances_per_scene range must be nonempty")
        if not 0.0 <= self.touch_probability <= 1.0:
            raise ValueError("touch_probability must lie in [0, 1]")
        rlo, rhi = self.radius_range
        if rlo < 2.0 or rhi < rlo:
            raise ValueError("radius_range must be nonempty with minimum >= 2")


@dataclass(frozen=True)
class Scene:
    """One generated sample: merged semantic mask plus true instances."""

    semantic: LabelGrid
    instances: InstanceGrid


def rasterize_ellipse(
    height: int,
    width: int,
    cy: int,
    cx: int,
    a: float,
    b: float,
    theta: float,
) -> np.ndarray:
    """Pixels whose integer centers satisfy the rotated ellipse inequality."""
    extent = int(np.ceil(max(a, b))) + 1
    y0, y1 = max(cy - extent, 0), min(cy + extent + 1, height)
    x0, x1 = max(cx - extent, 0), min(cx + extent + 1, width)
    mask = np.zeros((height, width), dtype=bool)
    if y0 >= y1 or x0 >= x1:
        return mask
    yy, xx = np.mgrid[y0:y1, x0:x1]
    dy = yy - cy
    dx = xx - cx
    u = dx * np.cos(theta) + dy * np.sin(theta)
    v = -dx * np.sin(theta) + dy * np.cos(theta)
    mask[y0:y1, x0:x1] = (u / a) ** 2 + (v / b) ** 2 <= 1.0
    return mask


def _dilate1(mask: np.ndarray) -> np.ndarray:
    return ndi.binary_dilation(mask, structure=np.ones((3, 3), dtype=bool))


def _shape_params(rng: np.random.Generator, cfg: SynthConfig) -> tuple[float, float, float]:
    kind = cfg.shapes
    if kind == "mixed":
        kind = "disc" if rng.random() < 0.5 else "ellipse"
    rlo, rhi = cfg.radius_range
    if kind == "disc":
        r = float(rng.uniform(rlo, rhi))
        return r, r, 0.0
    a = float(rng.uniform(rlo, rhi))
    b = float(rng.uniform(rlo, rhi))
    # Keep eccentricity moderate so rasterized shapes stay plump enough to
    # carry an interior distance core.
    b = max(b, 0.5 * a, 3.2)
    theta = float(rng.uniform(0.0, np.pi))
    return a, b, theta


def _in_bounds(cfg: SynthConfig, cy: int, cx: int, a: float, b: float) -> bool:
    ext = int(np.ceil(max(a, b)))
    return (
        ext <= cy < cfg.height - ext and ext <= cx < cfg.width - ext
    )


def _shape_ok(mask: np.ndarray) -> bool:
    if int(mask.sum()) < _MIN_SHAPE_AREA:
        return False
    _, n = ndi.label(mask, structure=np.ones((3, 3), dtype=bool))
    return n == 1


def _place_isolated(
    rng: np.random.Generator, cfg: SynthConfig, occupied: np.ndarray
) -> np.ndarray | None:
    for _ in range(_PLACE_TRIES):
        cy = int(rng.integers(0, cfg.height))
        cx = int(rng.integers(0, cfg.width))
        a, b, theta = _shape_params(rng, cfg)
        if not _in_bounds(cfg, cy, cx, a, b):
            continue
        mask = rasterize_ellipse(cfg.height, cfg.width, cy, cx, a, b, theta)
        if not _shape_ok(mask):
            continue
        # Chebyshev gap >= 2 keeps 8-connected components separate.
        if not (_dilate1(mask) & occupied).any():
            return mask
    return None


def _place_touching(
    rng: np.random.Generator,
    cfg: SynthConfig,
    occupied: np.ndarray,
    targets: list[np.ndarray],
) -> np.ndarray | None:
    for _ in range(_PLACE_TRIES):
        target = targets[int(rng.integers(0, len(targets)))]
        rows, cols = np.nonzero(target)
        ty = float(rows.mean())
        tx = float(cols.mean())
        angle = float(rng.uniform(0.0, 2.0 * np.pi))
        a, b, theta = _shape_params(rng, cfg)
        start = int(np.ceil(2.0 * cfg.radius_range[1])) + 3
        # Slide the shape toward the target centroid one pixel at a time.
        # The candidate just before the first overlap is adjacent, because
        # an integer translation changes the Chebyshev gap by at most one.
        prev = None
        for dist in range(start, 0, -1):
            cy = int(round(ty + dist * np.sin(angle)))
            cx = int(round(tx + dist * np.cos(angle)))
            mask = rasterize_ellipse(cfg.height, cfg.width, cy, cx, a, b, theta)
            if (mask & occupied).any():
                if prev is not None and (_dilate1(prev) & target).any():
                    return prev
                break
            prev = mask if _shape_ok(mask) and _in_bounds(cfg, cy, cx, a, b) else None
    return None


def _build_scene(rng: np.random.Generator, cfg: SynthConfig) -> Scene:
    lo, hi = cfg.instances_per_scene
    for _ in range(_SCENE_TRIES):
        n = int(rng.integers(lo, hi + 1))
        ids = np.zeros((cfg.height, cfg.width), dtype=np.int64)
        masks: list[np.ndarray] = []
        ok = True
        for k in range(n):
            occupied = ids > 0
            touch = bool(masks) and rng.random() < cfg.touch_probability
            if touch:
                mask = _place_touching(rng, cfg, occupied, masks)
            else:
                mask = _place_isolated(rng, cfg, occupied)
            if mask is None:
                ok = False
                break
            ids[mask] = k + 1
            masks.append(mask)
        if ok:
            inst = InstanceGrid.from_ids(relabel_by_raster_order(ids))
            return Scene(semantic=merge_to_semantic(inst, 1), instances=inst)
    raise RuntimeError("could not place a feasible scene; loosen the configuration")


def synth(cfg: SynthConfig, threads: int = 1) -> list[Scene]:
    """Generate scenes reproducibly; thread count never changes the output."""
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.num_scenes)
    if threads <= 1:
        return [_build_scene(np.random.default_rng(s), cfg) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(_build_scene, np.random.default_rng(s), cfg) for s in seeds]
        return [f.result() for f in futures]
