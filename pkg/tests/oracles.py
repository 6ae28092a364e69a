"""Independent brute-force oracles used to freeze expected values.

Everything here is deliberately naive: flood fill with an explicit queue,
per-pixel neighborhood scans, and all-pairs distance minima. None of it
shares code with the library implementations it checks.
"""
from __future__ import annotations

from collections import deque

import numpy as np

FOUR = ((-1, 0), (0, -1), (0, 1), (1, 0))
EIGHT = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def flood_fill_components(mask: np.ndarray, offsets=EIGHT) -> tuple[np.ndarray, int]:
    """Label connected True regions by BFS, visiting pixels in raster order."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int64)
    nxt = 0
    for y in range(h):
        for x in range(w):
            if m[y, x] and labels[y, x] == 0:
                nxt += 1
                queue = deque([(y, x)])
                labels[y, x] = nxt
                while queue:
                    cy, cx = queue.popleft()
                    for dy, dx in offsets:
                        ny, nx = cy + dy, cx + dx
                        if 0 <= ny < h and 0 <= nx < w and m[ny, nx] and labels[ny, nx] == 0:
                            labels[ny, nx] = nxt
                            queue.append((ny, nx))
    return labels, nxt


def boundary_scan(mask: np.ndarray) -> np.ndarray:
    """Pixels of mask with a 4-neighbor outside the mask or outside the grid."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            if not m[y, x]:
                continue
            for dy, dx in FOUR:
                ny, nx = y + dy, x + dx
                if not (0 <= ny < h and 0 <= nx < w) or not m[ny, nx]:
                    out[y, x] = True
                    break
    return out


def brute_edt(region: np.ndarray, boundary: np.ndarray) -> np.ndarray:
    """Min Euclidean distance from each region pixel to any boundary pixel."""
    reg = np.asarray(region, dtype=bool)
    bnd = np.argwhere(np.asarray(boundary, dtype=bool)).astype(np.int64)
    out = np.zeros(reg.shape)
    pix = np.argwhere(reg).astype(np.int64)
    if pix.size == 0:
        return out
    d2 = (pix[:, None, 0] - bnd[None, :, 0]) ** 2 + (pix[:, None, 1] - bnd[None, :, 1]) ** 2
    out[pix[:, 0], pix[:, 1]] = np.sqrt(d2.min(axis=1))
    return out


def se_offsets(shape: str, radius: int) -> list[tuple[int, int]]:
    offs = []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if shape == "square" or abs(dy) + abs(dx) <= radius:
                offs.append((dy, dx))
    return offs


def brute_dilate(mask: np.ndarray, shape: str, radius: int) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    out = np.zeros_like(m)
    for y, x in np.argwhere(m):
        for dy, dx in se_offsets(shape, radius):
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w:
                out[ny, nx] = True
    return out


def brute_erode(mask: np.ndarray, shape: str, radius: int) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    out = np.zeros_like(m)
    for y, x in np.argwhere(m):
        keep = True
        for dy, dx in se_offsets(shape, radius):
            ny, nx = y + dy, x + dx
            if not (0 <= ny < h and 0 <= nx < w) or not m[ny, nx]:
                keep = False
                break
        out[y, x] = keep
    return out


def brute_band(ids: np.ndarray, shape: str, radius: int) -> np.ndarray:
    """Per-instance morphological gradient, OR-aggregated."""
    ids = np.asarray(ids)
    band = np.zeros(ids.shape, dtype=bool)
    for m in range(1, int(ids.max(initial=0)) + 1):
        inst = ids == m
        if inst.any():
            band |= brute_dilate(inst, shape, radius) & ~brute_erode(inst, shape, radius)
    return band


def min_pixel_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Smallest Euclidean distance between two pixel sets."""
    pa = np.argwhere(np.asarray(a, dtype=bool)).astype(np.float64)
    pb = np.argwhere(np.asarray(b, dtype=bool)).astype(np.float64)
    d = np.hypot(pa[:, None, 0] - pb[None, :, 0], pa[:, None, 1] - pb[None, :, 1])
    return float(d.min())


def random_label_mask(
    rng: np.random.Generator, height: int = 64, width: int = 64, max_blobs: int = 8
) -> np.ndarray:
    """Union of random discs and rectangles as class 1 on background 0."""
    mask = np.zeros((height, width), dtype=np.uint16)
    yy, xx = np.mgrid[:height, :width]
    for _ in range(int(rng.integers(1, max_blobs + 1))):
        if rng.random() < 0.6:
            cy = int(rng.integers(0, height))
            cx = int(rng.integers(0, width))
            r = int(rng.integers(2, 9))
            mask[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = 1
        else:
            y0 = int(rng.integers(0, height - 3))
            x0 = int(rng.integers(0, width - 3))
            mask[y0 : y0 + int(rng.integers(2, 10)), x0 : x0 + int(rng.integers(2, 10))] = 1
    return mask
