"""Geometric supervision targets: distance fields and boundary bands.

Two per-pixel signals are derived from an instance grid: a normalized,
exponentially reshaped distance-to-boundary field (interior cue) and a
binary boundary band aggregated over all instances (interface cue).
All field arithmetic runs in float64; serialization truncates to float32.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from .grids import InstanceGrid, inner_boundary

_SE_SHAPES = ("square", "diamond")
# Larger than any squared pixel distance in a supported grid; kept exact in f64.
_FAR = float(2**40)


@dataclass(frozen=True)
class DistanceConfig:
    """Parameters of the distance target: sharpness ``alpha`` and guard ``epsilon``."""

    alpha: float = 3.0
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass(frozen=True)
class BoundaryConfig:
    """Band half-width (pixels) and structuring element shape."""

    band_half_width: int = 2
    se_shape: str = "square"

    def __post_init__(self) -> None:
        if int(self.band_half_width) < 1:
            raise ValueError("band_half_width must be >= 1")
        if self.se_shape not in _SE_SHAPES:
            raise ValueError(f"se_shape must be one of {_SE_SHAPES}")


def structuring_element(shape: str, radius: int) -> np.ndarray:
    """Boolean SE of the given radius: Chebyshev ball (square) or Manhattan ball (diamond)."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if shape == "square":
        return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    if shape == "diamond":
        r = np.abs(np.arange(-radius, radius + 1))
        return np.add.outer(r, r) <= radius
    raise ValueError(f"se_shape must be one of {_SE_SHAPES}")


def _envelope_1d(f: np.ndarray) -> np.ndarray:
    """Lower envelope of the parabolas x -> f[q] + (x - q)^2 at integer x."""
    n = f.shape[0]
    d = np.empty(n)
    v = np.zeros(n, dtype=np.intp)
    z = np.empty(n + 1)
    k = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for x in range(n):
        while z[k + 1] < x:
            k += 1
        q = v[k]
        d[x] = (x - q) * (x - q) + f[q]
    return d


def squared_edt(seeds: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance from every pixel to the nearest seed.

    Separable two-pass transform: per-column nearest-seed sweeps followed by
    a per-row lower envelope over the squared column distances. Squared
    distances between pixel centers are integers, so results are exact.
    """
    s = np.asarray(seeds, dtype=bool)
    h, w = s.shape
    g = np.where(s, 0.0, _FAR)
    for i in range(1, h):
        np.minimum(g[i], g[i - 1] + 1.0, out=g[i])
    for i in range(h - 2, -1, -1):
        np.minimum(g[i], g[i + 1] + 1.0, out=g[i])
    gsq = g * g
    out = np.empty((h, w))
    for i in range(h):
        out[i] = _envelope_1d(gsq[i])
    return out


def _bbox(mask: np.ndarray) -> tuple[slice, slice]:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1)


def exact_edt(region: np.ndarray, boundary: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance to the nearest boundary pixel, on region pixels.

    Returns a full-grid float64 field that is zero outside the region and on
    the boundary itself. Distances are true L2, not chamfer approximations.
    """
    reg = np.asarray(region, dtype=bool)
    bnd = np.asarray(boundary, dtype=bool)
    if reg.shape != bnd.shape:
        raise ValueError("region and boundary shapes differ")
    if not bnd.any():
        raise ValueError("degenerate region: empty boundary")
    if (bnd & ~reg).any():
        raise ValueError("boundary must be a subset of the region")
    out = np.zeros(reg.shape)
    sl = _bbox(reg)
    sq = squared_edt(bnd[sl])
    local = reg[sl]
    out[sl][local] = np.sqrt(sq[local])
    return out


def normalized_distance_field(inst: InstanceGrid, cfg: DistanceConfig) -> np.ndarray:
    """Per-instance distance to boundary, normalized by that instance's maximum.

    Each instance is normalized independently: x = edt / (max edt + epsilon),
    which keeps values in [0, 1) and sends single-pixel instances to zero.
    Background stays exactly zero.
    """
    out = np.zeros(inst.shape)
    objects = ndi.find_objects(inst.ids)
    for m, sl in enumerate(objects, start=1):
        if sl is None:
            continue
        # Working inside the tight bbox is exact: pixels beyond it are never
        # part of the instance, so the crop edge behaves like "outside".
        local = inst.ids[sl] == m
        sq = squared_edt(inner_boundary(local))
        d = np.sqrt(sq[local])
        out[sl][local] = d / (d.max() + cfg.epsilon)
    return out


def exp_reparameterize(x: np.ndarray, alpha: float) -> np.ndarray:
    """Monotone convex remap d = (exp(alpha * x) - 1) / (exp(alpha) - 1).

    Fixes d(0) = 0 and d(1) = 1 while damping variation near the boundary;
    requires x in [0, 1] and alpha > 0.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("x values must lie in [0, 1]")
    return np.expm1(alpha * arr) / np.expm1(alpha)


def boundary_band(inst: InstanceGrid, cfg: BoundaryConfig) -> np.ndarray:
    """Binary band map: OR over per-instance morphological gradients.

    Each instance contributes dilation minus erosion by the configured SE.
    Bands are computed per instance before aggregation so interfaces between
    touching instances are marked. Erosion treats off-grid as background;
    dilation never extends past the grid.
    """
    se = structuring_element(cfg.se_shape, int(cfg.band_half_width))
    r = int(cfg.band_half_width)
    band = np.zeros(inst.shape, dtype=bool)
    objects = ndi.find_objects(inst.ids)
    h, w = inst.shape
    for m, sl in enumerate(objects, start=1):
        if sl is None:
            continue
        # Pad the bbox by the SE radius (clipped to the grid) so dilation has room.
        rs = slice(max(sl[0].start - r, 0), min(sl[0].stop + r, h))
        cs = slice(max(sl[1].start - r, 0), min(sl[1].stop + r, w))
        local = inst.ids[rs, cs] == m
        dil = ndi.binary_dilation(local, structure=se)
        ero = ndi.binary_erosion(local, structure=se, border_value=0)
        band[rs, cs] |= dil & ~ero
    return band.astype(np.float64)


def gen_targets(
    inst: InstanceGrid, dcfg: DistanceConfig, bcfg: BoundaryConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Distance target and boundary band for one instance grid."""
    dist = exp_reparameterize(normalized_distance_field(inst, dcfg), dcfg.alpha)
    band = boundary_band(inst, bcfg)
    return dist, band
