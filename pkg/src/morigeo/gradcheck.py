"""Finite-difference verification of the analytic loss gradients.

Central differences over every input component give an oracle that is
independent of the analytic gradient path. The error metric per component
is |analytic - numeric| / max(|analytic|, |numeric|, 1e-3), which enforces
a relative bound where the gradient is appreciable and an absolute bound
of tol * 1e-3 where it is tiny.
"""
from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .grids import InstanceGrid, LabelGrid, connected_components
from .losses import LossResult, bal_wmse, boundary_bce, disentangle_loss, neighbor_pairs

LOSS_NAMES = ("disentangle", "dist", "boundary")
DEFAULT_STEP = 1e-4
DEFAULT_TOL = 1e-3
_REL_FLOOR = 1e-3


def random_instance_grid(
    rng: np.random.Generator, height: int, width: int, min_instances: int = 1
) -> InstanceGrid:
    """Small random blob layout with at least ``min_instances`` components."""
    for _ in range(64):
        mask = np.zeros((height, width), dtype=np.uint16)
        n_blobs = int(rng.integers(min_instances, min_instances + 3))
        for _ in range(n_blobs):
            cy = int(rng.integers(0, height))
            cx = int(rng.integers(0, width))
            radius = int(rng.integers(1, max(2, min(height, width) // 3)))
            yy, xx = np.ogrid[:height, :width]
            mask[(yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius] = 1
        inst = connected_components(LabelGrid(mask), class_id=1)
        if inst.num_instances >= min_instances:
            return inst
    raise RuntimeError("could not generate a random instance grid")


def central_difference(
    fn: Callable[[np.ndarray], float], x: np.ndarray, step: float = DEFAULT_STEP
) -> np.ndarray:
    """Central finite differences of a scalar function, one component at a time."""
    x = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + step
        f_plus = fn(x)
        xf[i] = orig - step
        f_minus = fn(x)
        xf[i] = orig
        flat[i] = (f_plus - f_minus) / (2.0 * step)
    return grad


def error_metric(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst per-component error, relative above 1e-3 magnitude, absolute below."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), _REL_FLOOR)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def _build_case(
    loss: str, rng: np.random.Generator, max_size: int, max_dim: int
) -> tuple[np.ndarray, Callable[[np.ndarray], LossResult]]:
    h = int(rng.integers(3, max_size + 1))
    w = int(rng.integers(3, max_size + 1))
    if loss == "disentangle":
        d = int(rng.integers(2, max_dim + 1))
        inst = random_instance_grid(rng, h, w, min_instances=2)
        r = rng.normal(0.0, 1.0, size=(h, w, d))
        norms = np.linalg.norm(r, axis=2)
        r[norms < 0.5, 0] += 1.0
        pairs = neighbor_pairs(inst, radius=float(h + w))
        lam = float(rng.uniform(0.5, 2.0))
        return r, lambda x: disentangle_loss(x, inst, pairs, lambda_sep=lam)
    if loss == "dist":
        inst = random_instance_grid(rng, h, w)
        pred = rng.uniform(-0.2, 1.2, size=(h, w))
        target = rng.uniform(0.0, 1.0, size=(h, w))
        return pred, lambda x: bal_wmse(x, target, inst)
    if loss == "boundary":
        logits = rng.normal(0.0, 2.0, size=(h, w))
        target = (rng.random((h, w)) < 0.3).astype(np.float64)
        return logits, lambda x: boundary_bce(x, target)
    raise ValueError(f"unknown loss: {loss!r}")


def check_loss_gradients(
    loss: str,
    seeds: int = 50,
    max_size: int = 16,
    max_dim: int = 8,
    step: float = DEFAULT_STEP,
    base_seed: int = 20240,
) -> float:
    """Max error metric over ``seeds`` random configurations of one loss."""
    if loss not in LOSS_NAMES:
        raise ValueError(f"loss must be one of {LOSS_NAMES}")
    worst = 0.0
    for k in range(seeds):
        rng = np.random.default_rng(base_seed + k)
        x, fn = _build_case(loss, rng, max_size, max_dim)
        analytic = fn(x).gradient
        numeric = central_difference(lambda v: fn(v).value, x, step=step)
        worst = max(worst, error_metric(analytic, numeric))
    return worst
