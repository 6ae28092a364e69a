"""Auxiliary losses with analytic gradients.

Three objectives drive the geometric supervision: a prototype-based
disentanglement loss over pixel embeddings, a foreground/background
balanced MSE for distance regression, and a reweighted logit BCE for
boundary prediction. Every loss returns its value together with the exact
gradient with respect to the differentiated input so that callers (and the
finite-difference checker) can consume both. Accumulations run in raster
order for bit-reproducibility.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .grids import InstanceGrid

_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Nonnegative weights combining the individual objectives."""

    lambda_sep: float = 1.0
    lambda_feature: float = 1.0
    lambda_reg: float = 1.0
    lambda_bd: float = 1.0

    def __post_init__(self) -> None:
        for name in ("lambda_sep", "lambda_feature", "lambda_reg", "lambda_bd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class NeighborPairs:
    """Unordered instance-id pairs within a locality radius."""

    pairs: tuple[tuple[int, int], ...]
    radius: float

    def __post_init__(self) -> None:
        seen = set()
        for m, n in self.pairs:
            if m == n:
                raise ValueError("self-pairs are not allowed")
            key = (min(m, n), max(m, n))
            if key in seen:
                raise ValueError("duplicate pairs are not allowed")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class LossResult:
    """Scalar loss value plus the gradient w.r.t. the differentiated input."""

    value: float
    gradient: np.ndarray


def _check_embeddings(embeddings: np.ndarray, inst: InstanceGrid) -> np.ndarray:
    r = np.asarray(embeddings, dtype=np.float64)
    if r.ndim != 3 or r.shape[2] < 2:
        raise ValueError("embeddings must be (H, W, D) with D >= 2")
    if r.shape[:2] != inst.shape:
        raise ValueError("embedding and instance grid shapes differ")
    if not np.isfinite(r).all():
        raise ValueError("embeddings must be finite")
    return r


def normalize_embeddings(embeddings: np.ndarray, fg: InstanceGrid) -> np.ndarray:
    """L2-normalize per-pixel embeddings on foreground; zero the background."""
    r = _check_embeddings(embeddings, fg)
    fg_mask = fg.foreground()
    norms = np.linalg.norm(r, axis=2)
    if (norms[fg_mask] < _NORM_FLOOR).any():
        raise ValueError("degenerate embedding: near-zero norm on foreground")
    psi = np.zeros_like(r)
    psi[fg_mask] = r[fg_mask] / norms[fg_mask, None]
    return psi


def instance_prototypes(psi: np.ndarray, inst: InstanceGrid) -> np.ndarray:
    """Unit prototype per instance: normalized sum of its pixel embeddings.

    Returns an (M, D) array; row m-1 is the prototype of instance m.
    """
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape[:2] != inst.shape:
        raise ValueError("embedding and instance grid shapes differ")
    m = inst.num_instances
    d = psi.shape[2]
    sums = np.zeros((m, d))
    flat = inst.ids.ravel()
    sel = flat > 0
    np.add.at(sums, flat[sel] - 1, psi.reshape(-1, d)[sel])
    norms = np.linalg.norm(sums, axis=1)
    if (norms < _NORM_FLOOR).any():
        raise ValueError("degenerate prototype: embedding sum cancels")
    return sums / norms[:, None]


def neighbor_pairs(inst: InstanceGrid, radius: float) -> NeighborPairs:
    """Instance pairs whose minimum inter-pixel Euclidean distance is <= radius."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    coords = [None] + [
        np.argwhere(inst.ids == m).astype(np.int64)
        for m in range(1, inst.num_instances + 1)
    ]
    boxes = [None] + [
        (c[:, 0].min(), c[:, 0].max(), c[:, 1].min(), c[:, 1].max()) for c in coords[1:]
    ]
    rsq = float(radius) * float(radius)
    pairs: list[tuple[int, int]] = []
    for m in range(1, inst.num_instances + 1):
        for n in range(m + 1, inst.num_instances + 1):
            bm, bn = boxes[m], boxes[n]
            gap_r = max(bn[0] - bm[1], bm[0] - bn[1], 0)
            gap_c = max(bn[2] - bm[3], bm[2] - bn[3], 0)
            if gap_r * gap_r + gap_c * gap_c > rsq:
                continue
            diff_r = coords[m][:, None, 0] - coords[n][None, :, 0]
            diff_c = coords[m][:, None, 1] - coords[n][None, :, 1]
            min_sq = (diff_r * diff_r + diff_c * diff_c).min()
            if min_sq <= rsq:
                pairs.append((m, n))
    return NeighborPairs(pairs=tuple(pairs), radius=float(radius))


def disentangle_loss(
    embeddings: np.ndarray,
    inst: InstanceGrid,
    pairs: NeighborPairs,
    lambda_sep: float = 1.0,
) -> LossResult:
    """Prototype pull plus neighbor-prototype orthogonality penalty.

    value = (1/M) sum_m mean_{u in S_m} (1 - cos(psi_u, pi_m))
          + lambda_sep * (1/|A|) sum_{(m,n) in A} |pi_m . pi_n|

    The gradient is taken w.r.t. the raw embeddings and chains through both
    the per-pixel normalization Jacobian and the prototype construction
    (prototypes are not treated as constants). With no neighbor pairs the
    separation term contributes zero.
    """
    if lambda_sep < 0:
        raise ValueError("lambda_sep must be >= 0")
    r = _check_embeddings(embeddings, inst)
    grad = np.zeros_like(r)
    m_count = inst.num_instances
    if m_count == 0:
        return LossResult(value=0.0, gradient=grad)

    psi = normalize_embeddings(r, inst)
    d = r.shape[2]
    flat_ids = inst.ids.ravel()
    sel = flat_ids > 0
    pix_inst = flat_ids[sel] - 1
    psi_fg = psi.reshape(-1, d)[sel]

    sums = np.zeros((m_count, d))
    np.add.at(sums, pix_inst, psi_fg)
    sum_norms = np.linalg.norm(sums, axis=1)
    if (sum_norms < _NORM_FLOOR).any():
        raise ValueError("degenerate prototype: embedding sum cancels")
    protos = sums / sum_norms[:, None]
    areas = np.bincount(pix_inst, minlength=m_count).astype(np.float64)

    # Pull term, accumulated in raster order over foreground pixels.
    per_pixel = 1.0 - np.einsum("ud,ud->u", psi_fg, protos[pix_inst])
    pull = float(np.sum(per_pixel / (areas[pix_inst] * m_count)))

    # d(loss)/d(prototype): pull contribution plus separation contribution.
    g_proto = -sums / (m_count * areas[:, None])
    sep = 0.0
    if len(pairs) > 0 and lambda_sep > 0:
        scale = lambda_sep / len(pairs)
        for m, n in pairs.pairs:
            if not (1 <= m <= m_count and 1 <= n <= m_count):
                raise ValueError(f"unknown instance in pair: ({m}, {n})")
            dot = float(protos[m - 1] @ protos[n - 1])
            sep += scale * abs(dot)
            s = np.sign(dot)
            g_proto[m - 1] += scale * s * protos[n - 1]
            g_proto[n - 1] += scale * s * protos[m - 1]

    # Chain through pi = s / |s|: for every pixel of instance m the prototype
    # path contributes (I - pi pi^T) g_proto / |s|, identical across pixels.
    g_psi_proto = (
        g_proto - protos * np.einsum("md,md->m", protos, g_proto)[:, None]
    ) / sum_norms[:, None]
    g_psi = -protos[pix_inst] / (m_count * areas[pix_inst, None]) + g_psi_proto[pix_inst]

    # Chain through psi = r / |r|.
    r_fg = r.reshape(-1, d)[sel]
    r_norms = np.linalg.norm(r_fg, axis=1)
    g_r = (g_psi - psi_fg * np.einsum("ud,ud->u", psi_fg, g_psi)[:, None]) / r_norms[:, None]

    grad_flat = grad.reshape(-1, d)
    grad_flat[sel] = g_r
    return LossResult(value=pull + sep, gradient=grad)


def bal_wmse(pred: np.ndarray, target: np.ndarray, inst: InstanceGrid) -> LossResult:
    """Balanced weighted MSE: average of foreground-mean and background-mean errors.

    Each set is normalized by its own cardinality so neither dominates; if one
    set is empty its term is dropped and the other receives full weight.
    """
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape or p.shape != inst.shape:
        raise ValueError("pred, target, and instance grid shapes differ")
    if t.size and (t.min() < 0.0 or t.max() > 1.0):
        raise ValueError("target values must lie in [0, 1]")
    fg = inst.foreground()
    bg = ~fg
    n_fg = int(fg.sum())
    n_bg = int(bg.sum())
    err = p - t
    grad = np.zeros_like(p)
    if n_fg and n_bg:
        w_fg = w_bg = 0.5
    else:
        w_fg, w_bg = (1.0, 0.0) if n_fg else (0.0, 1.0)
    value = 0.0
    if n_fg:
        value += w_fg * float(np.sum(err[fg] ** 2)) / n_fg
        grad[fg] = 2.0 * w_fg * err[fg] / n_fg
    if n_bg:
        value += w_bg * float(np.sum(err[bg] ** 2)) / n_bg
        grad[bg] = 2.0 * w_bg * err[bg] / n_bg
    return LossResult(value=value, gradient=grad)


def auto_pos_weight(target: np.ndarray) -> float:
    """Negative/positive pixel ratio clamped to [1, 100]; 1 when either set is empty."""
    t = np.asarray(target)
    n_pos = int(np.count_nonzero(t))
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return 1.0
    return float(min(max(n_neg / n_pos, 1.0), 100.0))


def boundary_bce(
    logits: np.ndarray, target: np.ndarray, pos_weight: float | None = None
) -> LossResult:
    """Reweighted binary cross-entropy on logits, in the stable softplus form.

    value = mean_u [ pos_weight * y_u * softplus(-z_u) + (1 - y_u) * softplus(z_u) ]

    ``pos_weight=None`` selects the automatic negatives/positives ratio.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if z.shape != y.shape:
        raise ValueError("logits and target shapes differ")
    if not np.isfinite(z).all():
        raise ValueError("logits must be finite")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("target must be binary")
    pw = auto_pos_weight(y) if pos_weight is None else float(pos_weight)
    if pw < 0:
        raise ValueError("pos_weight must be >= 0")
    softplus_pos = np.logaddexp(0.0, z)
    softplus_neg = np.logaddexp(0.0, -z)
    n = z.size
    value = float(np.sum(pw * y * softplus_neg + (1.0 - y) * softplus_pos)) / n
    sig = expit(z)
    grad = ((1.0 - y) * sig - pw * y * (1.0 - sig)) / n
    return LossResult(value=value, gradient=grad)


def total_loss(
    l_det: float, l_dis: float, l_dist: float, l_bnd: float, w: LossWeights
) -> float:
    """Weighted sum of the detector loss and the three auxiliary objectives."""
    for name, v in (("l_det", l_det), ("l_dis", l_dis), ("l_dist", l_dist), ("l_bnd", l_bnd)):
        if not np.isfinite(v):
            raise ValueError(f"{name} must be finite")
    return float(
        l_det + w.lambda_feature * l_dis + w.lambda_reg * l_dist + w.lambda_bd * l_bnd
    )
