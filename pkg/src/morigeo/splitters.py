"""Instance decomposition of merged semantic regions.

Three classical baselines (watershed on the internal distance transform,
skeleton junction cutting, erosion-core morphology) plus a geometry-guided
splitter that consumes precomputed distance and boundary fields. All
splitters partition each connected component independently: output
instances never cross component borders, and every foreground pixel
receives exactly one id. Ids are renumbered by raster order of each
instance's first pixel, so results are bit-reproducible.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from .grids import (
    Connectivity,
    InstanceGrid,
    LabelGrid,
    connected_components,
    inner_boundary,
    relabel_by_raster_order,
)
from .targets import squared_edt, structuring_element


@dataclass(frozen=True)
class SplitConfig:
    """Decoding parameters shared by the splitters."""

    seed_threshold: float = 0.5
    min_seed_area: int = 4
    min_instance_area: int = 16
    boundary_suppression: float = 1.0
    opening_radius: int = 3

    def __post_init__(self) -> None:
        if not 0.0 < self.seed_threshold < 1.0:
            raise ValueError("seed_threshold must lie in (0, 1)")
        if self.min_seed_area < 1 or self.min_instance_area < 1:
            raise ValueError("areas must be >= 1")
        if not 0.0 <= self.boundary_suppression <= 1.0:
            raise ValueError("boundary_suppression must lie in [0, 1]")
        if self.opening_radius < 1:
            raise ValueError("opening_radius must be >= 1")


def _finish(assigned: np.ndarray, conn: Connectivity) -> InstanceGrid:
    """Split any disconnected label, then renumber ids in raster order."""
    out = np.zeros(assigned.shape, dtype=np.int64)
    nxt = 0
    for lab in np.unique(assigned):
        if lab == 0:
            continue
        sub, n = ndi.label(assigned == lab, structure=conn.structure)
        sel = sub > 0
        out[sel] = sub[sel] + nxt
        nxt += int(n)
    return InstanceGrid.from_ids(relabel_by_raster_order(out))


def _label_seed_regions(
    seed_mask: np.ndarray, conn: Connectivity, min_area: int
) -> tuple[np.ndarray, int]:
    """Connected seed regions in raster order, dropping those below min_area."""
    labeled, n = ndi.label(seed_mask, structure=conn.structure)
    if n and min_area > 1:
        areas = np.bincount(labeled.ravel(), minlength=n + 1)
        keep = areas >= min_area
        keep[0] = False
        labeled = np.where(keep[labeled], labeled, 0)
    labeled = relabel_by_raster_order(labeled)
    return labeled, int(labeled.max(initial=0))


def _priority_flood(
    relief: np.ndarray, seeds: np.ndarray, region: np.ndarray, conn: Connectivity
) -> np.ndarray:
    """Marker-based watershed: flood the region from labeled seeds.

    Pixels are finalized in order of descending relief, ties between
    different pixels broken by raster index. Duplicate candidates for one
    pixel resolve by insertion order, so a pixel takes the label of the
    frontier that reached it first rather than creeping sideways along
    equal-relief arcs. The whole flood is deterministic.
    """
    h, w = relief.shape
    labels = seeds.astype(np.int64).copy()
    done = np.zeros((h, w), dtype=bool)
    offsets = conn.offsets
    heap: list[tuple[float, int, int, int]] = []
    rows, cols = np.nonzero(seeds)
    seq = 0
    for y, x in zip(rows.tolist(), cols.tolist()):
        heap.append((-relief[y, x], y * w + x, seq, labels[y, x]))
        seq += 1
    heapq.heapify(heap)
    while heap:
        _, idx, _, lab = heapq.heappop(heap)
        y, x = divmod(idx, w)
        if done[y, x]:
            continue
        done[y, x] = True
        if labels[y, x] == 0:
            labels[y, x] = lab
        for dy, dx in offsets:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and region[ny, nx] and not done[ny, nx]:
                if labels[ny, nx] == 0:
                    heapq.heappush(
                        heap, (-relief[ny, nx], ny * w + nx, seq, labels[y, x])
                    )
                    seq += 1
    return labels


def _component_slices(comps: InstanceGrid) -> list[tuple[int, tuple[slice, slice]]]:
    objects = ndi.find_objects(comps.ids)
    return [(m, sl) for m, sl in enumerate(objects, start=1) if sl is not None]


def watershed_split(
    mask: LabelGrid,
    class_id: int,
    cfg: SplitConfig,
    conn: Connectivity = Connectivity.EIGHT,
) -> InstanceGrid:
    """Split components by watershed flooding of the internal distance transform.

    Seeds are the connected regions where the distance exceeds
    seed_threshold times the per-component maximum (area >= min_seed_area).
    Components with fewer than two seeds pass through unchanged.
    """
    comps = connected_components(mask, class_id, conn)
    assigned = np.zeros(mask.shape, dtype=np.int64)
    nxt = 0
    for m, sl in _component_slices(comps):
        local = comps.ids[sl] == m
        edt = np.sqrt(squared_edt(inner_boundary(local)))
        edt[~local] = 0.0
        seed_mask = local & (edt >= cfg.seed_threshold * edt[local].max())
        seeds, n_seeds = _label_seed_regions(seed_mask, conn, cfg.min_seed_area)
        if n_seeds <= 1:
            assigned[sl][local] = nxt + 1
            nxt += 1
        else:
            flooded = _priority_flood(edt, seeds, local, conn)
            assigned[sl][local] = flooded[local] + nxt
            nxt += n_seeds
    return _finish(assigned, conn)


def _neighbor_count_8(mask: np.ndarray) -> np.ndarray:
    padded = np.pad(mask, 1, constant_values=False).astype(np.uint8)
    total = np.zeros(mask.shape, dtype=np.uint8)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            total += padded[1 + dy : 1 + dy + mask.shape[0], 1 + dx : 1 + dx + mask.shape[1]]
    return total


def zhang_suen_thin(mask: np.ndarray) -> np.ndarray:
    """Iterative two-subpass thinning of a binary mask down to its skeleton."""
    img = np.asarray(mask, dtype=bool).copy()
    while True:
        changed = False
        for step in (0, 1):
            p = np.pad(img, 1, constant_values=False)
            p2 = p[:-2, 1:-1]
            p3 = p[:-2, 2:]
            p4 = p[1:-1, 2:]
            p5 = p[2:, 2:]
            p6 = p[2:, 1:-1]
            p7 = p[2:, :-2]
            p8 = p[1:-1, :-2]
            p9 = p[:-2, :-2]
            ring = (p2, p3, p4, p5, p6, p7, p8, p9)
            b = np.zeros(img.shape, dtype=np.uint8)
            for q in ring:
                b += q
            a = np.zeros(img.shape, dtype=np.uint8)
            for i in range(8):
                a += (~ring[i]) & ring[(i + 1) % 8]
            if step == 0:
                cond = ~(p2 & p4 & p6) & ~(p4 & p6 & p8)
            else:
                cond = ~(p2 & p4 & p8) & ~(p2 & p6 & p8)
            delete = img & (b >= 2) & (b <= 6) & (a == 1) & cond
            if delete.any():
                img &= ~delete
                changed = True
        if not changed:
            return img


def _nearest_label_assignment(region: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Assign each region pixel to the Euclidean-nearest labeled set.

    Ties go to the lower label id; squared distances are exact integers so
    the comparison is deterministic.
    """
    n = int(labels.max(initial=0))
    best_sq = np.full(region.shape, np.inf)
    best_lab = np.zeros(region.shape, dtype=np.int64)
    for lab in range(1, n + 1):
        sq = squared_edt(labels == lab)
        better = region & (sq < best_sq)
        best_sq[better] = sq[better]
        best_lab[better] = lab
    out = np.zeros(region.shape, dtype=np.int64)
    out[region] = best_lab[region]
    return out


def skeleton_split(
    mask: LabelGrid,
    class_id: int,
    cfg: SplitConfig,
    conn: Connectivity = Connectivity.EIGHT,
) -> InstanceGrid:
    """Split components by cutting their thinned skeleton at junctions.

    Junction pixels (skeleton pixels with >= 3 skeleton neighbors under
    8-connectivity) are removed, the surviving skeleton branches are
    labeled, and every component pixel joins its nearest branch. Components
    whose skeleton has at most one branch pass through unchanged.
    """
    comps = connected_components(mask, class_id, conn)
    assigned = np.zeros(mask.shape, dtype=np.int64)
    nxt = 0
    for m, sl in _component_slices(comps):
        local = comps.ids[sl] == m
        skel = zhang_suen_thin(local)
        branches_mask = skel & (_neighbor_count_8(skel) < 3)
        branches = relabel_by_raster_order(
            ndi.label(branches_mask, structure=Connectivity.EIGHT.structure)[0]
        )
        n_branches = int(branches.max(initial=0))
        if n_branches <= 1:
            assigned[sl][local] = nxt + 1
            nxt += 1
        else:
            near = _nearest_label_assignment(local, branches)
            assigned[sl][local] = near[local] + nxt
            nxt += n_branches
    return _finish(assigned, conn)


def morphology_split(
    mask: LabelGrid,
    class_id: int,
    cfg: SplitConfig,
    conn: Connectivity = Connectivity.EIGHT,
) -> InstanceGrid:
    """Split components via erosion cores and nearest-core assignment.

    Each component is eroded by a square SE of ``opening_radius``; surviving
    cores (area >= min_seed_area) claim the component's pixels by Euclidean
    proximity. Zero cores leave the component as one instance.
    """
    se = structuring_element("square", cfg.opening_radius)
    comps = connected_components(mask, class_id, conn)
    assigned = np.zeros(mask.shape, dtype=np.int64)
    nxt = 0
    for m, sl in _component_slices(comps):
        local = comps.ids[sl] == m
        eroded = ndi.binary_erosion(local, structure=se, border_value=0)
        cores, n_cores = _label_seed_regions(eroded, conn, cfg.min_seed_area)
        if n_cores <= 1:
            assigned[sl][local] = nxt + 1
            nxt += 1
        else:
            near = _nearest_label_assignment(local, cores)
            assigned[sl][local] = near[local] + nxt
            nxt += n_cores
    return _finish(assigned, conn)


def _border_lengths(assigned: np.ndarray, lab: int) -> dict[int, int]:
    """4-adjacency contact length between ``lab`` and every other positive label."""
    mine = assigned == lab
    counts: dict[int, int] = {}
    h, w = assigned.shape
    for dy, dx in ((-1, 0), (0, -1), (0, 1), (1, 0)):
        src = mine[
            max(0, -dy) : h - max(0, dy),
            max(0, -dx) : w - max(0, dx),
        ]
        dst = assigned[
            max(0, dy) : h - max(0, -dy),
            max(0, dx) : w - max(0, -dx),
        ]
        touching = dst[src]
        for other, cnt in zip(*np.unique(touching[touching > 0], return_counts=True)):
            if other != lab:
                counts[int(other)] = counts.get(int(other), 0) + int(cnt)
    return counts


def _merge_small_instances(assigned: np.ndarray, min_area: int) -> np.ndarray:
    """Merge instances below min_area into the neighbor with the longest border.

    Smallest (then lowest-id) fragments merge first; border-length ties go
    to the lower neighbor id. Fragments with no positive-length neighbor
    border are kept.
    """
    out = assigned.copy()
    kept: set[int] = set()
    while True:
        areas = np.bincount(out.ravel())
        candidates = [
            lab
            for lab in range(1, areas.size)
            if 0 < areas[lab] < min_area and lab not in kept
        ]
        if not candidates:
            return out
        lab = min(candidates, key=lambda v: (areas[v], v))
        borders = _border_lengths(out, lab)
        if not borders:
            kept.add(lab)
            continue
        target = min(borders, key=lambda v: (-borders[v], v))
        out[out == lab] = target


def geometry_split(
    mask: LabelGrid,
    class_id: int,
    dist: np.ndarray,
    bnd: np.ndarray,
    cfg: SplitConfig,
    conn: Connectivity = Connectivity.EIGHT,
) -> InstanceGrid:
    """Field-driven splitter consuming distance and boundary maps.

    The relief dist - boundary_suppression * bnd is seeded at its
    per-component crest (>= seed_threshold of the component maximum) and
    flooded; fragments below min_instance_area are merged into the
    neighbor sharing the longest border. Components whose relief never
    rises above zero stay whole.
    """
    d = np.asarray(dist, dtype=np.float64)
    b = np.asarray(bnd, dtype=np.float64)
    if d.shape != mask.shape or b.shape != mask.shape:
        raise ValueError("field and mask shapes differ")
    if d.size and (d.min() < 0.0 or d.max() > 1.0):
        raise ValueError("dist values must lie in [0, 1]")
    relief = d - cfg.boundary_suppression * b
    comps = connected_components(mask, class_id, conn)
    assigned = np.zeros(mask.shape, dtype=np.int64)
    nxt = 0
    for m, sl in _component_slices(comps):
        local = comps.ids[sl] == m
        r_local = relief[sl]
        r_max = float(r_local[local].max())
        if r_max <= 0.0:
            assigned[sl][local] = nxt + 1
            nxt += 1
            continue
        seed_mask = local & (r_local >= cfg.seed_threshold * r_max)
        seeds, n_seeds = _label_seed_regions(seed_mask, conn, min_area=1)
        if n_seeds <= 1:
            assigned[sl][local] = nxt + 1
            nxt += 1
        else:
            flooded = _priority_flood(r_local, seeds, local, conn)
            assigned[sl][local] = flooded[local] + nxt
            nxt += n_seeds
    assigned = _merge_small_instances(assigned, cfg.min_instance_area)
    return _finish(assigned, conn)
