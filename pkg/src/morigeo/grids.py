"""Grid types, connected-component labeling, and region boundaries.

A LabelGrid carries per-pixel class ids (0 = background). An InstanceGrid
carries per-pixel instance ids (0 = background) forming the contiguous id
set {0, 1, ..., num_instances}, each nonzero id a connected pixel region.
Both wrap read-only uint16 arrays so values can be shared across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage as ndi

MAX_INSTANCES = 65534
_MAX_PIXELS = 2**31 - 1


class Connectivity(Enum):
    """Pixel adjacency for components, seeds, and flood operations."""

    FOUR = "four"
    EIGHT = "eight"

    @property
    def structure(self) -> np.ndarray:
        """3x3 boolean footprint usable with scipy.ndimage."""
        if self is Connectivity.FOUR:
            return np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
        return np.ones((3, 3), dtype=bool)

    @property
    def offsets(self) -> tuple[tuple[int, int], ...]:
        """Neighbor offsets in raster order."""
        if self is Connectivity.FOUR:
            return ((-1, 0), (0, -1), (0, 1), (1, 0))
        return ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))

    @classmethod
    def from_name(cls, name: str) -> "Connectivity":
        key = str(name).strip().lower()
        aliases = {"4": cls.FOUR, "four": cls.FOUR, "8": cls.EIGHT, "eight": cls.EIGHT}
        if key not in aliases:
            raise ValueError(f"unknown connectivity: {name!r}")
        return aliases[key]


def _frozen_u16(values: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array")
    if arr.shape[0] * arr.shape[1] > _MAX_PIXELS:
        raise ValueError(f"{name} exceeds the supported pixel count")
    if np.issubdtype(arr.dtype, np.floating):
        raise ValueError(f"{name} must hold integers, got {arr.dtype}")
    if int(arr.min()) < 0 or int(arr.max()) > 65535:
        raise ValueError(f"{name} values must lie in [0, 65535]")
    out = arr.astype(np.uint16, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LabelGrid:
    """Semantic mask: per-pixel class ids, 0 = background."""

    labels: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", _frozen_u16(self.labels, "labels"))

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape


@dataclass(frozen=True)
class InstanceGrid:
    """Instance mask: per-pixel instance ids, 0 = background.

    Nonzero ids must form the contiguous set {1, ..., num_instances}.
    """

    ids: np.ndarray
    num_instances: int

    def __post_init__(self) -> None:
        ids = _frozen_u16(self.ids, "ids")
        object.__setattr__(self, "ids", ids)
        present = np.unique(ids)
        nonzero = present[present > 0]
        m = int(self.num_instances)
        if m < 0 or m > MAX_INSTANCES:
            raise ValueError(f"num_instances out of range: {m}")
        if nonzero.size != m or (m > 0 and (nonzero[0] != 1 or nonzero[-1] != m)):
            raise ValueError("instance ids must form the contiguous set {1..M}")

    @classmethod
    def from_ids(cls, ids: np.ndarray) -> "InstanceGrid":
        arr = np.asarray(ids)
        m = int(arr.max(initial=0))
        return cls(ids=arr, num_instances=m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ids.shape

    def foreground(self) -> np.ndarray:
        return self.ids != 0

    def mask_of(self, instance_id: int) -> np.ndarray:
        if not 1 <= instance_id <= self.num_instances:
            raise ValueError(f"unknown instance: {instance_id}")
        return self.ids == instance_id


def relabel_by_raster_order(raw_labels: np.ndarray) -> np.ndarray:
    """Renumber positive labels to 1..M by raster order of each label's first pixel."""
    flat = np.asarray(raw_labels).ravel()
    nmax = int(flat.max(initial=0))
    if nmax == 0:
        return np.zeros_like(raw_labels, dtype=np.int64)
    first = np.full(nmax + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat, np.arange(flat.size, dtype=np.int64))
    present = np.nonzero(first[1:] < flat.size)[0] + 1
    order = present[np.argsort(first[present], kind="stable")]
    remap = np.zeros(nmax + 1, dtype=np.int64)
    remap[order] = np.arange(1, order.size + 1)
    return remap[raw_labels]


def connected_components(
    mask: LabelGrid, class_id: int, conn: Connectivity = Connectivity.EIGHT
) -> InstanceGrid:
    """Label connected regions of one class as instances.

    Ids are assigned in raster order of each component's first pixel, so
    repeated runs on the same input are bit-identical.
    """
    if not 1 <= int(class_id) <= 65535:
        raise ValueError(f"class_id must lie in [1, 65535], got {class_id}")
    fg = mask.labels == class_id
    labeled, n = ndi.label(fg, structure=conn.structure)
    if n > MAX_INSTANCES:
        raise ValueError(f"more than {MAX_INSTANCES} instances in one grid")
    return InstanceGrid(ids=relabel_by_raster_order(labeled), num_instances=int(n))


def inner_boundary(mask: np.ndarray) -> np.ndarray:
    """Pixels of ``mask`` with at least one 4-neighbor outside it.

    The grid border counts as outside, so regions touching the image edge
    have boundary pixels there.
    """
    m = np.asarray(mask, dtype=bool)
    padded = np.pad(m, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return m & ~interior


def region_boundary(inst: InstanceGrid, instance_id: int) -> np.ndarray:
    """Inner 4-boundary of one instance, as a boolean mask."""
    return inner_boundary(inst.mask_of(instance_id))


def merge_to_semantic(inst: InstanceGrid, class_id: int) -> LabelGrid:
    """Collapse an instance grid to a single-class semantic mask."""
    if not 1 <= int(class_id) <= 65535:
        raise ValueError(f"class_id must lie in [1, 65535], got {class_id}")
    labels = np.where(inst.ids != 0, np.uint16(class_id), np.uint16(0))
    return LabelGrid(labels=labels)
