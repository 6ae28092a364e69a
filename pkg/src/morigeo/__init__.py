"""Morphology-aware geometric targets, losses, and instance splitting."""

from .evaluator import (
    APReport,
    ClassAP,
    Instance,
    ScoredInstance,
    average_precision,
    grid_to_instances,
    map_report,
    mask_iou,
    match_instances,
)
from .formats import FormatError, read_mgf, read_pgm, write_mgf, write_pgm
from .grids import (
    Connectivity,
    InstanceGrid,
    LabelGrid,
    connected_components,
    inner_boundary,
    merge_to_semantic,
    region_boundary,
)
from .losses import (
    LossResult,
    LossWeights,
    NeighborPairs,
    auto_pos_weight,
    bal_wmse,
    boundary_bce,
    disentangle_loss,
    instance_prototypes,
    neighbor_pairs,
    normalize_embeddings,
    total_loss,
)
from .splitters import (
    SplitConfig,
    geometry_split,
    morphology_split,
    skeleton_split,
    watershed_split,
    zhang_suen_thin,
)
from .synth import Scene, SynthConfig, rasterize_ellipse, synth
from .targets import (
    BoundaryConfig,
    DistanceConfig,
    boundary_band,
    exact_edt,
    exp_reparameterize,
    gen_targets,
    normalized_distance_field,
    squared_edt,
    structuring_element,
)

__version__ = "0.1.0"
