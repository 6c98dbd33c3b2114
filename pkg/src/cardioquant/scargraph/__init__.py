"""Graph-cut scar quantification on LA surface meshes."""
from .graph import (
    DEFAULT_LAMBDA,
    UNSET,
    SurfaceGraph,
    build_graph,
    cut_weight,
    energy,
    from_arrays,
    nlinks_from_similarity,
    read_labeling_csv,
    read_probability_csv,
    tlinks_from_probs,
    write_labeling_csv,
)
from .maxflow import CutResult, min_cut_solve
from .quantify import CapPhantom, ScarResult, make_cap_phantom, quantify_scar, threshold_probabilities
from .thresholds import otsu_threshold, two_sd_threshold

__all__ = [
    "DEFAULT_LAMBDA",
    "UNSET",
    "CapPhantom",
    "CutResult",
    "ScarResult",
    "SurfaceGraph",
    "build_graph",
    "cut_weight",
    "energy",
    "from_arrays",
    "make_cap_phantom",
    "min_cut_solve",
    "nlinks_from_similarity",
    "otsu_threshold",
    "quantify_scar",
    "read_labeling_csv",
    "read_probability_csv",
    "threshold_probabilities",
    "tlinks_from_probs",
    "two_sd_threshold",
    "write_labeling_csv",
]
