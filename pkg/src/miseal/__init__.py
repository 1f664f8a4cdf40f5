"""Geometric minutiae intensity, point-process models and label separation.

The package splits an observed minutiae pattern into a geometrically
necessary part, driven by the divergence of the scaled ridge direction
field, and a random remainder modelled as a homogeneous Poisson process.
The necessary part follows a Strauss process with a hard core whose trend
is the necessary-minutiae intensity computed from orientation and ridge
frequency fields.
"""

from .analysis import (
    DeletionReport,
    Patch,
    PatchData,
    PatchGrid,
    RegressionResult,
    StudyReport,
    deletion_experiment,
    greedy_match_score,
    patch_counts,
    poisson_regression_identity,
    simulation_study,
)
from .errors import (
    DataError,
    MisealError,
    NumericalError,
    UsageError,
)
from .fields import (
    local_direction_field,
    necessary_intensity,
    necessary_minutiae_number_area,
    necessary_minutiae_number_boundary,
)
from .grids import OrientationGrid, RegionOfInterest, ScalarGrid
from .inference import (
    DependenceReport,
    PosteriorTrace,
    Priors,
    ProposalSettings,
    Schedule,
    exact_label_posterior,
    label_dependence_report,
    run_miseal,
)
from .mple import mple_fit
from .pcf import pcf_estimate, pcf_pool
from .pointprocess import (
    InteractionRadii,
    ModelParams,
    PointPattern,
    min_pair_distance,
    sample_poisson,
    sample_strauss_hardcore,
)
from .regions import (
    AnnularSectorRegion,
    PolygonRegion,
    RectangleRegion,
    StarRegion,
)

__all__ = [
    "AnnularSectorRegion",
    "DataError",
    "DeletionReport",
    "DependenceReport",
    "InteractionRadii",
    "MisealError",
    "ModelParams",
    "NumericalError",
    "OrientationGrid",
    "Patch",
    "PatchData",
    "PatchGrid",
    "PointPattern",
    "PolygonRegion",
    "PosteriorTrace",
    "Priors",
    "ProposalSettings",
    "RectangleRegion",
    "RegionOfInterest",
    "RegressionResult",
    "ScalarGrid",
    "Schedule",
    "StarRegion",
    "StudyReport",
    "UsageError",
    "deletion_experiment",
    "exact_label_posterior",
    "greedy_match_score",
    "label_dependence_report",
    "local_direction_field",
    "min_pair_distance",
    "mple_fit",
    "necessary_intensity",
    "necessary_minutiae_number_area",
    "necessary_minutiae_number_boundary",
    "patch_counts",
    "pcf_estimate",
    "pcf_pool",
    "poisson_regression_identity",
    "run_miseal",
    "sample_poisson",
    "sample_strauss_hardcore",
    "simulation_study",
]
