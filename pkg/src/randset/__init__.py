"""Classification of planar random closed set realisations.

Binary images are decomposed into connected components, each summarised by
a boundary-curvature histogram and a perimeter/area ratio; realisations
are compared with empirical N-distances over sampled components and
classified with a kernel-posterior nearest-neighbour rule, k-medoids, or
Ward agglomeration. A seeded germ-grain simulator and an experiment
harness tie the pieces together; see the ``randset`` command line tool.
"""

from .raster import BinaryRaster, PbmParseError, parse_pbm, read_pbm_file, write_pbm, write_pbm_file
from .morphology import Component, DiscMask, connected_components, disc_mask, occupancy_ratio
from .features import (
    ComponentFeatures,
    RealisationFeatures,
    curvature_histogram,
    extract_features,
    load_features,
    pa_ratio,
    save_features,
)
from .ndistance import (
    DistanceMatrix,
    FeatureMode,
    FunctionalKernel,
    SamplingPolicy,
    ScalarKernel,
    kernel_functional,
    kernel_scalar,
    load_matrix_csv,
    n_distance,
    pairwise_matrix,
    realisation_distance,
    save_matrix_csv,
)
from .classify import (
    cut_dendrogram,
    k_medoids,
    knn_classify,
    knn_posterior,
    misclassification,
    select_m,
    ward_cluster,
    ward_dendrogram,
)
from .simulate import (
    DiscConfiguration,
    ModelSpec,
    default_model_spec,
    load_model_file,
    rasterize,
    simulate,
)
from .estimators import (
    KernelPosteriorKNN,
    KMedoids,
    NDistanceMatrixTransformer,
    RealisationFeaturizer,
    WardClustering,
)

__version__ = "0.1.0"
