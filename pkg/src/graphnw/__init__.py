"""Nadaraya-Watson regression for graph Laplacian valued responses.

Responses are graph Laplacians, optionally embedded by a matrix power,
averaged in tangent coordinates and projected back onto the Laplacian cone.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, DataError, GraphNWError, SupportError
from .laplacian import (
    Validation,
    WeightedNetwork,
    euclidean_distance,
    laplacian_from_network,
    trace_normalize,
    validate_laplacian,
)
from .projection import ProjectionResult, pipeline_to_laplacian, project_to_laplacian
from .regression import (
    CurveFit,
    CVResult,
    KernelConfig,
    NetworkDataset,
    fit_curve,
    kernel_eval,
    loocv_bandwidth,
    nw_estimate_euclidean,
    nw_estimate_power,
    nw_weights,
    reverse_nw,
)
from .spectral import (
    PowerConfig,
    SpectralDecomposition,
    inverse_power_map,
    power_distance,
    power_map,
    spectral_decompose,
)
from .tangent import TangentVector, from_tangent, helmert_submatrix, to_tangent
from .trend import (
    Ar1Model,
    DistanceSeries,
    MdsResult,
    PcaModel,
    classical_mds,
    consecutive_distances,
    estimate_rho_ls,
    estimate_rho_pc1,
    mahalanobis_distance_matrix,
    pca_fit,
    pca_project,
    rank_anomalies,
    residual_distances,
)
