"""Clustering, elbow selection and PCA feature importance."""
from .clustering import (
    ClusteringResult,
    ElbowResult,
    KExceedsN,
    KMeans,
    RangeTooSmall,
    WcssIncreased,
    elbow_select,
    kmeans,
    knee_index,
)
from .decomposition import (
    PCA,
    DegenerateInput,
    FeatureImportanceReport,
    PcaResult,
    importance_frequency,
    pca,
    top_features,
    top_loadings,
)

__all__ = [
    "ClusteringResult",
    "DegenerateInput",
    "ElbowResult",
    "FeatureImportanceReport",
    "KExceedsN",
    "KMeans",
    "PCA",
    "PcaResult",
    "RangeTooSmall",
    "WcssIncreased",
    "elbow_select",
    "importance_frequency",
    "kmeans",
    "knee_index",
    "pca",
    "top_features",
    "top_loadings",
]
