"""Texture-based scoring of grayscale images.

Feature extraction with gray-level co-occurrence matrices, low-dimensional
manifold features (PCA and a single-hidden-layer autoencoder) appended as
regularizers, and a random-forest classifier, wired into a repeated
random-split experiment harness and a command-line interface.
"""

from .autoencoder import AutoencoderModel, TrainConfig
from .forest import ForestConfig, ForestModel, LabeledDataset
from .pca import PcaModel
from .pipeline import (
    ExperimentConfig,
    FeatureMode,
    ScoreReport,
    build_features,
    pca_sweep,
    run_experiment,
    score_images,
)
from .texture import (
    DEFAULT_LEVELS,
    DEFAULT_RELATIONSHIP,
    DIRECTIONS,
    Glcm,
    GrayImage,
    QuantizedImage,
    SpatialRelationship,
    compute_glcm,
    direction_offset,
    glcm_to_feature_vector,
    image_feature_vector,
    normalize_glcm,
    quantize,
)

__version__ = "0.1.0"

__all__ = [
    "AutoencoderModel",
    "DEFAULT_LEVELS",
    "DEFAULT_RELATIONSHIP",
    "DIRECTIONS",
    "ExperimentConfig",
    "FeatureMode",
    "ForestConfig",
    "ForestModel",
    "Glcm",
    "GrayImage",
    "LabeledDataset",
    "PcaModel",
    "QuantizedImage",
    "ScoreReport",
    "SpatialRelationship",
    "TrainConfig",
    "build_features",
    "compute_glcm",
    "direction_offset",
    "glcm_to_feature_vector",
    "image_feature_vector",
    "normalize_glcm",
    "pca_sweep",
    "quantize",
    "run_experiment",
    "score_images",
    "__version__",
]
