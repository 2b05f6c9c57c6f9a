"""Image-based vehicle classification with fixed-pose SIFT codebooks."""

from .classify import (
    ClassificationError,
    NoFeaturesError,
    NoMatchError,
    Signature,
    WeightTable,
    assign_weights,
    build_signature,
    classify_inter,
    classify_intra,
    cluster_matches_image,
)
from .codebook import Codebook, assign, kmeans
from .edge import EdgeMap, GradientField, canny, gaussian_blur, sobel_gradients
from .evaluation import ConfusionMatrix, Dataset, evaluate, load_dataset, split
from .feature import Keypoint, dense_anchors, describe, edge_anchors, extract
from .imgio import GrayImage, Mask, full_mask, load_mask, load_pnm, rgb_to_gray
from .model import TrainedModel, load_model, save_model, train
from .synthetic import gen_synthetic

__version__ = "0.1.0"
