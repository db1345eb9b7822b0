"""Scikit-learn style facade over the encoder pipeline."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .cloud_io import PointCloud
from .ssm_model import ModelConfig, encode, init_weights


def _as_cloud(item, index: int) -> PointCloud:
    if isinstance(item, PointCloud):
        return item
    arr = np.asarray(item, dtype=np.float64)
    return PointCloud(points=arr, id=f"sample_{index}")


class PointCloudEncoder(BaseEstimator, TransformerMixin):
    """Rotation-invariant shape embedding as a transformer.

    fit() initializes deterministic random weights from `seed` (the model
    is not trained here); transform() maps each cloud to its L2-normalized
    embedding row. Input X is a sequence of (N, 3) arrays or PointCloud
    objects.
    """

    def __init__(
        self,
        n_blocks=ModelConfig.n_blocks,
        dim=ModelConfig.dim,
        n_patches=ModelConfig.n_patches,
        neighbors=ModelConfig.neighbors,
        state_dim=ModelConfig.state_dim,
        conv_width=ModelConfig.conv_width,
        film_bottleneck=ModelConfig.film_bottleneck,
        seed=0,
    ):
        self.n_blocks = n_blocks
        self.dim = dim
        self.n_patches = n_patches
        self.neighbors = neighbors
        self.state_dim = state_dim
        self.conv_width = conv_width
        self.film_bottleneck = film_bottleneck
        self.seed = seed

    def fit(self, X=None, y=None):
        self.config_ = ModelConfig(
            n_blocks=self.n_blocks,
            dim=self.dim,
            n_patches=self.n_patches,
            neighbors=self.neighbors,
            state_dim=self.state_dim,
            conv_width=self.conv_width,
            film_bottleneck=self.film_bottleneck,
        )
        self.weights_ = init_weights(self.config_, self.seed)
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "weights_"):
            raise NotFittedError("call fit() before transform()")
        rows = [
            encode(_as_cloud(item, i), self.weights_).z_p for i, item in enumerate(X)
        ]
        return np.stack(rows)
