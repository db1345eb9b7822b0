"""Farthest point sampling and kNN patch construction.

Both are brute force and fully deterministic: FPS starts at index 0 and all
ties break toward the smallest index, so the patch structure depends only on
the order of the input points, never on their pose.
"""

from dataclasses import dataclass

import numpy as np

from .cloud_io import PointCloud


@dataclass
class PatchSet:
    centers: np.ndarray  # (G, 3)
    patches: np.ndarray  # (G, k, 3), center-relative
    source_indices: np.ndarray  # (G, k) into the input cloud

    @property
    def n_patches(self) -> int:
        return self.centers.shape[0]

    @property
    def n_neighbors(self) -> int:
        return self.patches.shape[1]


def fps(cloud: PointCloud, g: int) -> np.ndarray:
    """Select g farthest-point-sampling center indices, starting at index 0."""
    points = cloud.points
    n = points.shape[0]
    if g < 1:
        raise ValueError("g must be >= 1")
    if n < g:
        raise ValueError(f"cloud has {n} points, need at least {g}")
    chosen = np.empty(g, dtype=np.int64)
    chosen[0] = 0
    dist = np.linalg.norm(points - points[0], axis=1)
    for i in range(1, g):
        # argmax returns the first maximum, i.e. the smallest index on ties
        idx = int(np.argmax(dist))
        chosen[i] = idx
        dist = np.minimum(dist, np.linalg.norm(points - points[idx], axis=1))
    return chosen


def knn_group(cloud: PointCloud, center_indices: np.ndarray, k: int) -> PatchSet:
    """Gather the k nearest points around each center (the center included)."""
    points = cloud.points
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"cloud has {n} points, need at least {k}")
    center_indices = np.asarray(center_indices, dtype=np.int64)
    g = center_indices.shape[0]
    centers = points[center_indices]
    source = np.empty((g, k), dtype=np.int64)
    patches = np.empty((g, k, 3), dtype=np.float64)
    for i in range(g):
        d = np.linalg.norm(points - centers[i], axis=1)
        nearest = np.argsort(d, kind="stable")[:k]
        source[i] = nearest
        patches[i] = points[nearest] - centers[i]
    return PatchSet(centers=centers, patches=patches, source_indices=source)
