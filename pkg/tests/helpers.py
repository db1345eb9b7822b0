"""Shared test utilities: small model configs, labeled corpora, and
independent oracles kept separate from the implementation under test."""

import numpy as np

from ripoint import ModelConfig, PointCloud, Prng, gen_cloud

SMALL_CONFIG = ModelConfig(
    n_blocks=2,
    dim=64,
    n_patches=16,
    neighbors=8,
    state_dim=4,
    film_bottleneck=16,
)


def generic_cloud(seed: int, n: int = 256, kind: str = "two_lobes") -> PointCloud:
    return gen_cloud(kind, n, Prng(seed), id=f"{kind}_{seed}")


def make_labeled_corpus(n_per_cluster: int = 40, n_points: int = 256, seed: int = 100):
    """Five visually distinct shape clusters; returns (clouds, labels)."""
    kinds = ["ellipsoid", "box_surface", "two_lobes", "helix"]
    clouds = []
    labels = {}
    s = seed
    for kind in kinds:
        for i in range(n_per_cluster):
            c = gen_cloud(kind, n_points, Prng(s), id=f"{kind}_{i}")
            s += 1
            clouds.append(c)
            labels[c.id] = kind
    for i in range(n_per_cluster):
        base = gen_cloud("ellipsoid", n_points, Prng(s))
        s += 1
        c = PointCloud(points=base.points * np.array([1.0, 0.9, 0.2]), id=f"disk_{i}")
        clouds.append(c)
        labels[c.id] = "disk"
    return clouds, labels


def eigvals3_cubic(m: np.ndarray) -> np.ndarray:
    """Closed-form eigenvalues of a symmetric 3x3 matrix, descending.

    Trigonometric solution of the characteristic cubic; used only as an
    oracle against the iterative solver.
    """
    m = np.asarray(m, dtype=np.float64)
    p1 = m[0, 1] ** 2 + m[0, 2] ** 2 + m[1, 2] ** 2
    q = np.trace(m) / 3.0
    p2 = (m[0, 0] - q) ** 2 + (m[1, 1] - q) ** 2 + (m[2, 2] - q) ** 2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    if p < 1e-300:
        return np.array([q, q, q])
    b = (m - q * np.eye(3)) / p
    r = np.clip(np.linalg.det(b) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    e1 = q + 2.0 * p * np.cos(phi)
    e3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    return np.array([e1, e2, e3])


def brute_force_fps(points: np.ndarray, g: int) -> list[int]:
    """Exhaustive min-distance FPS oracle, start at index 0, ties by index."""
    chosen = [0]
    while len(chosen) < g:
        best_idx, best_d = None, -1.0
        for i in range(points.shape[0]):
            d = min(float(np.linalg.norm(points[i] - points[j])) for j in chosen)
            if d > best_d + 1e-15:
                best_idx, best_d = i, d
        chosen.append(best_idx)
    return chosen


def oracle_rfc_axes(x: np.ndarray) -> np.ndarray:
    """Independent PCA + majority-sign oracle using numpy's eigensolver."""
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(-vals)
    axes = vecs[:, order].T.copy()
    for a in range(3):
        proj = centered @ axes[a]
        s = int(np.count_nonzero(proj > 0)) - int(np.count_nonzero(proj < 0))
        if s < 0 or (s == 0 and float(np.sum(proj**3)) < 0):
            axes[a] = -axes[a]
    return axes
