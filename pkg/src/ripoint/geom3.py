"""Fixed-size 3x3 linear algebra: symmetric eigendecomposition, orthonormal
frames, and uniform rotation sampling."""

import math
from dataclasses import dataclass

import numpy as np

from .cloud_io import Prng

ORTHONORMAL_TOL = 1e-6
REL_POSE_TOL = 2e-6
EIG_TIE_REL_TOL = 1e-9


@dataclass
class Frame:
    """Orthonormal basis with axes stored as rows.

    kind is "local" for per-patch frames and "global" for the whole-cloud
    frame. Handedness is not forced: det may be +1 or -1.
    """

    rows: np.ndarray
    kind: str = "local"

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.shape != (3, 3):
            raise ValueError("frame must be 3x3")
        gram = self.rows @ self.rows.T
        if np.abs(gram - np.eye(3)).max() > ORTHONORMAL_TOL:
            raise ValueError("frame rows are not orthonormal")
        d = float(np.linalg.det(self.rows))
        if min(abs(d - 1.0), abs(d + 1.0)) > ORTHONORMAL_TOL:
            raise ValueError("frame determinant is not +-1")

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.rows))


@dataclass
class EigResult:
    values: np.ndarray  # descending
    vectors: np.ndarray  # columns, matching values
    tied: bool


def eig_sym3(m: np.ndarray) -> EigResult:
    """Eigendecomposition of a symmetric 3x3 matrix via cyclic Jacobi.

    Eigenvalues are returned in descending order with unit eigenvector
    columns. `tied` is set when adjacent eigenvalues are within
    1e-9 * max|lambda| of each other.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError("matrix must be 3x3")
    if np.abs(m - m.T).max() > 1e-9:
        raise ValueError("matrix is not symmetric")
    a = (m + m.T) / 2.0
    v = np.eye(3)
    threshold = 1e-12 * max(1.0, float(np.abs(a).max()))
    for _ in range(30):
        off = max(abs(a[0, 1]), abs(a[0, 2]), abs(a[1, 2]))
        if off <= threshold:
            break
        # Fixed (p, q) sweep order for reproducibility.
        for p, q in ((0, 1), (0, 2), (1, 2)):
            if abs(a[p, q]) <= threshold:
                continue
            theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(3)
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            v = v @ rot
    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = v[:, order]
    lam_max = float(np.abs(values).max())
    tied = False
    for i in range(2):
        if abs(values[i] - values[i + 1]) < EIG_TIE_REL_TOL * max(lam_max, 1e-300):
            tied = True
    return EigResult(values=values, vectors=vectors, tied=tied)


def random_rotation(rng: Prng) -> np.ndarray:
    """Uniform SO(3) rotation via Shoemake's subgroup-algorithm quaternions."""
    u1, u2, u3 = rng.random(), rng.random(), rng.random()
    s1 = math.sqrt(1.0 - u1)
    s2 = math.sqrt(u1)
    w = s1 * math.sin(2.0 * math.pi * u2)
    x = s1 * math.cos(2.0 * math.pi * u2)
    y = s2 * math.sin(2.0 * math.pi * u3)
    z = s2 * math.cos(2.0 * math.pi * u3)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def relative_pose(fi: Frame, fg: Frame) -> np.ndarray:
    """Orientation of frame `fi` relative to frame `fg`.

    With axes stored as rows, the rotation-invariant comparison of two
    co-rotating frames is rows_i @ rows_g.T (equal to Vi^T Vg for the
    axis-column matrices V = rows^T). Co-rotating both frames leaves the
    result unchanged, which is what the orientational embedding needs.
    """
    rel = fi.rows @ fg.rows.T
    gram = rel @ rel.T
    if np.abs(gram - np.eye(3)).max() > REL_POSE_TOL:
        raise ValueError("relative pose is not orthonormal")
    return rel
