"""Reference frame computation: PCA axes with majority-side sign
disambiguation, plus alignment of points into a frame."""

from dataclasses import dataclass

import numpy as np

from .geom3 import Frame, eig_sym3
from .patcher import PatchSet


class DegenerateFrameError(ValueError):
    """Raised when a point set has no usable PCA frame (zero or tied spectrum)."""

    def __init__(self, message: str, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


@dataclass
class RfcResult:
    frame: Frame
    eigenvalues: np.ndarray  # descending
    degenerate: bool


def rfc(x: np.ndarray, kind: str = "local") -> RfcResult:
    """Compute a disambiguated PCA reference frame for a point set.

    Axes are eigenvectors of the covariance of the mean-centered points,
    ordered by descending eigenvalue. Each axis is flipped so the majority
    of points project onto its positive side; exact count ties fall back to
    the sign of the sum of cubed projections. Handedness is not forced.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != 3:
        raise ValueError("point set must have shape (n, 3)")
    if x.shape[0] < 3:
        raise ValueError(f"need at least 3 points, got {x.shape[0]}")
    centered = x - x.mean(axis=0)
    cov = (centered.T @ centered) / x.shape[0]
    if float(np.trace(cov)) < 1e-30:
        raise DegenerateFrameError("all points coincide: zero covariance")
    eig = eig_sym3(cov)
    axes = eig.vectors.T.copy()  # rows
    for a in range(3):
        proj = centered @ axes[a]
        s = int(np.count_nonzero(proj > 0)) - int(np.count_nonzero(proj < 0))
        if s < 0:
            axes[a] = -axes[a]
        elif s == 0:
            if float(np.sum(proj**3)) < 0:
                axes[a] = -axes[a]
    # Near-rank-deficient sets (e.g. coplanar patches) have an undetermined
    # minor-axis sign, so they count as degenerate alongside eigenvalue ties.
    lam_max = float(np.abs(eig.values).max())
    rank_deficient = float(eig.values[2]) < 1e-9 * lam_max
    return RfcResult(
        frame=Frame(rows=axes, kind=kind),
        eigenvalues=eig.values,
        degenerate=eig.tied or rank_deficient,
    )


def align(x: np.ndarray, f: Frame) -> np.ndarray:
    """Project row-vector points into the frame: X @ F^T."""
    x = np.asarray(x, dtype=np.float64)
    return x @ f.rows.T


def patch_frames(ps: PatchSet) -> list[RfcResult]:
    """Per-patch local reference frames; degeneracy flags carry through."""
    results = []
    for i in range(ps.n_patches):
        try:
            results.append(rfc(ps.patches[i], kind="local"))
        except (ValueError, DegenerateFrameError) as exc:
            raise DegenerateFrameError(f"patch {i}: {exc}") from exc
    return results
