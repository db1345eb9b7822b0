"""Rotation-invariant patch embeddings.

Geometric tokens come from a two-stage max-pooling point encoder applied to
LRF-aligned patches; positional tokens from the center projected into its
LRF; orientational tokens from the patch-to-global relative pose. A
quadratic all-pairs orientation path exists only as a benchmarking baseline.

Every MLP evaluation increments a module-level counter so complexity claims
can be asserted on exact operation counts rather than wall-clock.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .geom3 import Frame, relative_pose
from .serializer import SerializedPatches

_mlp_calls = 0


def reset_mlp_calls() -> None:
    global _mlp_calls
    _mlp_calls = 0


def mlp_calls() -> int:
    return _mlp_calls


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0).astype(x.dtype)))


@dataclass
class Mlp:
    """Dense layers with GELU between them (none after the last).

    Calling on a (..., d_in) array counts one MLP evaluation per leading
    batch element.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        global _mlp_calls
        x = np.asarray(x)
        _mlp_calls += int(np.prod(x.shape[:-1])) if x.ndim > 1 else 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = x @ w + b
            if i < len(self.weights) - 1:
                x = gelu(x)
        return x

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]


@dataclass
class TokenizerParams:
    geo_stage1: Mlp  # 3 -> hidden -> C/2 per point
    geo_stage2: Mlp  # C -> C -> C per point (after global concat)
    pos_mlp: Mlp  # 3 -> hidden -> C
    ori_mlp: Mlp  # 9 -> hidden -> C


@dataclass
class TokenSequence:
    geo: np.ndarray  # (G, C)
    pos: np.ndarray  # (G, C)
    ori: np.ndarray  # (G, C)
    order_applied: bool = True


def mini_pointnet(aligned_patch: np.ndarray, params: TokenizerParams) -> np.ndarray:
    """Permutation-invariant patch feature via two max-pooled stages.

    Per-point features are pooled channel-wise, the pooled vector is
    concatenated back to every point, and a second stage pools again.
    """
    x = np.asarray(aligned_patch)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("patch must have shape (k, 3) with k >= 1")
    feat = params.geo_stage1(x)  # (k, C1)
    pooled = feat.max(axis=0)
    combined = np.concatenate(
        [feat, np.broadcast_to(pooled, feat.shape)], axis=1
    )  # (k, 2*C1)
    out = params.geo_stage2(combined)  # (k, C)
    return out.max(axis=0)


def pos_embed(projected_center: np.ndarray, params: Mlp) -> np.ndarray:
    """Embedding of the patch center already projected into its LRF."""
    return params(np.asarray(projected_center))


def ori_embed(rel_pose: np.ndarray, params: Mlp) -> np.ndarray:
    """Embedding of a patch's pose relative to the global frame."""
    return params(np.asarray(rel_pose).reshape(-1))


def pairwise_ori_baseline(lrfs: list[Frame], params: Mlp) -> np.ndarray:
    """All-pairs relative orientation embeddings: G^2 MLP evaluations.

    Benchmark-only reference for the quadratic alternative to the patchwise
    orientational embedding.
    """
    g = len(lrfs)
    c = params.out_dim
    rows = np.stack([f.rows for f in lrfs])  # (g, 3, 3)
    out = np.empty((g, g, c), dtype=np.float64)
    for i in range(g):
        # rel[j] = F_i @ F_j^T for every j, flattened row-major
        rel = np.einsum("ab,jcb->jac", rows[i], rows).reshape(g, 9)
        out[i] = params(rel)
    return out


def tokenize(
    sp: SerializedPatches, params: TokenizerParams, dtype=np.float32
) -> TokenSequence:
    """Build the token sequence in Hilbert order."""
    ps = sp.patch_set
    g = ps.n_patches
    c = params.pos_mlp.out_dim
    geo = np.empty((g, c), dtype=np.float64)
    pos = np.empty((g, c), dtype=np.float64)
    ori = np.empty((g, c), dtype=np.float64)
    for rank, i in enumerate(sp.order):
        lrf = sp.lrfs[i].frame
        aligned = ps.patches[i] @ lrf.rows.T
        geo[rank] = mini_pointnet(aligned.astype(dtype), params)
        center_local = (ps.centers[i] @ lrf.rows.T).astype(dtype)
        pos[rank] = pos_embed(center_local, params.pos_mlp)
        rel = relative_pose(lrf, sp.grf).astype(dtype)
        ori[rank] = ori_embed(rel, params.ori_mlp)
    return TokenSequence(
        geo=geo.astype(dtype), pos=pos.astype(dtype), ori=ori.astype(dtype)
    )
