"""Rotation-invariant serialization: project patch centers into the global
reference frame, quantize, and order them along a 3D Hilbert curve.

The Hilbert codec uses Skilling's transpose algorithm (Gray-code based);
decode exists so the bijection and adjacency properties are testable.
"""

from dataclasses import dataclass

import numpy as np

from .cloud_io import PointCloud
from .frames import DegenerateFrameError, RfcResult, rfc
from .geom3 import Frame
from .patcher import PatchSet

DEFAULT_BITS = 10
_NDIM = 3


def _axes_to_transpose(x: list[int], bits: int) -> list[int]:
    x = list(x)
    m = 1 << (bits - 1)
    q = m
    while q > 1:
        p = q - 1
        for i in range(_NDIM):
            if x[i] & q:
                x[0] ^= p
            else:
                t = (x[0] ^ x[i]) & p
                x[0] ^= t
                x[i] ^= t
        q >>= 1
    for i in range(1, _NDIM):
        x[i] ^= x[i - 1]
    t = 0
    q = m
    while q > 1:
        if x[_NDIM - 1] & q:
            t ^= q - 1
        q >>= 1
    for i in range(_NDIM):
        x[i] ^= t
    return x


def _transpose_to_axes(x: list[int], bits: int) -> list[int]:
    x = list(x)
    n = _NDIM
    t = x[n - 1] >> 1
    for i in range(n - 1, 0, -1):
        x[i] ^= x[i - 1]
    x[0] ^= t
    q = 2
    while q != (1 << bits):
        p = q - 1
        for i in range(n - 1, -1, -1):
            if x[i] & q:
                x[0] ^= p
            else:
                t = (x[0] ^ x[i]) & p
                x[0] ^= t
                x[i] ^= t
        q <<= 1
    return x


def hilbert_encode(cell, bits: int) -> int:
    """Map an integer cell in [0, 2^bits)^3 to its Hilbert curve index."""
    if not 1 <= bits <= 20:
        raise ValueError("bits must be in [1, 20]")
    cell = [int(c) for c in cell]
    if len(cell) != 3:
        raise ValueError("cell must have 3 coordinates")
    top = 1 << bits
    for c in cell:
        if not 0 <= c < top:
            raise ValueError(f"coordinate {c} out of range [0, {top})")
    tp = _axes_to_transpose(cell, bits)
    index = 0
    for pos in range(bits - 1, -1, -1):
        for i in range(_NDIM):
            index = (index << 1) | ((tp[i] >> pos) & 1)
    return index


def hilbert_decode(index: int, bits: int) -> tuple[int, int, int]:
    """Inverse of hilbert_encode."""
    if not 1 <= bits <= 20:
        raise ValueError("bits must be in [1, 20]")
    index = int(index)
    if not 0 <= index < (1 << (3 * bits)):
        raise ValueError(f"index {index} out of range")
    tp = [0, 0, 0]
    bitpos = 3 * bits
    for pos in range(bits - 1, -1, -1):
        for i in range(_NDIM):
            bitpos -= 1
            tp[i] |= ((index >> bitpos) & 1) << pos
    x = _transpose_to_axes(tp, bits)
    return (x[0], x[1], x[2])


@dataclass
class SerializedPatches:
    order: np.ndarray  # permutation of 0..G-1
    codes: np.ndarray  # Hilbert code per patch (unsorted, by patch index)
    projected_centers: np.ndarray  # (G, 3) centers in the global frame
    grf: Frame
    patch_set: PatchSet
    lrfs: list[RfcResult]


def serialize(
    ps: PatchSet,
    lrfs: list[RfcResult],
    cloud: PointCloud,
    bits: int = DEFAULT_BITS,
) -> SerializedPatches:
    """Order patches by the Hilbert index of their globally projected centers.

    The global frame comes from the full cloud, so the projected centers
    (and therefore the integer codes and the order) are identical for any
    rotated copy of the input.
    """
    grf_result = rfc(cloud.points, kind="global")
    if grf_result.degenerate:
        lam = grf_result.eigenvalues
        gaps = [float(lam[0] - lam[1]), float(lam[1] - lam[2])]
        raise DegenerateFrameError(
            f"degenerate global frame: eigenvalue gaps {gaps}",
            eigenvalues=lam,
        )
    projected = ps.centers @ grf_result.frame.rows.T
    lo = projected.min(axis=0)
    hi = projected.max(axis=0)
    span = hi - lo
    span[span < 1e-300] = 1.0  # flat axis: everything maps to cell 0
    unit = (projected - lo) / span
    cells = np.minimum((unit * (1 << bits)).astype(np.int64), (1 << bits) - 1)
    codes = np.array(
        [hilbert_encode(cells[i], bits) for i in range(ps.n_patches)], dtype=np.int64
    )
    order = np.argsort(codes, kind="stable")  # ties break by patch index
    return SerializedPatches(
        order=order,
        codes=codes,
        projected_centers=projected,
        grf=grf_result.frame,
        patch_set=ps,
        lrfs=lrfs,
    )
