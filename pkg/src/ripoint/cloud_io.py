"""Point cloud I/O, normalization, synthetic generation, and the shared PRNG.

All loaders return coordinates exactly as stored; normalization is a
separate, explicit step so file round trips stay lossless.
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


class FormatError(ValueError):
    """Raised when a cloud file does not parse under its declared format."""


class DegenerateCloudError(ValueError):
    """Raised when a cloud has zero spatial extent."""


_SM64_GAMMA = 0x9E3779B97F4A7C15
_SM64_M1 = 0xBF58476D1CE4E5B9
_SM64_M2 = 0x94D049BB133111EB


class Prng:
    """Deterministic splitmix64 generator.

    Identical seeds produce identical streams on every platform; all
    randomness in the library flows through this class. The j-th output
    depends only on seed + j * gamma, so bulk draws match the scalar stream
    bit for bit.
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _SM64_GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _SM64_M1) & _MASK64
        z = ((z ^ (z >> 27)) * _SM64_M2) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def next_u64_array(self, n: int) -> np.ndarray:
        idx = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self.state) + idx * np.uint64(_SM64_GAMMA)
        self.state = int(z[-1]) if n > 0 else self.state
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_SM64_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_SM64_M2)
        return z ^ (z >> np.uint64(31))

    def random(self) -> float:
        """Float in [0, 1) with 53 bits of entropy."""
        return (self.next_u64() >> 11) * 2.0**-53

    def random_array(self, n: int) -> np.ndarray:
        return (self.next_u64_array(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def uniform_array(self, lo: float, hi: float, n: int) -> np.ndarray:
        return lo + (hi - lo) * self.random_array(n)

    def normals(self, n: int) -> np.ndarray:
        """Standard normals via Box-Muller; u1 is shifted into (0, 1]."""
        u1 = (
            (self.next_u64_array(n) >> np.uint64(11)).astype(np.float64) + 1.0
        ) * 2.0**-53
        u2 = self.random_array(n)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def normal(self) -> float:
        return float(self.normals(1)[0])


@dataclass
class PointCloud:
    """A raw point cloud: (N, 3) coordinates, optional (N, 3) RGB in [0, 1]."""

    points: np.ndarray
    colors: np.ndarray | None = None
    id: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("points must have shape (N, 3)")
        if self.points.shape[0] == 0:
            raise ValueError("empty cloud")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("points contain non-finite coordinates")
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.float64)
            if self.colors.shape != self.points.shape:
                raise ValueError("colors must match points in shape")

    def __len__(self) -> int:
        return self.points.shape[0]


def load_cloud(path, fmt: str = "xyz_ascii") -> PointCloud:
    """Load a cloud from disk with coordinates exactly as stored.

    Parameters
    ----------
    path : path-like
    fmt : {"xyz_ascii", "pcb1_binary"}
    """
    if fmt == "xyz_ascii":
        return _load_xyz(path)
    if fmt == "pcb1_binary":
        return _load_pcb1(path)
    raise ValueError(f"unknown format {fmt!r}")


def save_cloud(cloud: PointCloud, path, fmt: str = "xyz_ascii") -> None:
    if fmt == "xyz_ascii":
        _save_xyz(cloud, path)
    elif fmt == "pcb1_binary":
        _save_pcb1(cloud, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _load_xyz(path) -> PointCloud:
    points = []
    colors = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) not in (3, 6):
                raise FormatError(
                    f"{path}: line {lineno}: expected 3 or 6 fields, got {len(parts)}"
                )
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from exc
            points.append(vals[:3])
            if len(vals) == 6:
                colors.append(vals[3:])
    if not points:
        raise FormatError(f"{path}: empty cloud")
    if colors and len(colors) != len(points):
        raise FormatError(f"{path}: mixed colored and uncolored lines")
    import os

    cid = os.path.splitext(os.path.basename(str(path)))[0]
    return PointCloud(
        points=np.array(points, dtype=np.float64),
        colors=np.array(colors, dtype=np.float64) if colors else None,
        id=cid,
    )


def _save_xyz(cloud: PointCloud, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, p in enumerate(cloud.points):
            fields = [repr(float(v)) for v in p]
            if cloud.colors is not None:
                fields += [repr(float(v)) for v in cloud.colors[i]]
            fh.write(" ".join(fields) + "\n")


_PCB1_MAGIC = b"PCB1"


def _load_pcb1(path) -> PointCloud:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _PCB1_MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0")
    if len(data) < 9:
        raise FormatError(f"{path}: truncated header at byte {len(data)}")
    (n,) = struct.unpack_from("<I", data, 4)
    has_colors = data[8]
    if n == 0:
        raise FormatError(f"{path}: empty cloud")
    if has_colors not in (0, 1):
        raise FormatError(f"{path}: bad color flag at byte 8")
    per_point = 12 * (2 if has_colors else 1)
    need = 9 + n * per_point
    if len(data) != need:
        raise FormatError(
            f"{path}: truncated record: need {need} bytes, have {len(data)}"
        )
    raw = np.frombuffer(data, dtype="<f4", count=n * per_point // 4, offset=9)
    if has_colors:
        raw = raw.reshape(n, 6)
        points, colors = raw[:, :3], raw[:, 3:]
    else:
        points, colors = raw.reshape(n, 3), None
    import os

    cid = os.path.splitext(os.path.basename(str(path)))[0]
    return PointCloud(
        points=points.astype(np.float64),
        colors=colors.astype(np.float64) if colors is not None else None,
        id=cid,
    )


def _save_pcb1(cloud: PointCloud, path) -> None:
    has_colors = cloud.colors is not None
    with open(path, "wb") as fh:
        fh.write(_PCB1_MAGIC)
        fh.write(struct.pack("<IB", len(cloud), 1 if has_colors else 0))
        if has_colors:
            rec = np.hstack([cloud.points, cloud.colors]).astype("<f4")
        else:
            rec = cloud.points.astype("<f4")
        fh.write(rec.tobytes())


def normalize_cloud(cloud: PointCloud) -> PointCloud:
    """Center at the centroid and scale so the farthest point has norm 1."""
    centered = cloud.points - cloud.points.mean(axis=0)
    scale = float(np.linalg.norm(centered, axis=1).max())
    if scale < 1e-30:
        raise DegenerateCloudError(f"cloud {cloud.id!r} has zero extent")
    return PointCloud(points=centered / scale, colors=cloud.colors, id=cloud.id)


CLOUD_KINDS = ("ellipsoid", "box_surface", "two_lobes", "helix")


def gen_cloud(kind: str, n: int, rng: Prng, id: str = "") -> PointCloud:
    """Generate a synthetic test cloud; pure function of (kind, n, seed).

    two_lobes and helix are deliberately asymmetric so PCA axes and their
    sign disambiguation are stable.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "ellipsoid":
        pts = _gen_ellipsoid(n, rng)
    elif kind == "box_surface":
        pts = _gen_box_surface(n, rng)
    elif kind == "two_lobes":
        pts = _gen_two_lobes(n, rng)
    elif kind == "helix":
        pts = _gen_helix(n, rng)
    else:
        raise ValueError(f"unknown cloud kind {kind!r}")
    return PointCloud(points=pts, id=id or kind)


def _gen_ellipsoid(n: int, rng: Prng, axes=(3.0, 2.0, 1.0)) -> np.ndarray:
    pts = np.empty((n, 3))
    for i in range(n):
        v = rng.normals(3)
        nv = np.linalg.norm(v)
        while nv < 1e-12:
            v = rng.normals(3)
            nv = np.linalg.norm(v)
        pts[i] = (v / nv) * np.asarray(axes)
    return pts


def _gen_box_surface(n: int, rng: Prng, sides=(3.0, 2.0, 1.0)) -> np.ndarray:
    # Small normal jitter keeps faces from being exactly coplanar, which
    # would leave per-patch PCA with an undetermined third-axis sign.
    sx, sy, sz = sides
    areas = np.array([sy * sz, sx * sz, sx * sy], dtype=np.float64)
    areas = areas / areas.sum()
    pts = np.empty((n, 3))
    for i in range(n):
        u = rng.random()
        axis = 0 if u < areas[0] else (1 if u < areas[0] + areas[1] else 2)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        p = np.array(
            [rng.uniform(-sx / 2, sx / 2), rng.uniform(-sy / 2, sy / 2), rng.uniform(-sz / 2, sz / 2)]
        )
        p[axis] = sign * (sx, sy, sz)[axis] / 2
        pts[i] = p + rng.normals(3) * 0.02
    return pts


def _gen_two_lobes(n: int, rng: Prng) -> np.ndarray:
    # Large lobe at +x, smaller offset lobe at -x/+y: no mirror symmetry.
    n_big = (2 * n + 2) // 3
    pts = np.empty((n, 3))
    for i in range(n):
        if i < n_big:
            center = np.array([2.0, 0.0, 0.0])
            spread = np.array([1.0, 0.7, 0.4])
        else:
            center = np.array([-2.0, 0.8, 0.3])
            spread = np.array([0.5, 0.35, 0.25])
        pts[i] = center + rng.normals(3) * spread
    return pts


def _gen_helix(n: int, rng: Prng) -> np.ndarray:
    # Conical helix: radius grows along the axis, breaking end-to-end symmetry.
    pts = np.empty((n, 3))
    for i in range(n):
        t = rng.random()
        theta = 6.0 * math.pi * t
        radius = 0.5 + 2.0 * t
        jitter = rng.normals(3) * 0.03
        pts[i] = (
            np.array([radius * math.cos(theta), radius * math.sin(theta), 4.0 * t])
            + jitter
        )
    return pts
