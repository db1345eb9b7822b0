"""Selective state-space encoder: FiLM-modulated blocks with alternating
scan direction, pooled into a single shape embedding, plus weight
initialization and binary serialization.

All arithmetic downstream of the geometry stages runs in a configurable
dtype (float32 by default); reductions are sequential so repeated runs are
bit-identical.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .cloud_io import PointCloud, Prng, normalize_cloud
from .frames import DegenerateFrameError, RfcResult, patch_frames, rfc
from .geom3 import Frame
from .patcher import fps, knn_group
from .serializer import DEFAULT_BITS, serialize
from .tokenizer import Mlp, TokenizerParams, gelu, tokenize

CONFIG_FIELDS = (
    "n_blocks",
    "dim",
    "n_patches",
    "neighbors",
    "input_points",
    "state_dim",
    "conv_width",
    "film_bottleneck",
    "mlp_hidden",
    "hilbert_bits",
)


@dataclass
class ModelConfig:
    n_blocks: int = 12
    dim: int = 512
    n_patches: int = 64
    neighbors: int = 32
    input_points: int = 10000
    state_dim: int = 16
    conv_width: int = 4
    film_bottleneck: int = 128
    mlp_hidden: int = 128
    hilbert_bits: int = DEFAULT_BITS


@dataclass
class EmbeddingRecord:
    z_p: np.ndarray
    z_i: np.ndarray
    z_t: np.ndarray
    id: str = ""


@dataclass
class ModelWeights:
    config: ModelConfig
    tensors: dict[str, np.ndarray]
    version: int = 1

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


def silu(x: np.ndarray) -> np.ndarray:
    return x / (1.0 + np.exp(-x))


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(np.asarray(0.0, dtype=x.dtype), x)


def rms_norm(x: np.ndarray, gamma: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    scale = np.sqrt(np.mean(x * x, axis=-1, keepdims=True) + eps)
    return (x / scale) * gamma


def film(
    h: np.ndarray,
    pos: np.ndarray,
    ori: np.ndarray,
    w: ModelWeights,
    prefix: str,
) -> np.ndarray:
    """Channel-wise scale/shift of hidden states from positional and
    orientational context.

    pos, ori and pos*ori are each bottlenecked, concatenated, and mapped by
    a two-layer MLP to (gamma, beta); returns gamma * h + beta.
    """
    t = w.tensors
    bp = pos @ t[f"{prefix}.film.pos_bn.w"] + t[f"{prefix}.film.pos_bn.b"]
    bo = ori @ t[f"{prefix}.film.ori_bn.w"] + t[f"{prefix}.film.ori_bn.b"]
    bx = (pos * ori) @ t[f"{prefix}.film.prod_bn.w"] + t[f"{prefix}.film.prod_bn.b"]
    z = np.concatenate([bp, bo, bx], axis=-1)
    z = gelu(z @ t[f"{prefix}.film.mlp.w0"] + t[f"{prefix}.film.mlp.b0"])
    z = z @ t[f"{prefix}.film.mlp.w1"] + t[f"{prefix}.film.mlp.b1"]
    c = h.shape[-1]
    gamma, beta = z[..., :c], z[..., c:]
    return gamma * h + beta


@dataclass
class ScanParams:
    conv_w: np.ndarray  # (C, conv_width), depthwise causal
    conv_b: np.ndarray  # (C,)
    delta_w: np.ndarray  # (C, C)
    delta_b: np.ndarray  # (C,)
    b_w: np.ndarray  # (C, state_dim)
    b_b: np.ndarray  # (state_dim,)
    c_w: np.ndarray  # (C, state_dim)
    c_b: np.ndarray  # (state_dim,)
    a_log: np.ndarray  # (C, state_dim)
    d: np.ndarray  # (C,)
    gate_w: np.ndarray  # (C, C)
    gate_b: np.ndarray  # (C,)


def _scan_params(w: ModelWeights, prefix: str) -> ScanParams:
    t = w.tensors
    return ScanParams(
        conv_w=t[f"{prefix}.scan.conv_w"],
        conv_b=t[f"{prefix}.scan.conv_b"],
        delta_w=t[f"{prefix}.scan.delta.w"],
        delta_b=t[f"{prefix}.scan.delta.b"],
        b_w=t[f"{prefix}.scan.bproj.w"],
        b_b=t[f"{prefix}.scan.bproj.b"],
        c_w=t[f"{prefix}.scan.cproj.w"],
        c_b=t[f"{prefix}.scan.cproj.b"],
        a_log=t[f"{prefix}.scan.a_log"],
        d=t[f"{prefix}.scan.d"],
        gate_w=t[f"{prefix}.scan.gate.w"],
        gate_b=t[f"{prefix}.scan.gate.b"],
    )


def selective_scan(x: np.ndarray, p: ScanParams) -> np.ndarray:
    """Input-dependent linear recurrence over a (T, C) sequence.

    Strictly causal: depthwise causal convolution + SiLU, then a per-channel
    diagonal state-space recurrence with input-dependent step size and
    projections, a skip connection, and a SiLU gate computed from the raw
    input. Cost is O(T * C * state_dim).
    """
    x = np.asarray(x)
    t_len, c = x.shape
    if t_len < 1:
        raise ValueError("sequence must have at least one token")
    cw = p.conv_w.shape[1]
    padded = np.concatenate([np.zeros((cw - 1, c), dtype=x.dtype), x], axis=0)
    u = np.empty_like(x)
    for j in range(cw):
        contrib = padded[j : j + t_len] * p.conv_w[:, j]
        u = contrib if j == 0 else u + contrib
    u = silu(u + p.conv_b)

    delta = softplus(u @ p.delta_w + p.delta_b)  # (T, C)
    b_in = u @ p.b_w + p.b_b  # (T, state_dim)
    c_out = u @ p.c_w + p.c_b  # (T, state_dim)
    a = -np.exp(p.a_log)  # (C, state_dim)

    state = np.zeros((c, p.a_log.shape[1]), dtype=x.dtype)
    y = np.empty_like(x)
    for t in range(t_len):
        decay = np.exp(delta[t][:, None] * a)
        state = decay * state + (delta[t][:, None] * b_in[t][None, :]) * u[t][:, None]
        y[t] = state @ c_out[t] + p.d * u[t]
    return y * silu(x @ p.gate_w + p.gate_b)


def block_forward(
    h: np.ndarray,
    pos: np.ndarray,
    ori: np.ndarray,
    w: ModelWeights,
    layer: int,
) -> np.ndarray:
    """One encoder block: FiLM, optional sequence reversal, gated scan with
    pre-norm and residual.

    1-based layer 1 scans forward; direction alternates per layer.
    """
    t = w.tensors
    prefix = f"blk{layer}"
    h1 = film(h, pos, ori, w, prefix)
    backward = layer % 2 == 1  # 0-based: layers 1, 3, ... scan right-to-left
    seq = h1[::-1] if backward else h1
    z = rms_norm(seq, t[f"{prefix}.norm.g"])
    xin = z @ t[f"{prefix}.in_proj.w"] + t[f"{prefix}.in_proj.b"]
    y = selective_scan(xin, _scan_params(w, prefix))
    out = y @ t[f"{prefix}.out_proj.w"] + t[f"{prefix}.out_proj.b"]
    seq_out = seq + out
    return seq_out[::-1] if backward else seq_out


def _tokenizer_params(w: ModelWeights) -> TokenizerParams:
    t = w.tensors

    def mlp(prefix: str, n_layers: int = 2) -> Mlp:
        return Mlp(
            weights=[t[f"{prefix}.w{i}"] for i in range(n_layers)],
            biases=[t[f"{prefix}.b{i}"] for i in range(n_layers)],
        )

    return TokenizerParams(
        geo_stage1=mlp("tok.geo.s1"),
        geo_stage2=mlp("tok.geo.s2"),
        pos_mlp=mlp("tok.pos"),
        ori_mlp=mlp("tok.ori"),
    )


def _l2_normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n < 1e-30:
        raise ValueError("cannot normalize a zero embedding")
    return v / n


def encode(
    cloud: PointCloud,
    weights: ModelWeights,
    config: ModelConfig | None = None,
    dtype=np.float32,
    use_local_frames: bool = True,
) -> EmbeddingRecord:
    """Run the full pipeline: normalize, patch, frame, serialize, tokenize,
    block stack, mean-pool, adapters. All three outputs are L2-normalized.

    use_local_frames=False is a deliberately non-invariant ablation that
    replaces every patch frame with the identity.
    """
    cfg = config or weights.config
    if len(cloud) < max(cfg.n_patches, cfg.neighbors):
        raise ValueError(
            f"cloud {cloud.id!r} has {len(cloud)} points, "
            f"need at least {max(cfg.n_patches, cfg.neighbors)}"
        )
    try:
        normalized = normalize_cloud(cloud)
    except ValueError as exc:
        raise type(exc)(f"normalize: {exc}") from exc
    centers = fps(normalized, cfg.n_patches)
    ps = knn_group(normalized, centers, cfg.neighbors)
    try:
        lrfs = patch_frames(ps)
    except DegenerateFrameError as exc:
        raise DegenerateFrameError(f"patch_frames: {exc}") from exc
    try:
        sp = serialize(ps, lrfs, normalized, bits=cfg.hilbert_bits)
    except DegenerateFrameError as exc:
        raise DegenerateFrameError(
            f"serialize: {exc}", eigenvalues=exc.eigenvalues
        ) from exc
    if not use_local_frames:
        identity = RfcResult(
            frame=Frame(rows=np.eye(3), kind="local"),
            eigenvalues=np.ones(3),
            degenerate=False,
        )
        sp.lrfs = [identity for _ in lrfs]
    tokens = tokenize(sp, _tokenizer_params(weights), dtype=dtype)
    h = tokens.geo
    for layer in range(cfg.n_blocks):
        h = block_forward(h, tokens.pos, tokens.ori, weights, layer)
    h = rms_norm(h, weights.tensors["final.norm.g"])
    z_p = h.mean(axis=0)
    z_i = z_p @ weights.tensors["adapter.img.w"]
    z_t = z_p @ weights.tensors["adapter.txt.w"]
    return EmbeddingRecord(
        z_p=_l2_normalize(z_p),
        z_i=_l2_normalize(z_i),
        z_t=_l2_normalize(z_t),
        id=cloud.id,
    )


def _tensor_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    c = cfg.dim
    hid = cfg.mlp_hidden
    fb = cfg.film_bottleneck
    sd = cfg.state_dim
    cw = cfg.conv_width
    c1 = 256  # first point-encoder stage width
    shapes: dict[str, tuple[int, ...]] = {
        "tok.geo.s1.w0": (3, hid),
        "tok.geo.s1.b0": (hid,),
        "tok.geo.s1.w1": (hid, c1),
        "tok.geo.s1.b1": (c1,),
        "tok.geo.s2.w0": (2 * c1, 2 * c1),
        "tok.geo.s2.b0": (2 * c1,),
        "tok.geo.s2.w1": (2 * c1, c),
        "tok.geo.s2.b1": (c,),
        "tok.pos.w0": (3, hid),
        "tok.pos.b0": (hid,),
        "tok.pos.w1": (hid, c),
        "tok.pos.b1": (c,),
        "tok.ori.w0": (9, hid),
        "tok.ori.b0": (hid,),
        "tok.ori.w1": (hid, c),
        "tok.ori.b1": (c,),
        "final.norm.g": (c,),
        "adapter.img.w": (c, c),
        "adapter.txt.w": (c, c),
    }
    for l in range(cfg.n_blocks):
        p = f"blk{l}"
        shapes.update(
            {
                f"{p}.film.pos_bn.w": (c, fb),
                f"{p}.film.pos_bn.b": (fb,),
                f"{p}.film.ori_bn.w": (c, fb),
                f"{p}.film.ori_bn.b": (fb,),
                f"{p}.film.prod_bn.w": (c, fb),
                f"{p}.film.prod_bn.b": (fb,),
                f"{p}.film.mlp.w0": (3 * fb, hid),
                f"{p}.film.mlp.b0": (hid,),
                f"{p}.film.mlp.w1": (hid, 2 * c),
                f"{p}.film.mlp.b1": (2 * c,),
                f"{p}.norm.g": (c,),
                f"{p}.in_proj.w": (c, c),
                f"{p}.in_proj.b": (c,),
                f"{p}.scan.conv_w": (c, cw),
                f"{p}.scan.conv_b": (c,),
                f"{p}.scan.delta.w": (c, c),
                f"{p}.scan.delta.b": (c,),
                f"{p}.scan.bproj.w": (c, sd),
                f"{p}.scan.bproj.b": (sd,),
                f"{p}.scan.cproj.w": (c, sd),
                f"{p}.scan.cproj.b": (sd,),
                f"{p}.scan.a_log": (c, sd),
                f"{p}.scan.d": (c,),
                f"{p}.scan.gate.w": (c, c),
                f"{p}.scan.gate.b": (c,),
                f"{p}.out_proj.w": (c, c),
                f"{p}.out_proj.b": (c,),
            }
        )
    return shapes


def _init_fan_in(name: str, shapes: dict[str, tuple[int, ...]]) -> int:
    comp = name.rsplit(".", 1)[-1]
    if comp in ("conv_w", "conv_b"):
        # depthwise convolution: fan-in per channel is the kernel width
        return shapes[name.rsplit(".", 1)[0] + ".conv_w"][1]
    if comp in ("b", "b0", "b1"):
        wname = name[: -len(comp)] + "w" + comp[1:]
        return shapes[wname][0]
    return shapes[name][0]


def init_weights(config: ModelConfig, seed: int = 0) -> ModelWeights:
    """Deterministic initialization: uniform(+-1/sqrt(fan_in)) for linear
    maps, ones for norms and skip gains, a log-spaced decay spectrum so the
    per-channel state decay rates span -1 .. -state_dim."""
    rng = Prng(seed)
    shapes = _tensor_shapes(config)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in sorted(shapes.items()):
        if name.endswith(".a_log"):
            row = np.log(np.arange(1, config.state_dim + 1, dtype=np.float64))
            t = np.tile(row, (config.dim, 1))
        elif name.endswith("norm.g") or name.endswith(".d"):
            t = np.ones(shape)
        else:
            bound = 1.0 / np.sqrt(_init_fan_in(name, shapes))
            t = rng.uniform_array(-bound, bound, int(np.prod(shape))).reshape(shape)
        tensors[name] = t.astype(np.float32)
    return ModelWeights(config=config, tensors=tensors)


_WEIGHTS_MAGIC = b"RIMW"
_WEIGHTS_VERSION = 1


def save_weights(weights: ModelWeights, path) -> None:
    """Binary weight file: magic, u16 version, u32 config fields, then a
    tensor table (u16 name length, name, u8 rank, u32 dims, f32 LE data)."""
    with open(path, "wb") as fh:
        fh.write(_WEIGHTS_MAGIC)
        fh.write(struct.pack("<H", _WEIGHTS_VERSION))
        for f in CONFIG_FIELDS:
            fh.write(struct.pack("<I", getattr(weights.config, f)))
        fh.write(struct.pack("<I", len(weights.tensors)))
        for name in sorted(weights.tensors):
            t = np.ascontiguousarray(weights.tensors[name], dtype="<f4")
            nb = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<B", t.ndim))
            for d in t.shape:
                fh.write(struct.pack("<I", d))
            fh.write(t.tobytes())


def load_weights(path) -> ModelWeights:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _WEIGHTS_MAGIC:
        raise ValueError(f"{path}: bad magic")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != _WEIGHTS_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    off = 6
    cfg_vals = {}
    for f in CONFIG_FIELDS:
        (cfg_vals[f],) = struct.unpack_from("<I", data, off)
        off += 4
    config = ModelConfig(**cfg_vals)
    (n_tensors,) = struct.unpack_from("<I", data, off)
    off += 4
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (nlen,) = struct.unpack_from("<H", data, off)
        off += 2
        name = data[off : off + nlen].decode("utf-8")
        off += nlen
        rank = data[off]
        off += 1
        dims = []
        for _ in range(rank):
            (d,) = struct.unpack_from("<I", data, off)
            off += 4
            dims.append(d)
        count = int(np.prod(dims)) if dims else 1
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=off).reshape(dims)
        off += 4 * count
        tensors[name] = arr.copy()
    return ModelWeights(config=config, tensors=tensors, version=version)
