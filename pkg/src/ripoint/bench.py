"""Complexity benchmarks: exact operation counts for the patchwise vs.
all-pairs orientation embeddings, and wall-clock scaling of the selective
scan against a quadratic attention reference.

Op counts are instrumented, never estimated, so the linear-vs-quadratic
slopes are deterministic; wall-clock is secondary evidence.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .cloud_io import Prng
from .geom3 import Frame, random_rotation
from .ssm_model import ScanParams, selective_scan
from .tokenizer import Mlp, mlp_calls, ori_embed, pairwise_ori_baseline, reset_mlp_calls


@dataclass
class BenchReport:
    sizes: list[int]
    patchwise_ops: list[int]
    pairwise_ops: list[int]
    scan_sizes: list[int]
    scan_seconds: list[float]
    attention_seconds: list[float]
    patchwise_slope: float
    pairwise_slope: float
    scan_slope: float
    attention_slope: float


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(xs, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    lx = lx - lx.mean()
    return float((lx @ (ly - ly.mean())) / (lx @ lx))


def _random_frames(g: int, rng: Prng) -> list[Frame]:
    return [Frame(rows=random_rotation(rng), kind="local") for _ in range(g)]


def _small_ori_mlp(dim: int, hidden: int, rng: Prng) -> Mlp:
    def lin(n_in, n_out):
        bound = 1.0 / np.sqrt(n_in)
        w = rng.uniform_array(-bound, bound, n_in * n_out).reshape(n_in, n_out)
        b = rng.uniform_array(-bound, bound, n_out)
        return w, b

    w0, b0 = lin(9, hidden)
    w1, b1 = lin(hidden, dim)
    return Mlp(weights=[w0, w1], biases=[b0, b1])


def ori_op_counts(sizes, dim: int = 8, hidden: int = 32, seed: int = 0):
    """Exact MLP-call counts of the patchwise and pairwise orientation
    paths at each patch count."""
    rng = Prng(seed)
    mlp = _small_ori_mlp(dim, hidden, rng)
    patchwise = []
    pairwise = []
    for g in sizes:
        frames = _random_frames(g, rng)
        global_frame = frames[0]
        reset_mlp_calls()
        for f in frames:
            ori_embed(f.rows @ global_frame.rows.T, mlp)
        patchwise.append(mlp_calls())
        reset_mlp_calls()
        pairwise_ori_baseline(frames, mlp)
        pairwise.append(mlp_calls())
    reset_mlp_calls()
    return patchwise, pairwise


def _scan_params(dim: int, state_dim: int, conv_width: int, rng: Prng) -> ScanParams:
    def u(*shape):
        bound = 1.0 / np.sqrt(shape[0])
        return (
            rng.uniform_array(-bound, bound, int(np.prod(shape)))
            .reshape(shape)
            .astype(np.float32)
        )

    return ScanParams(
        conv_w=u(dim, conv_width),
        conv_b=u(dim),
        delta_w=u(dim, dim),
        delta_b=u(dim),
        b_w=u(dim, state_dim),
        b_b=u(state_dim),
        c_w=u(dim, state_dim),
        c_b=u(state_dim),
        a_log=np.tile(
            np.log(np.arange(1, state_dim + 1, dtype=np.float32)), (dim, 1)
        ),
        d=np.ones(dim, dtype=np.float32),
        gate_w=u(dim, dim),
        gate_b=u(dim),
    )


def _attention_reference(x: np.ndarray) -> np.ndarray:
    """Single-head self-attention pass: the quadratic baseline."""
    scale = 1.0 / np.sqrt(x.shape[1])
    scores = (x @ x.T) * scale
    scores -= scores.max(axis=1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights @ x


def scan_timings(sizes, dim: int = 64, state_dim: int = 16, repeats: int = 5, seed: int = 0):
    """Median wall-clock of the linear scan and the quadratic attention
    reference at each sequence length."""
    rng = Prng(seed)
    params = _scan_params(dim, state_dim, 4, rng)
    scan_secs = []
    attn_secs = []
    for t_len in sizes:
        x = rng.uniform_array(-1.0, 1.0, t_len * dim).reshape(t_len, dim).astype(
            np.float32
        )
        scan_runs = []
        attn_runs = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            selective_scan(x, params)
            scan_runs.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            _attention_reference(x)
            attn_runs.append(time.perf_counter() - t0)
        scan_secs.append(float(np.median(scan_runs)))
        attn_secs.append(float(np.median(attn_runs)))
    return scan_secs, attn_secs


def run_bench(
    sizes=(64, 256, 1024),
    scan_sizes=(256, 1024, 4096),
    repeats: int = 5,
    seed: int = 0,
) -> BenchReport:
    sizes = list(sizes)
    scan_sizes = list(scan_sizes)
    if len(sizes) < 2 or len(scan_sizes) < 2:
        raise ValueError("need at least 2 sizes per series")
    patchwise, pairwise = ori_op_counts(sizes, seed=seed)
    scan_secs, attn_secs = scan_timings(scan_sizes, repeats=repeats, seed=seed)
    return BenchReport(
        sizes=sizes,
        patchwise_ops=patchwise,
        pairwise_ops=pairwise,
        scan_sizes=scan_sizes,
        scan_seconds=scan_secs,
        attention_seconds=attn_secs,
        patchwise_slope=fit_loglog_slope(sizes, patchwise),
        pairwise_slope=fit_loglog_slope(sizes, pairwise),
        scan_slope=fit_loglog_slope(scan_sizes, scan_secs),
        attention_slope=fit_loglog_slope(scan_sizes, attn_secs),
    )
