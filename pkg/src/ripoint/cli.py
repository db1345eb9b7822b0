"""Command-line surface: embedding, invariance checking, serialization
inspection, retrieval evaluation, and complexity benchmarking.

Every command is deterministic given its seed and inputs; machine-readable
outputs are byte-identical across reruns. Exit codes: 0 success, 1
validation failure, 2 I/O or format error. RIPOINT_THREADS is accepted for
interface compatibility; computation is sequential, so any value yields
identical numeric output.
"""

import functools
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import bench as bench_mod
from .cloud_io import (
    CLOUD_KINDS,
    FormatError,
    PointCloud,
    Prng,
    gen_cloud,
    load_cloud,
    save_cloud,
)
from .frames import DegenerateFrameError
from .geom3 import random_rotation
from .learn_eval import (
    ROBUSTNESS_REGIMES,
    RetrievalRun,
    load_ground_truth,
    mean_average_precision,
    ndcg_at_k,
    rr_at_k,
    save_embeddings,
)
from .patcher import fps, knn_group
from .frames import patch_frames
from .serializer import serialize
from .ssm_model import (
    ModelConfig,
    encode,
    init_weights,
    load_weights,
    save_weights,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _errors_to_exit(fn):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (click.ClickException, SystemExit):
            raise
        except FormatError as exc:
            click.echo(f"format error: {exc}", err=True)
            sys.exit(EXIT_IO)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(EXIT_IO)
        except ValueError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)

    return wrapper


def _check_threads_env() -> None:
    val = os.environ.get("RIPOINT_THREADS")
    if val is not None:
        try:
            n = int(val)
        except ValueError:
            raise click.ClickException(f"RIPOINT_THREADS must be an integer, got {val!r}")
        if n < 1:
            raise click.ClickException("RIPOINT_THREADS must be >= 1")


def _load_any(path: Path) -> PointCloud:
    fmt = "pcb1_binary" if path.suffix == ".pcb" else "xyz_ascii"
    return load_cloud(path, fmt)


def _collect_clouds(paths) -> list[PointCloud]:
    files: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(q for q in p.iterdir() if q.suffix in (".xyz", ".pcb")))
        else:
            files.append(p)
    if not files:
        raise click.ClickException("no input cloud files found")
    return [_load_any(f) for f in files]


def _get_weights(weights_path, seed, config: ModelConfig):
    if weights_path is not None:
        return load_weights(weights_path)
    return init_weights(config, seed)


_CONFIG_OPTIONS = [
    click.option("--blocks", type=int, default=ModelConfig.n_blocks, show_default=True),
    click.option("--dim", type=int, default=ModelConfig.dim, show_default=True),
    click.option("--patches", type=int, default=ModelConfig.n_patches, show_default=True),
    click.option("--neighbors", type=int, default=ModelConfig.neighbors, show_default=True),
]


def _config_options(fn):
    for opt in reversed(_CONFIG_OPTIONS):
        fn = opt(fn)
    return fn


def _make_config(blocks, dim, patches, neighbors) -> ModelConfig:
    return ModelConfig(n_blocks=blocks, dim=dim, n_patches=patches, neighbors=neighbors)


@click.group()
def main():
    """Rotation-invariant point cloud encoder toolkit."""
    _check_threads_env()


@main.command("gen")
@click.option("--kind", type=click.Choice(CLOUD_KINDS), required=True)
@click.option("--n", type=int, default=1024, show_default=True)
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["xyz_ascii", "pcb1_binary"]), default="xyz_ascii")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@_errors_to_exit
def cmd_gen(kind, n, count, seed, fmt, out_dir):
    """Generate synthetic clouds for experiments."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".pcb" if fmt == "pcb1_binary" else ".xyz"
    for i in range(count):
        rng = Prng(seed + i)
        cloud = gen_cloud(kind, n, rng, id=f"{kind}_{seed + i}")
        save_cloud(cloud, out / f"{cloud.id}{ext}", fmt)
    click.echo(f"wrote {count} {kind} cloud(s) to {out}")


@main.command("init-weights")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_config_options
@_errors_to_exit
def cmd_init_weights(seed, out, blocks, dim, patches, neighbors):
    """Create a deterministic random-weight model file."""
    weights = init_weights(_make_config(blocks, dim, patches, neighbors), seed)
    save_weights(weights, out)
    click.echo(f"wrote weights to {out}")


@main.command("embed")
@click.option("--input", "inputs", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--weights", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_config_options
@_errors_to_exit
def cmd_embed(inputs, weights, seed, out, blocks, dim, patches, neighbors):
    """Encode clouds into an EMB1 embedding file (z_p rows)."""
    config = _make_config(blocks, dim, patches, neighbors)
    w = _get_weights(weights, seed, config)
    clouds = _collect_clouds(inputs)
    ids = []
    rows = []
    failures = []
    for cloud in clouds:
        try:
            rec = encode(cloud, w)
            ids.append(rec.id)
            rows.append(rec.z_p)
        except (ValueError, DegenerateFrameError) as exc:
            failures.append((cloud.id, str(exc)))
    for cid, msg in failures:
        click.echo(f"FAIL {cid}: {msg}", err=True)
    if rows:
        save_embeddings(out, ids, np.stack(rows))
        click.echo(f"wrote {len(ids)} embedding(s) to {out}")
    if failures:
        sys.exit(EXIT_VALIDATION)


@main.command("check-invariance")
@click.option("--input", "inputs", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--weights", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--rotations", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tolerance", type=float, default=1e-4, show_default=True)
@_config_options
@_errors_to_exit
def cmd_check_invariance(
    inputs, weights, rotations, seed, tolerance, blocks, dim, patches, neighbors
):
    """Report the max embedding deviation over random rotations per cloud."""
    config = _make_config(blocks, dim, patches, neighbors)
    w = _get_weights(weights, seed, config)
    clouds = _collect_clouds(inputs)
    rng = Prng(seed)
    all_ok = True
    for cloud in clouds:
        try:
            base = encode(cloud, w).z_p
            deviation = 0.0
            for _ in range(rotations):
                r = random_rotation(rng)
                rotated = PointCloud(points=cloud.points @ r, colors=cloud.colors, id=cloud.id)
                z = encode(rotated, w).z_p
                deviation = max(deviation, float(np.abs(z - base).max()))
        except DegenerateFrameError as exc:
            click.echo(f"SKIP {cloud.id}: degenerate ({exc})")
            continue
        status = "PASS" if deviation <= tolerance else "FAIL"
        if status == "FAIL":
            all_ok = False
        click.echo(f"{status} {cloud.id}: max deviation {deviation:.3e} (tol {tolerance:.1e})")
    sys.exit(EXIT_OK if all_ok else EXIT_VALIDATION)


@main.command("serialize")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--patches", type=int, default=ModelConfig.n_patches, show_default=True)
@click.option("--neighbors", type=int, default=ModelConfig.neighbors, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_errors_to_exit
def cmd_serialize(input_path, patches, neighbors, out):
    """Dump the Hilbert serialization of one cloud as CSV."""
    from .cloud_io import normalize_cloud

    cloud = normalize_cloud(_load_any(Path(input_path)))
    centers = fps(cloud, patches)
    ps = knn_group(cloud, centers, neighbors)
    lrfs = patch_frames(ps)
    sp = serialize(ps, lrfs, cloud)
    ranks = np.empty(len(sp.order), dtype=np.int64)
    ranks[sp.order] = np.arange(len(sp.order))
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("patch_index,hilbert_code,rank\n")
        for i in range(len(sp.codes)):
            fh.write(f"{i},{sp.codes[i]},{ranks[i]}\n")
    click.echo(f"wrote serialization of {len(sp.codes)} patches to {out}")


@main.command("retrieve")
@click.option("--queries", required=True, type=click.Path(exists=True))
@click.option("--database", required=True, type=click.Path(exists=True))
@click.option("--truth", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--weights", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--regime", type=click.Choice(ROBUSTNESS_REGIMES), default="II", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_config_options
@_errors_to_exit
def cmd_retrieve(
    queries, database, truth, weights, regime, seed, k, out, blocks, dim, patches, neighbors
):
    """Encode query/database clouds under a rotation regime and print
    retrieval metrics."""
    config = _make_config(blocks, dim, patches, neighbors)
    w = _get_weights(weights, seed, config)
    q_clouds = _collect_clouds([queries])
    db_clouds = _collect_clouds([database])
    relevance = load_ground_truth(truth)
    db_ids = {c.id for c in db_clouds}
    missing = sorted(
        set().union(*relevance.values()) - db_ids | (set(relevance) - {c.id for c in q_clouds})
    )
    if missing:
        raise click.ClickException(f"ids in truth file missing from inputs: {missing}")

    rng = Prng(seed)
    rotate_db = regime in ("SO3I", "SO3SO3")
    rotate_q = regime in ("ISO3", "SO3SO3")

    def prep(clouds, rotate):
        prepared = []
        for c in clouds:
            r = random_rotation(rng)
            pts = c.points @ r if rotate else c.points
            prepared.append(PointCloud(points=pts, colors=c.colors, id=c.id))
        return prepared

    db_emb = np.stack([encode(c, w).z_p for c in prep(db_clouds, rotate_db)])
    q_prepared = [c for c in prep(q_clouds, rotate_q) if c.id in relevance]
    q_emb = np.stack([encode(c, w).z_p for c in q_prepared])
    run = RetrievalRun(
        query_ids=[c.id for c in q_prepared],
        query_embeddings=q_emb,
        database_ids=[c.id for c in db_clouds],
        database_embeddings=db_emb,
        relevance=relevance,
    )
    metrics = {
        "RR@1": rr_at_k(run, 1),
        f"RR@{k}": rr_at_k(run, k),
        f"NDCG@{k}": ndcg_at_k(run, k),
        "mAP": mean_average_precision(run),
    }
    for name, val in metrics.items():
        click.echo(f"{name}: {val:.4f}")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("metric,value\n")
            for name, val in metrics.items():
                fh.write(f"{name},{val:.6f}\n")


@main.command("bench")
@click.option("--sizes", default="64,256,1024", show_default=True, help="patch counts")
@click.option("--scan-sizes", default="256,1024,4096", show_default=True, help="sequence lengths")
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_errors_to_exit
def cmd_bench(sizes, scan_sizes, repeats, seed, out):
    """Benchmark linear patchwise vs. quadratic pairwise orientation paths
    and scan vs. attention wall-clock scaling."""
    size_list = [int(s) for s in sizes.split(",")]
    scan_list = [int(s) for s in scan_sizes.split(",")]
    report = bench_mod.run_bench(size_list, scan_list, repeats=repeats, seed=seed)
    click.echo("op counts (exact):")
    for g, p, q in zip(report.sizes, report.patchwise_ops, report.pairwise_ops):
        click.echo(f"  G={g}: patchwise={p} pairwise={q}")
    click.echo(
        f"  slopes: patchwise={report.patchwise_slope:.3f} pairwise={report.pairwise_slope:.3f}"
    )
    click.echo("wall-clock (median of repeats):")
    for t, s, a in zip(report.scan_sizes, report.scan_seconds, report.attention_seconds):
        click.echo(f"  T={t}: scan={s:.6f}s attention={a:.6f}s")
    click.echo(
        f"  slopes: scan={report.scan_slope:.3f} attention={report.attention_slope:.3f}"
    )
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("series,size,value\n")
            for g, p in zip(report.sizes, report.patchwise_ops):
                fh.write(f"patchwise_ops,{g},{p}\n")
            for g, q in zip(report.sizes, report.pairwise_ops):
                fh.write(f"pairwise_ops,{g},{q}\n")
            for t, s in zip(report.scan_sizes, report.scan_seconds):
                fh.write(f"scan_seconds,{t},{s:.6f}\n")
            for t, a in zip(report.scan_sizes, report.attention_seconds):
                fh.write(f"attention_seconds,{t},{a:.6f}\n")


if __name__ == "__main__":
    main()
