"""Cross-modal contrastive loss with analytic gradients, retrieval metrics,
and the rotation-robustness evaluation protocols."""

import struct
from dataclasses import dataclass

import numpy as np

from .cloud_io import PointCloud, Prng
from .geom3 import random_rotation

DEFAULT_TEMPERATURE = 0.07

ROBUSTNESS_REGIMES = ("II", "ISO3", "SO3I", "SO3SO3")


@dataclass
class TrainingBatch:
    z_i_rows: np.ndarray  # (B, C) shape-side visual embeddings
    z_t_rows: np.ndarray  # (B, C) shape-side semantic embeddings
    f_i_rows: np.ndarray  # (B, C) anchor image embeddings
    f_t_rows: np.ndarray  # (B, C) anchor text embeddings
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        b = self.z_i_rows.shape[0]
        for name in ("z_i_rows", "z_t_rows", "f_i_rows", "f_t_rows"):
            rows = getattr(self, name)
            if rows.shape[0] != b or b < 1:
                raise ValueError("batch sides must share a positive batch size")
            norms = np.linalg.norm(rows, axis=1)
            if np.abs(norms - 1.0).max() > 1e-5:
                raise ValueError(f"{name} rows are not L2-normalized")


def info_nce(z: np.ndarray, f: np.ndarray, tau: float):
    """Symmetric InfoNCE over one modality pair.

    Returns (loss, grad_z, grad_f) where the gradients are the exact
    derivatives of the loss with respect to the raw embedding matrices.
    """
    if tau <= 0:
        raise ValueError("temperature must be positive")
    z = np.asarray(z, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    b = z.shape[0]
    s = (z @ f.T) / tau  # (B, B) logits
    # log-softmax over rows of s (z anchors) and rows of s^T (f anchors)
    def log_softmax_rows(m):
        shifted = m - m.max(axis=1, keepdims=True)
        return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))

    lz = log_softmax_rows(s)
    lf = log_softmax_rows(s.T)
    diag = np.arange(b)
    loss = -(lz[diag, diag].sum() + lf[diag, diag].sum()) / (2.0 * b)

    pz = np.exp(lz)
    pf = np.exp(lf)
    eye = np.eye(b)
    ds = ((pz - eye) + (pf - eye).T) / (2.0 * b)  # dloss/ds
    grad_z = (ds @ f) / tau
    grad_f = (ds.T @ z) / tau
    return float(loss), grad_z, grad_f


def total_loss(batch: TrainingBatch):
    """Sum of the shape-image and shape-text InfoNCE terms.

    Returns (loss, grads) where grads maps embedding names to gradient
    matrices.
    """
    li, gzi, gfi = info_nce(batch.z_i_rows, batch.f_i_rows, batch.temperature)
    lt, gzt, gft = info_nce(batch.z_t_rows, batch.f_t_rows, batch.temperature)
    grads = {"z_i": gzi, "f_i": gfi, "z_t": gzt, "f_t": gft}
    return li + lt, grads


@dataclass
class RetrievalRun:
    query_ids: list[str]
    query_embeddings: np.ndarray  # (Q, C)
    database_ids: list[str]
    database_embeddings: np.ndarray  # (D, C)
    relevance: dict[str, set[str]]  # query id -> relevant database ids

    def __post_init__(self):
        if len(set(self.query_ids)) != len(self.query_ids):
            raise ValueError("duplicate query ids")
        if len(set(self.database_ids)) != len(self.database_ids):
            raise ValueError("duplicate database ids")
        db = set(self.database_ids)
        for qid, rel in self.relevance.items():
            missing = rel - db
            if missing:
                raise ValueError(f"query {qid!r}: relevant ids not in database: {sorted(missing)}")


def rank(query: np.ndarray, database: np.ndarray) -> np.ndarray:
    """Indices of database rows by descending cosine similarity.

    Ties break by database insertion order; rows are assumed normalized.
    """
    if database.shape[0] == 0:
        raise ValueError("empty database")
    sims = database @ query
    return np.argsort(-sims, kind="stable")


def _ranked_lists(run: RetrievalRun) -> list[np.ndarray]:
    return [rank(q, run.database_embeddings) for q in run.query_embeddings]


def _gt_rank(run: RetrievalRun, qid: str, ranked: np.ndarray) -> int:
    """1-based rank of the best-ranked relevant item for a query."""
    rel = run.relevance[qid]
    for pos, idx in enumerate(ranked, start=1):
        if run.database_ids[idx] in rel:
            return pos
    raise ValueError(f"query {qid!r} has no relevant item in the database")


def rr_at_k(run: RetrievalRun, k: int) -> float:
    """Percentage of queries whose ground truth ranks within the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = _ranked_lists(run)
    hits = sum(
        1
        for qid, r in zip(run.query_ids, ranked)
        if _gt_rank(run, qid, r) <= k
    )
    return 100.0 * hits / len(run.query_ids)


def ndcg_at_k(run: RetrievalRun, k: int) -> float:
    """Binary single-relevant NDCG: 1/log2(rank+1) within the top k, ideal
    DCG = 1, averaged over queries, as a percentage."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = _ranked_lists(run)
    total = 0.0
    for qid, r in zip(run.query_ids, ranked):
        pos = _gt_rank(run, qid, r)
        if pos <= k:
            total += 1.0 / np.log2(pos + 1)
    return 100.0 * total / len(run.query_ids)


def mean_average_precision(run: RetrievalRun) -> float:
    """Mean over queries of average precision over all relevant items."""
    ranked = _ranked_lists(run)
    ap_sum = 0.0
    for qid, r in zip(run.query_ids, ranked):
        rel = run.relevance[qid]
        if not rel:
            raise ValueError(f"query {qid!r} has no relevant items")
        hits = 0
        precisions = []
        for pos, idx in enumerate(r, start=1):
            if run.database_ids[idx] in rel:
                hits += 1
                precisions.append(hits / pos)
        if hits < len(rel):
            raise ValueError(f"query {qid!r}: relevant ids missing from ranking")
        ap_sum += sum(precisions) / len(rel)
    return 100.0 * ap_sum / len(run.query_ids)


def robustness_protocol(
    database: list[PointCloud],
    queries: list[PointCloud],
    relevance: dict[str, set[str]],
    regime: str,
    encoder,
    rng: Prng,
) -> dict[str, float]:
    """Encode database and queries under a rotation regime and score mAP.

    regime selects which side receives an independent uniform random
    rotation per cloud: II (none), ISO3 (queries), SO3I (database), SO3SO3
    (both). The rotation stream is a pure function of the supplied rng, so
    compared encoders can share identical rotations.
    """
    if regime not in ROBUSTNESS_REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    rotate_db = regime in ("SO3I", "SO3SO3")
    rotate_q = regime in ("ISO3", "SO3SO3")

    def prepare(clouds, rotate):
        out = []
        for c in clouds:
            # always draw so every regime consumes the same rotation stream
            r = random_rotation(rng)
            pts = c.points @ r if rotate else c.points
            out.append(PointCloud(points=pts, colors=c.colors, id=c.id))
        return out

    db_clouds = prepare(database, rotate_db)
    q_clouds = prepare(queries, rotate_q)
    db_emb = np.stack([encoder(c) for c in db_clouds])
    q_emb = np.stack([encoder(c) for c in q_clouds])
    run = RetrievalRun(
        query_ids=[c.id for c in queries],
        query_embeddings=q_emb,
        database_ids=[c.id for c in database],
        database_embeddings=db_emb,
        relevance=relevance,
    )
    return {"regime": regime, "mAP": mean_average_precision(run)}


_EMB_MAGIC = b"EMB1"


def save_embeddings(path, ids: list[str], embeddings: np.ndarray) -> None:
    """EMB1 file: magic, u32 n, u32 d, then (u16 id length, id, d f32 LE)."""
    embeddings = np.asarray(embeddings, dtype="<f4")
    if embeddings.shape[0] != len(ids):
        raise ValueError("ids and embeddings disagree in length")
    with open(path, "wb") as fh:
        fh.write(_EMB_MAGIC)
        fh.write(struct.pack("<II", len(ids), embeddings.shape[1]))
        for i, eid in enumerate(ids):
            nb = eid.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(np.ascontiguousarray(embeddings[i]).tobytes())


def load_embeddings(path) -> tuple[list[str], np.ndarray]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _EMB_MAGIC:
        raise ValueError(f"{path}: bad magic")
    n, d = struct.unpack_from("<II", data, 4)
    off = 12
    ids = []
    rows = np.empty((n, d), dtype=np.float32)
    for i in range(n):
        (nlen,) = struct.unpack_from("<H", data, off)
        off += 2
        ids.append(data[off : off + nlen].decode("utf-8"))
        off += nlen
        rows[i] = np.frombuffer(data, dtype="<f4", count=d, offset=off)
        off += 4 * d
    if off != len(data):
        raise ValueError(f"{path}: trailing bytes after record {n}")
    return ids, rows


def load_ground_truth(path) -> dict[str, set[str]]:
    """Text lines: query_id<TAB>relevant_id[,relevant_id...]"""
    truth: dict[str, set[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected two tab-separated fields")
            truth[parts[0]] = set(parts[1].split(","))
    return truth
