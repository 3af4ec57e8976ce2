"""Comparison encoders.

* GraphHD-style static encoding: nodes take codebook vectors by PageRank rank,
  the graph is the bundle of bound edge pairs, attributes are ignored.
* Record-based node encoding: one shared fixed-flip level chain, bound to a
  random id vector per attribute.
* Hyper-weight ablations P1/P2/P3, where "without" a matrix means replacing
  its magnitudes by 1 while keeping signs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ciliagraph.aggregation import hyper_weight, similarity_matrix, transition_matrix, unit_magnitudes
from ciliagraph.datasets import GraphDataset, GraphInstance
from ciliagraph.errors import InputError
from ciliagraph.hypervector import random_bipolar
from ciliagraph.quantizer import AttributeCenters, quantize_attrs

ABLATIONS = ("p1", "p2", "p3")
GRAPHHD_DEFAULT_DIM = 10_000


@dataclass(frozen=True)
class PageRankScores:
    scores: np.ndarray
    damping: float
    iterations_run: int


def pagerank(graph: GraphInstance, damping: float = 0.85, max_iters: int = 100, tol: float = 1e-9) -> PageRankScores:
    """Power iteration with uniform teleportation; dangling nodes link to every node."""
    n = graph.node_count
    if n == 0:
        raise InputError("pagerank needs a non-empty graph")
    if not 0.0 < damping < 1.0:
        raise InputError(f"damping must lie in (0, 1), got {damping}")
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    out_deg = np.bincount(src, minlength=n).astype(np.float64)
    # column-stochastic: M[dst, src] = 1/outdeg(src)
    m = sp.csr_matrix((1.0 / out_deg[src], (dst, src)), shape=(n, n))
    dangling = out_deg == 0
    x = np.full(n, 1.0 / n)
    it = 0
    for it in range(1, max_iters + 1):
        spread = x[dangling].sum() / n
        new = damping * (m @ x + spread) + (1.0 - damping) / n
        new /= new.sum()
        delta = np.abs(new - x).sum()
        x = new
        if delta < tol:
            break
    return PageRankScores(x, damping, it)


def rank_order(scores: np.ndarray, decimals: int = 12) -> np.ndarray:
    """Node indices by descending score; scores equal to ``decimals`` places tie by index."""
    rounded = np.round(scores, decimals)
    return np.lexsort((np.arange(scores.size), -rounded))


def make_rank_codebook(size: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    return random_bipolar(dim, rng, count=size)


def graphhd_node_hvs(graph: GraphInstance, rank_codebook: np.ndarray, **pagerank_kw) -> np.ndarray:
    if graph.node_count > rank_codebook.shape[0]:
        raise InputError(
            f"codebook holds {rank_codebook.shape[0]} vectors but the graph has {graph.node_count} nodes"
        )
    order = rank_order(pagerank(graph, **pagerank_kw).scores)
    hvs = np.empty((graph.node_count, rank_codebook.shape[1]), dtype=np.int8)
    hvs[order] = rank_codebook[: graph.node_count]
    return hvs


def graphhd_encode(graph: GraphInstance, rank_codebook: np.ndarray, **pagerank_kw) -> np.ndarray:
    """Sum over edges of bind(H_u, H_v)."""
    hvs = graphhd_node_hvs(graph, rank_codebook, **pagerank_kw).astype(np.int64)
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    return (hvs[u] * hvs[v]).sum(axis=0).astype(np.float64)


def graphhd_train_eval(train_set: GraphDataset, test_set: GraphDataset, dim: int = GRAPHHD_DEFAULT_DIM, seed: int = 0):
    """Prototype training and nearest-prototype inference over GraphHD encodings."""
    import time

    from ciliagraph.classifier import EvalReport, build_prototypes, nearest_prototypes
    from ciliagraph.rng import BASELINE_STREAM, make_rng

    start = time.perf_counter()
    size = max([g.node_count for g in train_set.graphs] + [g.node_count for g in test_set.graphs])
    codebook = make_rank_codebook(size, dim, make_rng(seed, BASELINE_STREAM))
    reps = np.stack([graphhd_encode(g, codebook) for g in train_set.graphs])
    _, _, normalized = build_prototypes(reps, train_set.labels, train_set.class_count)
    train_time = time.perf_counter() - start

    start = time.perf_counter()
    queries = np.stack([graphhd_encode(g, codebook) for g in test_set.graphs])
    predicted, zero_norm = nearest_prototypes(normalized, queries)
    infer_time = time.perf_counter() - start
    return EvalReport.from_predictions(
        test_set.labels, predicted, test_set.class_count, train_time, infer_time, zero_norm, variant="graphhd"
    )


@dataclass(frozen=True, eq=False)
class RecordCodebook:
    level_hvs: np.ndarray  # (m, D) int8, shared by all attributes
    id_hvs: np.ndarray  # (n, D) int8

    @property
    def m(self) -> int:
        return int(self.level_hvs.shape[0])


def fixed_flip_count(dim: int, m: int) -> int:
    return int(np.floor(dim / (2.0 * (m - 1)) + 0.5))


def make_record_codebook(n: int, m: int, dim: int, rng: np.random.Generator) -> RecordCodebook:
    """Level chain where each step negates the same number of fresh positions."""
    step = fixed_flip_count(dim, m)
    if step * (m - 1) > dim:
        raise InputError(f"D={dim} too small for {m - 1} steps of {step} flips")
    order = rng.permutation(dim)
    levels = np.empty((m, dim), dtype=np.int8)
    levels[0] = random_bipolar(dim, rng)
    for i in range(1, m):
        levels[i] = levels[i - 1]
        levels[i, order[(i - 1) * step : i * step]] *= -1
    ids = random_bipolar(dim, rng, count=n)
    return RecordCodebook(levels, ids)


def record_encode_nodes(node_attrs: np.ndarray, codebook: RecordCodebook, all_centers: list[AttributeCenters]) -> np.ndarray:
    """Sum over attributes of bind(id_i, level[q_i]); one row per node."""
    levels = quantize_attrs(node_attrs, all_centers)
    picked = codebook.level_hvs[levels - 1].astype(np.int32)  # (nodes, n, D)
    return (picked * codebook.id_hvs[None, :, :]).sum(axis=1, dtype=np.int32)


def record_encode_node(attrs, codebook: RecordCodebook, all_centers: list[AttributeCenters]) -> np.ndarray:
    return record_encode_nodes(np.atleast_2d(np.asarray(attrs, dtype=np.float64)), codebook, all_centers)[0]


def ablation_hyper_weight(graph: GraphInstance, node_hvs: np.ndarray, variant: str, mode: str = "hadamard"):
    """P1: sign pattern of T only. P2: T alone. P3: W carrying T's signs."""
    t = transition_matrix(graph)
    if variant == "p1":
        return unit_magnitudes(t)
    if variant == "p2":
        return t
    if variant == "p3":
        w = similarity_matrix(node_hvs, graph)
        return hyper_weight(w, unit_magnitudes(t), mode)
    raise InputError(f"unknown ablation {variant!r}; expected one of {ABLATIONS}")
