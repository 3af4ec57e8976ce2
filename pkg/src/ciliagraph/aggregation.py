"""Weighted one-hop aggregation and graph-level representations.

All weight matrices are scipy CSR matrices supported on the edge set plus the
diagonal, with canonical (sorted) column indices so that row sums accumulate
in ascending neighbor order.
"""

from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from ciliagraph.datasets import GraphInstance
from ciliagraph.errors import DegenerateVectorError, DimensionMismatchError, InputError
from ciliagraph.hypervector import sign

WEIGHT_MODES = ("hadamard", "matmul")


def _support(graph: GraphInstance) -> tuple[np.ndarray, np.ndarray]:
    """Row/col index arrays for both edge orientations followed by the diagonal."""
    n = graph.node_count
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    diag = np.arange(n)
    return np.concatenate([u, v, diag]), np.concatenate([v, u, diag])


def _csr(rows, cols, vals, n: int) -> sp.csr_matrix:
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    m.sort_indices()
    return m


def degrees(graph: GraphInstance) -> np.ndarray:
    """Neighbor counts, self-loop excluded."""
    return np.bincount(graph.edges.ravel(), minlength=graph.node_count)


def similarity_matrix(node_hvs: np.ndarray, graph: GraphInstance) -> sp.csr_matrix:
    """W[u, v] = 1 - hamming(H_u, H_v)/D on edges, 1 on the diagonal."""
    n = graph.node_count
    if node_hvs.shape[0] != n:
        raise DimensionMismatchError(f"{node_hvs.shape[0]} node hypervectors for a graph with {n} nodes")
    dim = node_hvs.shape[1]
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    ham = np.count_nonzero(node_hvs[u] != node_hvs[v], axis=1)
    w = 1.0 - ham / dim
    rows, cols = _support(graph)
    return _csr(rows, cols, np.concatenate([w, w, np.ones(n)]), n)


def transition_matrix(graph: GraphInstance) -> sp.csr_matrix:
    """T[u, u] = 1/d_u and T[u, v] = -1/d_v on edges. Isolated nodes get T[u, u] = 1."""
    n = graph.node_count
    d = degrees(graph).astype(np.float64)
    inv = np.where(d > 0, 1.0 / np.maximum(d, 1.0), 1.0)
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    rows, cols = _support(graph)
    vals = np.concatenate([-inv[v], -inv[u], inv])
    return _csr(rows, cols, vals, n)


def _same_support(a: sp.csr_matrix, b: sp.csr_matrix) -> bool:
    return (
        a.shape == b.shape
        and np.array_equal(a.indptr, b.indptr)
        and np.array_equal(a.indices, b.indices)
    )


def hyper_weight(w: sp.csr_matrix, t: sp.csr_matrix, mode: str = "hadamard") -> sp.csr_matrix:
    """Combine similarity and transition weights.

    ``hadamard`` (the default) multiplies entrywise on the shared support.
    ``matmul`` takes the matrix product W @ T instead; it densifies the
    support to two hops and is kept only for comparison runs.
    """
    if mode == "hadamard":
        if not _same_support(w, t):
            raise InputError("similarity and transition matrices have different supports")
        return sp.csr_matrix((w.data * t.data, t.indices.copy(), t.indptr.copy()), shape=t.shape)
    if mode == "matmul":
        if w.shape != t.shape:
            raise DimensionMismatchError(f"shapes {w.shape} and {t.shape} differ")
        p = (w @ t).tocsr()
        p.sort_indices()
        return p
    raise InputError(f"unknown weight mode {mode!r}; expected one of {WEIGHT_MODES}")


def unit_magnitudes(m: sp.csr_matrix) -> sp.csr_matrix:
    """Same support, every value replaced by its sign (+1 for zero)."""
    return sp.csr_matrix((np.where(m.data < 0, -1.0, 1.0), m.indices.copy(), m.indptr.copy()), shape=m.shape)


def aggregate(node_hvs: np.ndarray, p: sp.csr_matrix, graph: GraphInstance | None = None) -> np.ndarray:
    """a_u = sign(sum over v in N(u) and u of P[u, v] * H_v), one row per node.

    Sums within 1e-9 of zero (relative to the sum of absolute terms) are
    recomputed in exact rational arithmetic, so the sign of a sum whose exact
    value is 0 is +1 regardless of float rounding or node order. Weight
    entries are recovered as fractions with denominator at most D * |V|,
    which covers every similarity/transition product.
    """
    if p.shape[0] != node_hvs.shape[0] or p.shape[1] != node_hvs.shape[0]:
        raise DimensionMismatchError(f"weight matrix {p.shape} does not match {node_hvs.shape[0]} nodes")
    hf = node_hvs.astype(np.float64)
    sums = p @ hf
    bound = abs(p) @ np.abs(hf)
    unsure = (np.abs(sums) <= 1e-9 * bound) & (bound > 0)
    if unsure.any():
        _resolve_exact(sums, unsure, p, node_hvs)
    return sign(sums)


def _resolve_exact(sums: np.ndarray, unsure: np.ndarray, p: sp.csr_matrix, node_hvs: np.ndarray) -> None:
    max_den = max(1, node_hvs.shape[1]) * max(1, p.shape[0])
    for u in np.unique(np.nonzero(unsure)[0]):
        lo, hi = p.indptr[u], p.indptr[u + 1]
        cols = p.indices[lo:hi]
        weights = [Fraction(float(x)).limit_denominator(max_den) for x in p.data[lo:hi]]
        for k in np.flatnonzero(unsure[u]):
            exact = sum((w * Fraction(node_hvs[v, k].item()) for w, v in zip(weights, cols)), Fraction(0))
            sums[u, k] = 0.0 if exact == 0 else (1.0 if exact > 0 else -1.0)


def concat_features(node_hvs: np.ndarray, aggregated: np.ndarray) -> np.ndarray:
    if node_hvs.shape[0] != aggregated.shape[0]:
        raise DimensionMismatchError(f"row counts differ: {node_hvs.shape[0]} vs {aggregated.shape[0]}")
    return np.hstack([node_hvs.astype(np.float64), aggregated.astype(np.float64)])


def graph_representation(features: np.ndarray) -> np.ndarray:
    """Column mean of the concatenated node features."""
    if features.shape[0] == 0:
        raise DegenerateVectorError("graph has no nodes")
    return features.mean(axis=0)
