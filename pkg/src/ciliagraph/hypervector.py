"""Bipolar hypervector arithmetic.

Hypervectors are plain numpy arrays. Bipolar vectors hold int8 entries in
{-1, +1}; bundling promotes to a wider integer type, and anything scaled by a
real weight becomes float64. All functions also accept a leading batch axis
where that makes sense (bind, sign, hamming and dot work row-wise).
"""

from collections.abc import Sequence

import numpy as np

from ciliagraph.errors import DegenerateVectorError, DimensionMismatchError


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatchError(
            f"incompatible hypervector dimensions {a.shape[-1]} and {b.shape[-1]}"
        )


def random_bipolar(dim: int, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Draw uniform random bipolar hypervectors (one, or ``count`` stacked rows)."""
    if dim <= 0:
        raise ValueError(f"dimension must be positive, got {dim}")
    shape = (dim,) if count is None else (count, dim)
    bits = rng.integers(0, 2, size=shape, dtype=np.int8)
    return (2 * bits - 1).astype(np.int8)


def is_bipolar(v: np.ndarray) -> bool:
    v = np.asarray(v)
    return v.size > 0 and bool(np.all((v == 1) | (v == -1)))


def bind(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product. Self-inverse on bipolar operands."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_dim(a, b)
    return a * b


def bundle(vs: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Elementwise sum of the operands (no thresholding)."""
    if isinstance(vs, np.ndarray):
        stacked = vs if vs.ndim == 2 else vs[None, :]
    else:
        if len(vs) == 0:
            raise ValueError("cannot bundle an empty sequence of hypervectors")
        dims = {np.shape(v)[-1] for v in vs}
        if len(dims) != 1:
            raise DimensionMismatchError(f"cannot bundle hypervectors of dimensions {sorted(dims)}")
        stacked = np.stack([np.asarray(v) for v in vs])
    if stacked.shape[0] == 0:
        raise ValueError("cannot bundle an empty sequence of hypervectors")
    if np.issubdtype(stacked.dtype, np.integer):
        return stacked.sum(axis=0, dtype=np.int64)
    return stacked.sum(axis=0)


def sign(v: np.ndarray) -> np.ndarray:
    """Map to bipolar; zero entries go to +1."""
    v = np.asarray(v)
    return np.where(v < 0, -1, 1).astype(np.int8)


def negate(v: np.ndarray) -> np.ndarray:
    return -np.asarray(v)


def hamming(a: np.ndarray, b: np.ndarray) -> int | np.ndarray:
    """Number of positions whose entries differ.

    Works positionwise on any integer vectors, not only bipolar ones, so
    bundled node hypervectors compare by entry inequality.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_dim(a, b)
    if a.shape != b.shape and a.ndim == b.ndim:
        raise DimensionMismatchError(f"incompatible shapes {a.shape} and {b.shape}")
    diff = np.count_nonzero(a != b, axis=-1)
    return int(diff) if np.ndim(diff) == 0 else diff


def dot(a: np.ndarray, b: np.ndarray):
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_dim(a, b)
    if np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer):
        out = np.sum(a.astype(np.int64) * b.astype(np.int64), axis=-1)
        return int(out) if np.ndim(out) == 0 else out
    out = np.sum(a * b, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_dim(a, b)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine similarity is undefined for an all-zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def l2_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise DegenerateVectorError("cannot normalize an all-zero vector")
    return v / norm
