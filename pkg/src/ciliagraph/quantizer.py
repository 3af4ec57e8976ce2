"""Per-attribute 1-D k-means quantization.

Levels are 1-based throughout: ``quantize`` returns a value in ``1..m``.
"""

from dataclasses import dataclass

import numpy as np

from ciliagraph.datasets import GraphDataset
from ciliagraph.errors import InputError

MAX_LLOYD_ITERS = 100


@dataclass(frozen=True, eq=False)
class AttributeCenters:
    centers: np.ndarray
    attr_index: int = 0

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=np.float64)
        if c.ndim != 1 or c.size == 0:
            raise InputError("centers must be a non-empty 1-D array")
        if np.any(np.diff(c) < 0):
            raise InputError("centers must be sorted ascending")
        object.__setattr__(self, "centers", c)

    @property
    def m(self) -> int:
        return int(self.centers.size)

    @property
    def span(self) -> float:
        return float(self.centers[-1] - self.centers[0])

    @property
    def degenerate(self) -> bool:
        return self.span <= 1e-12 * max(1.0, abs(float(self.centers[0])))


def _check_levels(m: int) -> None:
    if m <= 2:
        raise InputError(f"quantization needs m > 2 levels (m(m>2) clusters), got m={m}")


def _nearest(values: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # argmin returns the first minimum, which is the lower level on ties
    return np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)


def _quantile_seeds(distinct: np.ndarray, sorted_values: np.ndarray, m: int) -> np.ndarray:
    n = sorted_values.size
    pos = np.minimum(((np.arange(m) + 0.5) * n / m).astype(np.int64), n - 1)
    seeds = sorted_values[pos]
    # Duplicate seeds would leave empty clusters; move each onto the next unused
    # distinct value, keeping room for the seeds still to come.
    idx = np.searchsorted(distinct, seeds)
    for k in range(m):
        lo = idx[k - 1] + 1 if k else 0
        hi = distinct.size - (m - k)
        idx[k] = min(max(idx[k], lo), hi)
    return distinct[idx].astype(np.float64)


def fit_kmeans_1d(values, m: int, seed: int = 0) -> AttributeCenters:
    """Lloyd's algorithm on a single attribute column.

    Seeds sit at the (k + 0.5)/m quantiles so clusters start with roughly
    equal mass; the result is deterministic and ``seed`` is accepted only for
    interface symmetry with the randomized stages. When fewer than ``m``
    distinct values exist, the distinct values become the centers and the
    surplus slots repeat the largest one.
    """
    _check_levels(m)
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        raise InputError("cannot fit quantization centers on an empty attribute")
    if not np.all(np.isfinite(x)):
        raise InputError("attribute values must be finite")
    sorted_values = np.sort(x)
    distinct = np.unique(sorted_values)
    if distinct.size <= m:
        pad = np.full(m - distinct.size, distinct[-1])
        return AttributeCenters(np.concatenate([distinct, pad]))

    centers = _quantile_seeds(distinct, sorted_values, m)
    assign = _nearest(sorted_values, centers)
    for _ in range(MAX_LLOYD_ITERS):
        sums = np.bincount(assign, weights=sorted_values, minlength=m)
        counts = np.bincount(assign, minlength=m)
        nonempty = counts > 0
        centers = centers.copy()
        centers[nonempty] = sums[nonempty] / counts[nonempty]
        centers.sort()
        new_assign = _nearest(sorted_values, centers)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return AttributeCenters(centers)


def fit_uniform(values, m: int) -> AttributeCenters:
    """Equally spaced centers over [min, max]: nearest-center is an equal-width binning."""
    _check_levels(m)
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        raise InputError("cannot fit quantization centers on an empty attribute")
    return AttributeCenters(np.linspace(x.min(), x.max(), m))


def quantize(value: float, centers: AttributeCenters) -> int:
    return int(_nearest(np.array([float(value)]), centers.centers)[0]) + 1


def quantize_column(values, centers: AttributeCenters) -> np.ndarray:
    return _nearest(np.asarray(values, dtype=np.float64).ravel(), centers.centers) + 1


def quantize_attrs(node_attrs: np.ndarray, all_centers: list[AttributeCenters]) -> np.ndarray:
    """Level matrix (nodes x attributes), 1-based."""
    attrs = np.asarray(node_attrs, dtype=np.float64)
    if attrs.shape[1] != len(all_centers):
        raise InputError(f"{attrs.shape[1]} attributes but {len(all_centers)} fitted quantizers")
    out = np.empty(attrs.shape, dtype=np.int64)
    for i, c in enumerate(all_centers):
        out[:, i] = quantize_column(attrs[:, i], c)
    return out


def fit_all(dataset: GraphDataset, m: int, seed: int = 0, uniform: bool = False) -> list[AttributeCenters]:
    """Fit one quantizer per attribute on the pooled node values of ``dataset``.

    Pass the training split only; the pipeline never fits on test graphs.
    """
    if len(dataset) == 0:
        raise InputError("cannot fit quantizers on an empty dataset")
    pooled = np.concatenate([g.node_attrs for g in dataset.graphs], axis=0)
    result = []
    for i in range(dataset.attr_count):
        c = fit_uniform(pooled[:, i], m) if uniform else fit_kmeans_1d(pooled[:, i], m, seed)
        result.append(AttributeCenters(c.centers, attr_index=i))
    return result
