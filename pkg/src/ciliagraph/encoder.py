"""Level hypervector banks and node encoding.

Each attribute gets its own bank of m correlated bipolar levels. L1 is random;
every later level negates a fresh set of never-flipped positions, with the
step size set by the gap between adjacent quantization centers. Because a
position flips at most once, hamming(L_i, L_j) is exactly the cumulative flip
count between the two levels.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ciliagraph.datasets import GraphInstance
from ciliagraph.errors import InputError
from ciliagraph.hypervector import random_bipolar
from ciliagraph.quantizer import AttributeCenters, quantize_attrs

DEFAULT_DIM = 120
DEFAULT_LEVELS = 8


class BelowMinimumDimensionWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LevelBank:
    levels: np.ndarray  # (m, D) int8
    centers: AttributeCenters
    flip_counts: np.ndarray  # (m-1,)
    flip_positions: tuple  # m-1 disjoint index arrays

    @property
    def m(self) -> int:
        return int(self.levels.shape[0])

    @property
    def dim(self) -> int:
        return int(self.levels.shape[1])

    @property
    def cumulative_flips(self) -> np.ndarray:
        """c_1..c_m with c_1 = 0; hamming(L_i, L_j) == c_j - c_i."""
        return np.concatenate([[0], np.cumsum(self.flip_counts)]).astype(np.int64)

    def level(self, index: int) -> np.ndarray:
        """Level hypervector for a 1-based level index."""
        if not 1 <= index <= self.m:
            raise InputError(f"level index {index} outside 1..{self.m}")
        return self.levels[index - 1]


@dataclass(frozen=True)
class EncoderConfig:
    dim: int = DEFAULT_DIM
    levels: int = DEFAULT_LEVELS
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise InputError(f"dimension must be positive, got {self.dim}")
        if self.levels <= 2:
            raise InputError(f"quantization needs m > 2 levels (m(m>2) clusters), got m={self.levels}")


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5).astype(np.int64)


def cumulative_flip_targets(centers, dim: int) -> np.ndarray:
    """Rounded running totals c_1..c_m of the per-step flip amounts.

    The step from level i-1 to i flips D/(2(m-1)) * ((mu_i - mu_{i-1})/span + 1)
    bits. The running sum telescopes to D/(2(m-1)) * ((mu_j - mu_1)/span + j - 1),
    which is evaluated directly so the last target is exactly round(D*m/(2(m-1))).
    """
    mu = np.asarray(centers.centers if isinstance(centers, AttributeCenters) else centers, dtype=np.float64)
    m = mu.size
    span = mu[-1] - mu[0]
    if span <= 0:
        raise InputError("flip targets need non-degenerate centers")
    unit = dim / (2.0 * (m - 1))
    steps = np.arange(m, dtype=np.float64)
    raw = unit * ((mu - mu[0]) / span + steps)
    raw[-1] = unit * m
    return _round_half_up(raw)


def init_level_bank(centers: AttributeCenters, dim: int, rng: np.random.Generator) -> LevelBank:
    m = centers.m
    if centers.degenerate:
        raise InputError("centers are degenerate (constant attribute); use init_degenerate_bank")
    if dim < 1:
        raise InputError(f"dimension must be positive, got {dim}")
    if dim < m - 1:
        warnings.warn(
            f"D={dim} < m-1={m - 1}: some levels will coincide with their predecessor",
            BelowMinimumDimensionWarning,
            stacklevel=2,
        )
    targets = cumulative_flip_targets(centers, dim)
    flip_counts = np.diff(targets)
    # a prefix of a uniform permutation is a uniform sample without replacement,
    # and consecutive slices never reuse a position
    order = rng.permutation(dim)
    base = random_bipolar(dim, rng)
    levels = np.empty((m, dim), dtype=np.int8)
    levels[0] = base
    positions = []
    for i in range(1, m):
        pos = np.sort(order[targets[i - 1] : targets[i]])
        levels[i] = levels[i - 1]
        levels[i, pos] *= -1
        positions.append(pos)
    return LevelBank(levels, centers, flip_counts, tuple(positions))


def init_degenerate_bank(dim: int, rng: np.random.Generator, centers: AttributeCenters | None = None, m: int | None = None) -> LevelBank:
    """Constant bank: every level is the same random vector."""
    if centers is None:
        if m is None:
            raise InputError("init_degenerate_bank needs centers or m")
        centers = AttributeCenters(np.zeros(m))
    m = centers.m
    base = random_bipolar(dim, rng)
    levels = np.tile(base, (m, 1))
    empty = tuple(np.zeros(0, dtype=np.int64) for _ in range(m - 1))
    return LevelBank(levels, centers, np.zeros(m - 1, dtype=np.int64), empty)


def init_all_banks(all_centers: list[AttributeCenters], config: EncoderConfig, rng: np.random.Generator) -> list[LevelBank]:
    """One bank per attribute, each from its own child generator."""
    if config.dim < minimum_dimension(config.levels, max(len(all_centers), 1)):
        warnings.warn(
            f"D={config.dim} is below the minimum dimension "
            f"{minimum_dimension(config.levels, max(len(all_centers), 1))} for m={config.levels}, n={len(all_centers)}",
            BelowMinimumDimensionWarning,
            stacklevel=2,
        )
    children = rng.spawn(len(all_centers))
    banks = []
    for centers, child in zip(all_centers, children):
        if centers.degenerate:
            banks.append(init_degenerate_bank(config.dim, child, centers=centers))
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BelowMinimumDimensionWarning)
                banks.append(init_level_bank(centers, config.dim, child))
    return banks


def stack_banks(banks: list[LevelBank]) -> np.ndarray:
    """(n, m, D) int8 array for vectorized lookups."""
    return np.stack([b.levels for b in banks])


def encode_node(quantized_levels, banks: list[LevelBank]) -> np.ndarray:
    levels = np.asarray(quantized_levels, dtype=np.int64).ravel()
    if levels.size != len(banks):
        raise InputError(f"{levels.size} level indices for {len(banks)} banks")
    out = np.zeros(banks[0].dim, dtype=np.int32)
    for idx, bank in zip(levels, banks):
        out += bank.level(int(idx))
    return out


def encode_levels(levels: np.ndarray, stacked: np.ndarray) -> np.ndarray:
    """Bundle per-node level vectors; ``levels`` is (nodes, n) 1-based, ``stacked`` is (n, m, D)."""
    n, m, _ = stacked.shape
    if levels.shape[1] != n:
        raise InputError(f"{levels.shape[1]} attributes for {n} banks")
    if levels.size and (levels.min() < 1 or levels.max() > m):
        raise InputError(f"level index outside 1..{m}")
    picked = stacked[np.arange(n)[None, :], levels - 1]  # (nodes, n, D)
    return picked.sum(axis=1, dtype=np.int32)


def encode_graph_nodes(graph: GraphInstance, banks: list[LevelBank], all_centers: list[AttributeCenters], stacked: np.ndarray | None = None) -> np.ndarray:
    """Node hypervector matrix of ``graph`` (|V| x D, int32)."""
    if graph.node_attrs.shape[1] != len(banks):
        raise InputError(f"graph has {graph.node_attrs.shape[1]} attributes, encoder expects {len(banks)}")
    if stacked is None:
        stacked = stack_banks(banks)
    return encode_levels(quantize_attrs(graph.node_attrs, all_centers), stacked)


def minimum_dimension(m: int, n: int) -> int:
    """Smallest D with e^{D eps^2/2} >= 2n at eps = 2/(m-1), i.e. ceil((m-1)^2/2 * ln 2n)."""
    if m <= 2:
        raise InputError(f"m must exceed 2, got {m}")
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    return math.ceil((m - 1) ** 2 / 2.0 * math.log(2 * n))


def epsilon_threshold(m: int) -> float:
    if m <= 2:
        raise InputError(f"m must exceed 2, got {m}")
    eps = 2.0 / (m - 1)
    if eps >= 1.0:
        warnings.warn(f"eps = 2/(m-1) = {eps} is not below 1 for m={m}", stacklevel=2)
    return eps


def quasi_orthogonal_capacity(dim: int, eps: float) -> float:
    """Lower bound e^{D eps^2 / 2} on the number of eps-quasi-orthogonal vectors in {+-1}^D."""
    return math.exp(dim * eps * eps / 2.0)
