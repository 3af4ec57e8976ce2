"""One-shot prototype training, nearest-prototype inference and evaluation."""

import json
import resource
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ciliagraph.baselines import RecordCodebook, make_record_codebook
from ciliagraph.datasets import GraphDataset, GraphInstance
from ciliagraph.encoder import DEFAULT_DIM, DEFAULT_LEVELS, EncoderConfig, LevelBank, init_all_banks
from ciliagraph.errors import CompatibilityError, InputError
from ciliagraph.pipeline import VARIANTS, GraphEncoder, encode_graphs, graph_hypervector
from ciliagraph.quantizer import AttributeCenters, fit_all
from ciliagraph.rng import BANK_STREAM, BASELINE_STREAM, make_rng

REPORT_SCHEMA_VERSION = 1


class ZeroNormQueryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ModelConfig:
    dim: int = DEFAULT_DIM
    levels: int = DEFAULT_LEVELS
    seed: int = 0
    variant: str = "full"
    weight_mode: str = "hadamard"
    # holdout used to produce the model, kept so evaluation can replay it
    split: dict | None = None

    def __post_init__(self):
        EncoderConfig(self.dim, self.levels, self.seed)
        if self.variant not in VARIANTS:
            raise InputError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    @property
    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(self.dim, self.levels, self.seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(eq=False)
class TrainedModel:
    config: ModelConfig
    centers: list[AttributeCenters]
    banks: list[LevelBank]
    prototypes: np.ndarray  # (K, 2D)
    prototype_norms: np.ndarray
    normalized_prototypes: np.ndarray
    class_count: int
    label_values: tuple = ()
    record_codebook: RecordCodebook | None = None
    train_time_s: float = field(default=0.0, compare=False)

    def __post_init__(self):
        self._encoder = GraphEncoder(
            self.centers, self.banks, self.config.variant, self.config.weight_mode, self.record_codebook
        )

    @property
    def attr_count(self) -> int:
        return len(self.centers)

    @property
    def encoder(self) -> GraphEncoder:
        return self._encoder


def build_prototypes(reps: np.ndarray, labels: np.ndarray, class_count: int):
    """Sum representations per class, then L2-normalize each class sum.

    Summation runs in input order within each class, so results are
    reproducible bit for bit.
    """
    dim = reps.shape[1]
    protos = np.zeros((class_count, dim))
    for c in range(class_count):
        members = reps[labels == c]
        for r in members:
            protos[c] += r
    norms = np.linalg.norm(protos, axis=1)
    normalized = np.zeros_like(protos)
    nonzero = norms > 0
    normalized[nonzero] = protos[nonzero] / norms[nonzero, None]
    if not nonzero.all():
        warnings.warn(f"classes {np.flatnonzero(~nonzero).tolist()} have zero-norm prototypes", stacklevel=2)
    return protos, norms, normalized


def nearest_prototypes(normalized: np.ndarray, queries: np.ndarray) -> tuple[np.ndarray, int]:
    """argmax_i <C_i/|C_i|, q> per query; ties go to the lowest class index.

    Zero-norm queries fall back to class 0. Returns the predictions and how
    many queries hit that fallback.
    """
    queries = np.atleast_2d(queries)
    scores = queries @ normalized.T
    predicted = np.argmax(scores, axis=1)
    zero = ~np.any(queries != 0, axis=1)
    predicted[zero] = 0
    return predicted.astype(np.int64), int(zero.sum())


def train(train_set: GraphDataset, config: ModelConfig | None = None, seed: int | None = None) -> TrainedModel:
    """Fit quantizers and banks on ``train_set``, then bundle class prototypes in one pass."""
    config = config or ModelConfig()
    if seed is not None and seed != config.seed:
        config = ModelConfig(**{**config.to_dict(), "seed": seed})
    k = train_set.class_count
    if k < 2:
        raise InputError(f"need at least two classes, got {k}")
    counts = np.bincount(train_set.labels, minlength=k)
    if np.any(counts == 0):
        raise InputError(f"classes {np.flatnonzero(counts == 0).tolist()} have no training graphs")

    start = time.perf_counter()
    uniform = config.variant in ("uniform-quant", "record")
    centers = fit_all(train_set, config.levels, config.seed, uniform=uniform)
    record = None
    banks: list[LevelBank] = []
    if config.variant == "record":
        record = make_record_codebook(train_set.attr_count, config.levels, config.dim, make_rng(config.seed, BASELINE_STREAM))
    else:
        banks = init_all_banks(centers, config.encoder_config, make_rng(config.seed, BANK_STREAM))
    encoder = GraphEncoder(centers, banks, config.variant, config.weight_mode, record)
    reps = encode_graphs(train_set.graphs, encoder)
    protos, norms, normalized = build_prototypes(reps, train_set.labels, k)
    elapsed = time.perf_counter() - start
    return TrainedModel(
        config, centers, banks, protos, norms, normalized, k, train_set.label_values, record, elapsed
    )


def _check_compatible(model: TrainedModel, graph: GraphInstance) -> None:
    if graph.node_attrs.shape[1] != model.attr_count:
        raise CompatibilityError(
            f"graph has {graph.node_attrs.shape[1]} node attributes, model was trained on {model.attr_count}"
        )


def predict(model: TrainedModel, graph: GraphInstance) -> int:
    _check_compatible(model, graph)
    q = graph_hypervector(graph, model.encoder)
    predicted, zero = nearest_prototypes(model.normalized_prototypes, q)
    if zero:
        warnings.warn("query representation has zero norm; predicting class 0", ZeroNormQueryWarning, stacklevel=2)
    return int(predicted[0])


def predict_many(model: TrainedModel, graphs) -> tuple[np.ndarray, int]:
    graphs = list(graphs)
    for g in graphs:
        _check_compatible(model, g)
    return nearest_prototypes(model.normalized_prototypes, encode_graphs(graphs, model.encoder))


@dataclass
class EvalReport:
    accuracy: float
    per_class_accuracy: list
    confusion: list
    train_time_s: float
    infer_time_s: float
    peak_memory_estimate: int
    test_count: int
    zero_norm_queries: int = 0
    variant: str = "full"

    @classmethod
    def from_predictions(cls, truth, predicted, class_count: int, train_time_s: float, infer_time_s: float, zero_norm: int = 0, variant: str = "full") -> "EvalReport":
        truth = np.asarray(truth, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        confusion = np.zeros((class_count, class_count), dtype=np.int64)
        np.add.at(confusion, (truth, predicted), 1)
        support = confusion.sum(axis=1)
        per_class = [float(confusion[c, c] / support[c]) if support[c] else None for c in range(class_count)]
        acc = float(np.mean(truth == predicted)) if truth.size else 0.0
        return cls(
            acc,
            per_class,
            confusion.tolist(),
            float(train_time_s),
            float(infer_time_s),
            peak_memory_bytes(),
            int(truth.size),
            int(zero_norm),
            variant,
        )

    def to_dict(self) -> dict:
        return {"schema_version": REPORT_SCHEMA_VERSION, **asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def peak_memory_bytes() -> int:
    """Peak resident set size of this process (best effort, Linux reports KiB)."""
    return int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss) * 1024


def evaluate(model: TrainedModel, test_set: GraphDataset) -> EvalReport:
    if len(test_set) == 0:
        raise InputError("cannot evaluate on an empty test set")
    start = time.perf_counter()
    predicted, zero = predict_many(model, test_set.graphs)
    infer = time.perf_counter() - start
    return EvalReport.from_predictions(
        test_set.labels, predicted, model.class_count, model.train_time_s, infer, zero, model.config.variant
    )


# re-exported so callers find persistence next to the model type
from ciliagraph.persistence import load_model, save_model  # noqa: E402

__all__ = [
    "EvalReport",
    "ModelConfig",
    "TrainedModel",
    "build_prototypes",
    "evaluate",
    "load_model",
    "nearest_prototypes",
    "predict",
    "predict_many",
    "save_model",
    "train",
]
