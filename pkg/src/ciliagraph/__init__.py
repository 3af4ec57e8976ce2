"""One-shot hyperdimensional graph classification."""

from ciliagraph.classifier import (
    EvalReport,
    ModelConfig,
    TrainedModel,
    evaluate,
    load_model,
    predict,
    save_model,
    train,
)
from ciliagraph.datasets import GraphDataset, GraphInstance, SplitSpec, parse_tudataset, split, stats

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "GraphDataset",
    "GraphInstance",
    "ModelConfig",
    "SplitSpec",
    "TrainedModel",
    "evaluate",
    "load_model",
    "parse_tudataset",
    "predict",
    "save_model",
    "split",
    "stats",
    "train",
]
