"""Graph -> graph-level hypervector, shared by training and inference."""

from dataclasses import dataclass

import numpy as np

from ciliagraph import aggregation
from ciliagraph.baselines import ABLATIONS, RecordCodebook, ablation_hyper_weight, record_encode_nodes
from ciliagraph.datasets import GraphInstance
from ciliagraph.encoder import LevelBank, encode_graph_nodes, stack_banks
from ciliagraph.errors import InputError
from ciliagraph.quantizer import AttributeCenters

VARIANTS = ("full", "p1", "p2", "p3", "uniform-quant", "record")


@dataclass(eq=False)
class GraphEncoder:
    """Everything needed to turn a graph into its 2D-dimensional representation."""

    centers: list[AttributeCenters]
    banks: list[LevelBank]
    variant: str = "full"
    weight_mode: str = "hadamard"
    record_codebook: RecordCodebook | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InputError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.weight_mode not in aggregation.WEIGHT_MODES:
            raise InputError(f"unknown weight mode {self.weight_mode!r}")
        if self.variant == "record" and self.record_codebook is None:
            raise InputError("record variant needs a record codebook")
        self._stacked = stack_banks(self.banks) if self.banks else None

    @property
    def attr_count(self) -> int:
        return len(self.centers)

    @property
    def dim(self) -> int:
        if self.record_codebook is not None:
            return int(self.record_codebook.level_hvs.shape[1])
        return self.banks[0].dim

    def node_hvs(self, graph: GraphInstance) -> np.ndarray:
        if graph.node_attrs.shape[1] != self.attr_count:
            raise InputError(f"graph has {graph.node_attrs.shape[1]} attributes, model expects {self.attr_count}")
        if self.variant == "record":
            return record_encode_nodes(graph.node_attrs, self.record_codebook, self.centers)
        return encode_graph_nodes(graph, self.banks, self.centers, stacked=self._stacked)

    def weights(self, graph: GraphInstance, node_hvs: np.ndarray):
        if self.variant in ABLATIONS:
            return ablation_hyper_weight(graph, node_hvs, self.variant, self.weight_mode)
        w = aggregation.similarity_matrix(node_hvs, graph)
        t = aggregation.transition_matrix(graph)
        return aggregation.hyper_weight(w, t, self.weight_mode)

    def node_features(self, graph: GraphInstance) -> np.ndarray:
        """Concatenated [H_u | a_u] rows."""
        h = self.node_hvs(graph)
        a = aggregation.aggregate(h, self.weights(graph, h), graph)
        return aggregation.concat_features(h, a)


def graph_hypervector(graph: GraphInstance, encoder: GraphEncoder) -> np.ndarray:
    return aggregation.graph_representation(encoder.node_features(graph))


def encode_graphs(graphs, encoder: GraphEncoder) -> np.ndarray:
    """Stack of graph representations, one row per graph."""
    graphs = list(graphs)
    if not graphs:
        return np.zeros((0, 2 * encoder.dim))
    return np.stack([graph_hypervector(g, encoder) for g in graphs])
