"""TUDataset text-format loading, writing, stratified splits and summaries."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ciliagraph.errors import DatasetFormatError, InputError
from ciliagraph.rng import SPLIT_STREAM, make_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GraphInstance:
    """One undirected graph.

    ``edges`` is an (E, 2) int array of unordered pairs stored as ``u < v``,
    sorted and unique. Self-loops are never stored.
    """

    node_attrs: np.ndarray
    edges: np.ndarray
    label: int

    @property
    def node_count(self) -> int:
        return int(self.node_attrs.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @classmethod
    def from_edge_list(cls, node_attrs, edges, label: int) -> "GraphInstance":
        """Build from any edge list; duplicates, both orientations and self-loops are cleaned."""
        attrs = np.asarray(node_attrs, dtype=np.float64)
        if attrs.ndim == 1:
            attrs = attrs[:, None]
        return cls(attrs, canonical_edges(edges, attrs.shape[0]), int(label))

    def permuted(self, perm: Sequence[int]) -> "GraphInstance":
        """Relabel nodes so that old node ``perm[k]`` becomes new node ``k``."""
        perm = np.asarray(perm, dtype=np.int64)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(perm.size)
        return GraphInstance.from_edge_list(self.node_attrs[perm], inverse[self.edges], self.label)


def canonical_edges(edges, node_count: int) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= node_count):
        raise InputError(f"edge endpoint outside 0..{node_count - 1}")
    e = e[e[:, 0] != e[:, 1]]
    e = np.sort(e, axis=1)
    if e.shape[0] == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(e, axis=0)


@dataclass(frozen=True, eq=False)
class GraphDataset:
    graphs: list[GraphInstance]
    attr_count: int
    class_count: int
    name: str = "dataset"
    # original label values from the file, indexed by contiguous class id
    label_values: tuple = field(default=())

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    @property
    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.graphs], dtype=np.int64)

    def subset(self, indices, name: str | None = None) -> "GraphDataset":
        return GraphDataset(
            [self.graphs[i] for i in indices],
            self.attr_count,
            self.class_count,
            name or self.name,
            self.label_values,
        )

    @classmethod
    def from_graphs(cls, graphs: list[GraphInstance], name: str = "dataset", class_count: int | None = None):
        if not graphs:
            return cls([], 0, class_count or 0, name)
        widths = {g.node_attrs.shape[1] for g in graphs}
        if len(widths) != 1:
            raise InputError(f"graphs disagree on attribute count: {sorted(widths)}")
        k = class_count if class_count is not None else max(g.label for g in graphs) + 1
        return cls(list(graphs), widths.pop(), k, name, tuple(range(k)))


def _read_lines(path: Path) -> list[str]:
    if not path.is_file():
        raise InputError(f"missing dataset file: {path}")
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _parse_row(text: str, path: Path, lineno: int, cast=float) -> list:
    try:
        return [cast(tok.strip()) for tok in text.split(",")]
    except ValueError:
        raise DatasetFormatError(f"non-numeric token in {text.strip()!r}", path, lineno) from None


def parse_tudataset(dir_path, dataset_name: str) -> GraphDataset:
    """Read ``<name>_A.txt`` and its companion files from ``dir_path``.

    Also looks one level down in ``dir_path/<name>/``, which is how the public
    archives unpack. Node ids in the files are 1-indexed and global; the
    returned graphs use 0-indexed per-graph ids.
    """
    root = Path(dir_path)
    if not root.is_dir():
        raise InputError(f"dataset directory does not exist: {root}")
    if not (root / f"{dataset_name}_A.txt").exists() and (root / dataset_name).is_dir():
        root = root / dataset_name
    prefix = root / dataset_name

    indicator_path = Path(f"{prefix}_graph_indicator.txt")
    indicator = []
    for lineno, line in enumerate(_read_lines(indicator_path), 1):
        if line.strip():
            indicator.append(_parse_row(line, indicator_path, lineno, int)[0])
    indicator = np.asarray(indicator, dtype=np.int64)
    node_total = indicator.size

    labels_path = Path(f"{prefix}_graph_labels.txt")
    raw_labels = [
        _parse_row(line, labels_path, lineno, int)[0]
        for lineno, line in enumerate(_read_lines(labels_path), 1)
        if line.strip()
    ]
    graph_total = len(raw_labels)
    if node_total and (indicator.min() < 1 or indicator.max() > graph_total):
        raise DatasetFormatError(
            f"graph indicator references graphs outside 1..{graph_total}", indicator_path
        )

    attrs_path = Path(f"{prefix}_node_attributes.txt")
    node_labels_path = Path(f"{prefix}_node_labels.txt")
    if attrs_path.is_file():
        rows = [
            _parse_row(line, attrs_path, lineno)
            for lineno, line in enumerate(_read_lines(attrs_path), 1)
            if line.strip()
        ]
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise DatasetFormatError(f"rows have differing attribute counts {sorted(widths)}", attrs_path)
        attrs = np.asarray(rows, dtype=np.float64).reshape(len(rows), -1)
    elif node_labels_path.is_file():
        codes = [
            _parse_row(line, node_labels_path, lineno, int)[0]
            for lineno, line in enumerate(_read_lines(node_labels_path), 1)
            if line.strip()
        ]
        values, inverse = np.unique(np.asarray(codes, dtype=np.int64), return_inverse=True)
        attrs = np.eye(values.size, dtype=np.float64)[inverse]
        log.info("%s: no node attributes; one-hot encoding %d node labels", dataset_name, values.size)
    else:
        raise InputError(f"missing dataset file: {attrs_path}")
    if attrs.shape[0] != node_total:
        raise DatasetFormatError(
            f"{attrs.shape[0]} attribute rows but {node_total} nodes in the graph indicator", attrs_path
        )
    if Path(f"{prefix}_edge_attributes.txt").exists() or Path(f"{prefix}_edge_labels.txt").exists():
        log.warning("%s: edge attributes/labels present and ignored", dataset_name)

    # global node id (0-indexed) -> graph index and local index
    graph_of = indicator - 1
    order = np.argsort(graph_of, kind="stable")
    counts = np.bincount(graph_of, minlength=graph_total)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    local = np.empty(node_total, dtype=np.int64)
    local[order] = np.arange(node_total) - np.repeat(starts, counts)

    adj_path = Path(f"{prefix}_A.txt")
    per_graph_edges: list[list[tuple[int, int]]] = [[] for _ in range(graph_total)]
    for lineno, line in enumerate(_read_lines(adj_path), 1):
        if not line.strip():
            continue
        row = _parse_row(line, adj_path, lineno, int)
        if len(row) != 2:
            raise DatasetFormatError(f"expected two node ids, got {len(row)}", adj_path, lineno)
        u, v = row[0] - 1, row[1] - 1
        if not (0 <= u < node_total and 0 <= v < node_total):
            raise DatasetFormatError(f"node id outside 1..{node_total}", adj_path, lineno)
        g = graph_of[u]
        if graph_of[v] != g:
            raise DatasetFormatError(
                f"edge ({u + 1}, {v + 1}) joins graphs {g + 1} and {graph_of[v] + 1}", adj_path, lineno
            )
        per_graph_edges[g].append((local[u], local[v]))

    label_values, label_ids = np.unique(np.asarray(raw_labels, dtype=np.int64), return_inverse=True)
    graphs = []
    for g in range(graph_total):
        nodes = order[starts[g] : starts[g] + counts[g]]
        graphs.append(
            GraphInstance(
                attrs[nodes],
                canonical_edges(per_graph_edges[g], int(counts[g])),
                int(label_ids[g]),
            )
        )
    return GraphDataset(
        graphs, int(attrs.shape[1]), int(label_values.size), dataset_name, tuple(int(x) for x in label_values)
    )


def write_tudataset(dataset: GraphDataset, dir_path, dataset_name: str | None = None) -> Path:
    """Write ``dataset`` in TUDataset text format; each undirected edge appears in both directions."""
    name = dataset_name or dataset.name
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    offset = 0
    with (
        open(root / f"{name}_A.txt", "w") as fa,
        open(root / f"{name}_graph_indicator.txt", "w") as fi,
        open(root / f"{name}_graph_labels.txt", "w") as fl,
        open(root / f"{name}_node_attributes.txt", "w") as fn,
    ):
        label_values = dataset.label_values or tuple(range(dataset.class_count))
        for gi, g in enumerate(dataset.graphs, 1):
            fl.write(f"{label_values[g.label]}\n")
            for row in g.node_attrs:
                fi.write(f"{gi}\n")
                fn.write(", ".join(repr(float(x)) for x in row) + "\n")
            for u, v in g.edges:
                fa.write(f"{u + offset + 1}, {v + offset + 1}\n")
                fa.write(f"{v + offset + 1}, {u + offset + 1}\n")
            offset += g.node_count
    return root


@dataclass(frozen=True)
class SplitSpec:
    mode: str = "holdout"
    test_fraction: float = 0.1
    fold_count: int = 10
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.mode not in ("holdout", "kfold"):
            raise InputError(f"unknown split mode {self.mode!r}")
        if self.mode == "holdout" and not 0.0 < self.test_fraction < 1.0:
            raise InputError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.mode == "kfold" and self.fold_count < 2:
            raise InputError(f"fold_count must be at least 2, got {self.fold_count}")


def split(dataset: GraphDataset, spec: SplitSpec):
    """Partition ``dataset``.

    Holdout mode returns ``(train, test)``; kfold mode returns a list of
    ``(train, test)`` pairs, one per fold. Stratified holdout takes
    ``round(test_fraction * n_c)`` graphs from each class ``c`` but always
    leaves at least one graph of the class in the training part.
    """
    rng = make_rng(spec.seed, SPLIT_STREAM)
    labels = dataset.labels
    n = len(dataset)

    if spec.mode == "holdout":
        if spec.stratified:
            test_idx = []
            for c in range(dataset.class_count):
                members = np.flatnonzero(labels == c)
                rng.shuffle(members)
                take = int(np.floor(spec.test_fraction * members.size + 0.5))
                take = min(take, max(members.size - 1, 0))
                test_idx.extend(members[:take].tolist())
        else:
            perm = rng.permutation(n)
            take = int(np.floor(spec.test_fraction * n + 0.5))
            test_idx = perm[:take].tolist()
        test_set = set(test_idx)
        train_idx = [i for i in range(n) if i not in test_set]
        test_idx = sorted(test_idx)
        return dataset.subset(train_idx), dataset.subset(test_idx)

    k = spec.fold_count
    fold_of = np.empty(n, dtype=np.int64)
    if spec.stratified:
        for c in range(dataset.class_count):
            members = np.flatnonzero(labels == c)
            if 0 < members.size < k:
                raise InputError(f"class {c} has {members.size} graphs, fewer than {k} folds")
            rng.shuffle(members)
            fold_of[members] = np.arange(members.size) % k
    else:
        if n < k:
            raise InputError(f"{n} graphs cannot fill {k} folds")
        fold_of[rng.permutation(n)] = np.arange(n) % k
    folds = []
    for f in range(k):
        folds.append(
            (dataset.subset(np.flatnonzero(fold_of != f)), dataset.subset(np.flatnonzero(fold_of == f)))
        )
    return folds


@dataclass(frozen=True)
class DatasetStats:
    graph_count: int
    class_histogram: list[int]
    attr_count: int
    mean_nodes: float
    max_nodes: int
    mean_edges: float
    max_edges: int

    def to_dict(self) -> dict:
        return {
            "graph_count": self.graph_count,
            "class_histogram": list(self.class_histogram),
            "attr_count": self.attr_count,
            "mean_nodes": self.mean_nodes,
            "max_nodes": self.max_nodes,
            "mean_edges": self.mean_edges,
            "max_edges": self.max_edges,
        }


def stats(dataset: GraphDataset) -> DatasetStats:
    if len(dataset) == 0:
        return DatasetStats(0, [0] * dataset.class_count, dataset.attr_count, 0.0, 0, 0.0, 0)
    nodes = np.array([g.node_count for g in dataset.graphs])
    edges = np.array([g.edge_count for g in dataset.graphs])
    hist = np.bincount(dataset.labels, minlength=dataset.class_count)
    return DatasetStats(
        len(dataset),
        hist.tolist(),
        dataset.attr_count,
        float(nodes.mean()),
        int(nodes.max()),
        float(edges.mean()),
        int(edges.max()),
    )
