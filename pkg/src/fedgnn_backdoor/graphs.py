"""Graph data model, TU-format dataset IO, synthetic dataset generation and
train/client splitting.

Graphs are undirected, unweighted and attributed; a dataset is a flat list of
labeled graphs for graph classification. All types are immutable after
construction and every seeded operation is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, GenerationError, ParseError
from .rng import DATA_SPLIT, CLIENT_SPLIT, DATASET_GEN, stream

DEGREE_FEATURE_DIM = 16  # degree one-hot cap when a dataset carries no node info


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(eq=False)
class Graph:
    """One labeled attributed graph.

    edges holds undirected pairs (u, v) with u < v, no self-loops, no
    duplicates; features has one row per node.
    """

    n_nodes: int
    edges: frozenset[tuple[int, int]]
    features: np.ndarray
    label: int

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ConfigError(f"graph needs at least one node, got {self.n_nodes}")
        self.edges = frozenset((min(u, v), max(u, v)) for (u, v) in self.edges)
        for (u, v) in self.edges:
            if u == v:
                raise ConfigError(f"self-loop on node {u}")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ConfigError(f"edge ({u},{v}) outside [0,{self.n_nodes})")
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] != self.n_nodes:
            raise ConfigError(
                f"feature matrix shape {self.features.shape} does not match "
                f"{self.n_nodes} nodes"
            )
        _freeze(self.features)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for (u, v) in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def with_features(self, features: np.ndarray) -> "Graph":
        return Graph(self.n_nodes, self.edges, features, self.label)


@dataclass(eq=False)
class GraphDataset:
    """A list of graphs sharing a feature space and a label set.

    attr_dim counts the trailing feature columns that came from continuous
    node attributes (candidates for standardization); 0 when features are
    purely categorical one-hots.
    """

    graphs: list[Graph]
    n_classes: int
    feature_dim: int
    attr_dim: int = 0

    def __post_init__(self):
        for i, g in enumerate(self.graphs):
            if g.features.shape[1] != self.feature_dim:
                raise ConfigError(
                    f"graph {i} has feature dim {g.features.shape[1]}, "
                    f"dataset expects {self.feature_dim}"
                )
            if not (0 <= g.label < self.n_classes):
                raise ConfigError(f"graph {i} label {g.label} outside [0,{self.n_classes})")

    def __len__(self) -> int:
        return len(self.graphs)

    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.graphs], dtype=np.int64)


@dataclass(eq=False)
class ClientPartition:
    """Disjoint cover of a parent index set by K clients."""

    parts: list[list[int]]

    def __post_init__(self):
        seen: set[int] = set()
        for p in self.parts:
            for i in p:
                if i in seen:
                    raise ConfigError(f"index {i} assigned to two clients")
                seen.add(i)
        self._covered = seen

    @property
    def n_clients(self) -> int:
        return len(self.parts)

    def covers(self, indices) -> bool:
        return self._covered == set(indices)


def datasets_equal(a: GraphDataset, b: GraphDataset) -> bool:
    """Structural equality: same graphs, labels, features and metadata."""
    if (len(a), a.n_classes, a.feature_dim) != (len(b), b.n_classes, b.feature_dim):
        return False
    for ga, gb in zip(a.graphs, b.graphs):
        if ga.n_nodes != gb.n_nodes or ga.label != gb.label:
            return False
        if ga.edges != gb.edges:
            return False
        if not np.array_equal(ga.features, gb.features):
            return False
    return True


# ---------------------------------------------------------------------------
# TU-format parsing and writing
# ---------------------------------------------------------------------------

def _read_lines(path: Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip()]


def _detect_prefix(directory: Path) -> str:
    hits = sorted(directory.glob("*_A.txt"))
    if not hits:
        raise ParseError(directory, 0, "no <name>_A.txt file found")
    return hits[0].name[: -len("_A.txt")]


def parse_tu_dataset(directory, name: str | None = None) -> GraphDataset:
    """Parse a dataset directory in the standard TU graph-classification format.

    Required files: <name>_A.txt (1-indexed edge list), <name>_graph_indicator.txt,
    <name>_graph_labels.txt. Optional: <name>_node_labels.txt (one-hot encoded)
    and <name>_node_attributes.txt (raw reals); when both exist the one-hots are
    concatenated before the attributes. Without either, node features default to
    degree one-hots capped at 16 dims. Graph labels are remapped to [0, C) in
    sorted order of the raw values.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ParseError(directory, 0, "not a directory")
    if name is None:
        name = _detect_prefix(directory)

    def req(suffix: str) -> Path:
        p = directory / f"{name}{suffix}"
        if not p.exists():
            raise ParseError(p, 0, "required file missing")
        return p

    indicator_path = req("_graph_indicator.txt")
    indicator: list[int] = []
    for i, ln in enumerate(_read_lines(indicator_path), start=1):
        try:
            indicator.append(int(ln))
        except ValueError:
            raise ParseError(indicator_path, i, f"bad graph id {ln!r}") from None
    n_nodes_total = len(indicator)
    if n_nodes_total == 0:
        raise ParseError(indicator_path, 0, "empty graph indicator")
    n_graphs = max(indicator)
    if sorted(set(indicator)) != list(range(1, n_graphs + 1)):
        raise ParseError(indicator_path, 0, "graph ids are not contiguous from 1")

    labels_path = req("_graph_labels.txt")
    raw_labels: list[int] = []
    for i, ln in enumerate(_read_lines(labels_path), start=1):
        try:
            raw_labels.append(int(float(ln)))
        except ValueError:
            raise ParseError(labels_path, i, f"bad graph label {ln!r}") from None
    if len(raw_labels) != n_graphs:
        raise ParseError(
            labels_path, len(raw_labels),
            f"{len(raw_labels)} labels for {n_graphs} graphs",
        )
    classes = sorted(set(raw_labels))
    remap = {c: i for i, c in enumerate(classes)}

    # nodes of graph g (1-indexed) in file order; node ids are global
    node_offset = np.zeros(n_graphs + 1, dtype=np.int64)
    graph_of_node = np.array(indicator, dtype=np.int64)
    for g in graph_of_node:
        node_offset[g] += 1
    if np.any(node_offset[1:] == 0):
        raise ParseError(indicator_path, 0, "a graph has no nodes")
    # TU files list nodes grouped by graph; verify and build local ids
    node_offset = np.concatenate(([0], np.cumsum(node_offset[1:])))
    expected = np.repeat(np.arange(1, n_graphs + 1), np.diff(node_offset))
    if not np.array_equal(graph_of_node, expected):
        raise ParseError(indicator_path, 0, "node ids are not grouped by graph")

    edges_path = req("_A.txt")
    edge_sets: list[set[tuple[int, int]]] = [set() for _ in range(n_graphs)]
    for i, ln in enumerate(_read_lines(edges_path), start=1):
        parts = ln.replace(",", " ").split()
        if len(parts) != 2:
            raise ParseError(edges_path, i, f"expected two node ids, got {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(edges_path, i, f"bad node id in {ln!r}") from None
        if not (1 <= u <= n_nodes_total and 1 <= v <= n_nodes_total):
            raise ParseError(edges_path, i, f"edge ({u},{v}) references unknown node")
        gu, gv = indicator[u - 1], indicator[v - 1]
        if gu != gv:
            raise ParseError(edges_path, i, f"edge ({u},{v}) crosses graphs {gu} and {gv}")
        if u == v:
            continue  # drop self-loops
        lu = u - 1 - node_offset[gu - 1]
        lv = v - 1 - node_offset[gv - 1]
        edge_sets[gu - 1].add((min(lu, lv), max(lu, lv)))

    node_label_path = directory / f"{name}_node_labels.txt"
    node_attr_path = directory / f"{name}_node_attributes.txt"

    onehot = None
    if node_label_path.exists():
        raw = []
        for i, ln in enumerate(_read_lines(node_label_path), start=1):
            try:
                raw.append(int(float(ln)))
            except ValueError:
                raise ParseError(node_label_path, i, f"bad node label {ln!r}") from None
        if len(raw) != n_nodes_total:
            raise ParseError(
                node_label_path, len(raw),
                f"{len(raw)} node labels for {n_nodes_total} nodes",
            )
        values = sorted(set(raw))
        vmap = {v: i for i, v in enumerate(values)}
        onehot = np.zeros((n_nodes_total, len(values)))
        onehot[np.arange(n_nodes_total), [vmap[v] for v in raw]] = 1.0

    attrs = None
    if node_attr_path.exists():
        rows = []
        width = None
        for i, ln in enumerate(_read_lines(node_attr_path), start=1):
            parts = [p for p in ln.replace(",", " ").split() if p]
            try:
                row = [float(p) for p in parts]
            except ValueError:
                raise ParseError(node_attr_path, i, f"bad attribute in {ln!r}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(node_attr_path, i, f"expected {width} attributes, got {len(row)}")
            rows.append(row)
        if len(rows) != n_nodes_total:
            raise ParseError(
                node_attr_path, len(rows),
                f"{len(rows)} attribute rows for {n_nodes_total} nodes",
            )
        attrs = np.array(rows, dtype=np.float64)

    graphs: list[Graph] = []
    attr_dim = 0 if attrs is None else attrs.shape[1]
    for g in range(n_graphs):
        lo, hi = node_offset[g], node_offset[g + 1]
        n = int(hi - lo)
        if onehot is None and attrs is None:
            deg = np.zeros(n, dtype=np.int64)
            for (u, v) in edge_sets[g]:
                deg[u] += 1
                deg[v] += 1
            feats = np.zeros((n, DEGREE_FEATURE_DIM))
            feats[np.arange(n), np.minimum(deg, DEGREE_FEATURE_DIM - 1)] = 1.0
        else:
            blocks = []
            if onehot is not None:
                blocks.append(onehot[lo:hi])
            if attrs is not None:
                blocks.append(attrs[lo:hi])
            feats = np.hstack(blocks)
        graphs.append(Graph(n, frozenset(edge_sets[g]), feats, remap[raw_labels[g]]))

    return GraphDataset(graphs, len(classes), graphs[0].features.shape[1], attr_dim=attr_dim)


def write_tu_dataset(ds: GraphDataset, directory, name: str) -> None:
    """Write a dataset in TU format.

    Node features go to <name>_node_attributes.txt verbatim (full precision),
    so parse(write(ds)) reproduces the dataset exactly. Edges are written in
    both directions as the format expects.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    a_lines: list[str] = []
    ind_lines: list[str] = []
    lab_lines: list[str] = []
    attr_lines: list[str] = []
    offset = 0
    for gi, g in enumerate(ds.graphs, start=1):
        for u in range(g.n_nodes):
            ind_lines.append(str(gi))
            attr_lines.append(", ".join(repr(float(x)) for x in g.features[u]))
        for (u, v) in g.sorted_edges():
            a_lines.append(f"{offset + u + 1}, {offset + v + 1}")
            a_lines.append(f"{offset + v + 1}, {offset + u + 1}")
        lab_lines.append(str(g.label))
        offset += g.n_nodes
    (directory / f"{name}_A.txt").write_text("\n".join(a_lines) + "\n")
    (directory / f"{name}_graph_indicator.txt").write_text("\n".join(ind_lines) + "\n")
    (directory / f"{name}_graph_labels.txt").write_text("\n".join(lab_lines) + "\n")
    (directory / f"{name}_node_attributes.txt").write_text("\n".join(attr_lines) + "\n")


# ---------------------------------------------------------------------------
# Synthetic triangle-count dataset
# ---------------------------------------------------------------------------

def count_triangles(g: Graph) -> int:
    """Number of unordered node triples forming 3-cycles (= trace(A^3)/6)."""
    a = np.zeros((g.n_nodes, g.n_nodes))
    for (u, v) in g.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    return int(round(np.trace(a @ a @ a) / 6.0))


def _degree_onehot(n: int, edges: set[tuple[int, int]]) -> np.ndarray:
    deg = np.zeros(n, dtype=np.int64)
    for (u, v) in edges:
        deg[u] += 1
        deg[v] += 1
    feats = np.zeros((n, DEGREE_FEATURE_DIM))
    feats[np.arange(n), np.minimum(deg, DEGREE_FEATURE_DIM - 1)] = 1.0
    return feats


def _er_edges(n: int, p: float, rng: np.random.Generator) -> set[tuple[int, int]]:
    mask = rng.random(n * (n - 1) // 2) < p
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return {pairs[i] for i in np.flatnonzero(mask)}


N_TRIANGLE_CLASSES = 10


def generate_triangles_dataset(
    n_graphs: int,
    node_range: tuple[int, int] = (10, 30),
    seed: int = 0,
    max_attempts_per_graph: int = 200,
) -> GraphDataset:
    """Balanced 10-class dataset where class c means the graph has c+1 triangles.

    Erdos-Renyi graphs are drawn with the edge probability tuned per node count
    so that expected triangle counts land in 1..10, then rejection-sampled into
    class buckets until each holds n_graphs/10 graphs. Node features are degree
    one-hots capped at 16 dims. Deterministic given the seed.
    """
    if n_graphs % N_TRIANGLE_CLASSES != 0:
        raise ConfigError(f"n_graphs must be a multiple of {N_TRIANGLE_CLASSES}")
    lo, hi = int(node_range[0]), int(node_range[1])
    if lo < 5 or hi < lo:
        raise ConfigError(f"node_range must satisfy 5 <= lo <= hi, got ({lo},{hi})")

    rng = stream(seed, DATASET_GEN)
    per_class = n_graphs // N_TRIANGLE_CLASSES
    buckets: list[list[Graph]] = [[] for _ in range(N_TRIANGLE_CLASSES)]
    filled = 0
    budget = max_attempts_per_graph * n_graphs
    for _ in range(budget):
        if filled == n_graphs:
            break
        n = int(rng.integers(lo, hi + 1))
        target = int(rng.integers(1, N_TRIANGLE_CLASSES + 1))
        triples = n * (n - 1) * (n - 2) / 6.0
        p = min(1.0, (target / triples) ** (1.0 / 3.0))
        edges = _er_edges(n, p, rng)
        g = Graph(n, frozenset(edges), _degree_onehot(n, edges), 0)
        t = count_triangles(g)
        if 1 <= t <= N_TRIANGLE_CLASSES and len(buckets[t - 1]) < per_class:
            buckets[t - 1].append(Graph(n, g.edges, g.features, t - 1))
            filled += 1
    if filled < n_graphs:
        starving = min(range(N_TRIANGLE_CLASSES), key=lambda c: len(buckets[c]))
        raise GenerationError(
            f"class {starving} ({starving + 1} triangles) still has "
            f"{len(buckets[starving])}/{per_class} graphs after {budget} attempts"
        )
    graphs = [g for bucket in buckets for g in bucket]
    return GraphDataset(graphs, N_TRIANGLE_CLASSES, DEGREE_FEATURE_DIM)


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------

def avg_node_count(graphs) -> float:
    """Arithmetic mean node count over a dataset or sequence of graphs."""
    if isinstance(graphs, GraphDataset):
        graphs = graphs.graphs
    if len(graphs) == 0:
        raise ConfigError("average node count of an empty dataset is undefined")
    return float(np.mean([g.n_nodes for g in graphs]))


def train_test_split(ds: GraphDataset, train_frac: float, seed: int):
    """Uniform random split into floor(train_frac*N) train and the rest test."""
    if not (0.0 < train_frac < 1.0):
        raise ConfigError(f"train_frac must lie in (0,1), got {train_frac}")
    n = len(ds)
    perm = stream(seed, DATA_SPLIT).permutation(n)
    k = int(np.floor(train_frac * n))
    return [int(i) for i in perm[:k]], [int(i) for i in perm[k:]]


def noniid_label_split(train_indices, labels, n_clients: int, bias: float, seed: int) -> ClientPartition:
    """Label-skewed partition of training examples across clients.

    An example of class l goes to its home client (l mod K) with probability
    `bias`, otherwise to a uniformly random other client. bias = 1/K recovers
    a uniform split; bias = 1 gives each client only its home classes.
    """
    k = int(n_clients)
    if k < 2:
        raise ConfigError(f"need at least 2 clients, got {k}")
    if not (1.0 / k <= bias <= 1.0):
        raise ConfigError(f"bias must lie in [1/{k}, 1], got {bias}")
    rng = stream(seed, CLIENT_SPLIT)
    labels = np.asarray(labels)
    parts: list[list[int]] = [[] for _ in range(k)]
    for idx in train_indices:
        home = int(labels[idx]) % k
        if rng.random() < bias:
            parts[home].append(int(idx))
        else:
            other = int(rng.integers(k - 1))
            if other >= home:
                other += 1
            parts[other].append(int(idx))
    return ClientPartition(parts)
