import itertools
import os
from pathlib import Path

import numpy as np
import pytest

from fedgnn_backdoor.errors import ConfigError, GenerationError, ParseError
from fedgnn_backdoor.graphs import (
    ClientPartition,
    Graph,
    GraphDataset,
    avg_node_count,
    count_triangles,
    datasets_equal,
    generate_triangles_dataset,
    noniid_label_split,
    parse_tu_dataset,
    train_test_split,
    write_tu_dataset,
)

# 99th percentile of the chi-square distribution with 3 degrees of freedom
CHI2_99_DF3 = 11.344866730144373


def complete_graph(n, label=0, d=4):
    edges = frozenset((u, v) for u in range(n) for v in range(u + 1, n))
    return Graph(n, edges, np.ones((n, d)), label)


def er_graph(rng, n, p, label=0, d=4):
    edges = frozenset(
        (u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p
    )
    return Graph(n, edges, rng.normal(size=(n, d)), label)


# -- Graph / dataset invariants ----------------------------------------------

def test_graph_normalizes_edge_orientation():
    g = Graph(3, frozenset({(2, 0), (1, 2)}), np.zeros((3, 1)), 0)
    assert g.edges == {(0, 2), (1, 2)}


def test_graph_rejects_self_loop_and_bad_endpoint():
    with pytest.raises(ConfigError):
        Graph(3, frozenset({(1, 1)}), np.zeros((3, 1)), 0)
    with pytest.raises(ConfigError):
        Graph(3, frozenset({(0, 3)}), np.zeros((3, 1)), 0)


def test_graph_rejects_feature_shape_mismatch():
    with pytest.raises(ConfigError):
        Graph(3, frozenset(), np.zeros((2, 1)), 0)


def test_graph_features_are_read_only():
    g = Graph(2, frozenset({(0, 1)}), np.zeros((2, 2)), 0)
    with pytest.raises(ValueError):
        g.features[0, 0] = 1.0


def test_dataset_rejects_bad_label_and_dim():
    g = Graph(2, frozenset(), np.zeros((2, 3)), 1)
    with pytest.raises(ConfigError):
        GraphDataset([g], n_classes=1, feature_dim=3)
    with pytest.raises(ConfigError):
        GraphDataset([g], n_classes=2, feature_dim=4)


def test_partition_rejects_duplicates():
    with pytest.raises(ConfigError):
        ClientPartition([[1, 2], [2, 3]])


# -- triangle counting ---------------------------------------------------------

def brute_force_triangles(g: Graph) -> int:
    edges = g.edges
    return sum(
        1
        for (a, b, c) in itertools.combinations(range(g.n_nodes), 3)
        if (a, b) in edges and (b, c) in edges and (a, c) in edges
    )


def test_count_triangles_complete_graphs():
    assert count_triangles(complete_graph(3)) == 1
    assert count_triangles(complete_graph(4)) == 4


def test_count_triangles_matches_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(50):
        g = er_graph(rng, int(rng.integers(3, 13)), float(rng.uniform(0.1, 0.7)))
        assert count_triangles(g) == brute_force_triangles(g)


# -- synthetic dataset ---------------------------------------------------------

def test_generate_balanced_and_label_consistent():
    ds = generate_triangles_dataset(100, (10, 20), seed=7)
    assert len(ds) == 100 and ds.n_classes == 10
    counts = np.bincount(ds.labels(), minlength=10)
    assert list(counts) == [10] * 10
    for g in ds.graphs:
        assert brute_force_triangles(g) == g.label + 1


def test_generate_fixed_node_count():
    ds = generate_triangles_dataset(10, (20, 20), seed=3)
    assert all(g.n_nodes == 20 for g in ds.graphs)


def test_generate_deterministic():
    a = generate_triangles_dataset(50, (10, 20), seed=11)
    b = generate_triangles_dataset(50, (10, 20), seed=11)
    assert datasets_equal(a, b)
    c = generate_triangles_dataset(50, (10, 20), seed=12)
    assert not datasets_equal(a, c)


def test_generate_rejects_bad_args():
    with pytest.raises(ConfigError):
        generate_triangles_dataset(55, (10, 20), seed=0)
    with pytest.raises(ConfigError):
        generate_triangles_dataset(10, (3, 20), seed=0)


def test_generate_reports_starving_class():
    with pytest.raises(GenerationError):
        generate_triangles_dataset(10, (10, 20), seed=0, max_attempts_per_graph=0)


# -- TU format -----------------------------------------------------------------

def write_toy_dir(tmp_path: Path, name="TOY") -> Path:
    d = tmp_path / name
    d.mkdir()
    (d / f"{name}_A.txt").write_text("1, 2\n2, 1\n3, 4\n4, 3\n4, 5\n5, 4\n")
    (d / f"{name}_graph_indicator.txt").write_text("1\n1\n2\n2\n2\n")
    (d / f"{name}_graph_labels.txt").write_text("1\n-1\n")
    return d


def test_parse_toy_directory(tmp_path):
    ds = parse_tu_dataset(write_toy_dir(tmp_path))
    assert len(ds) == 2
    assert [g.n_nodes for g in ds.graphs] == [2, 3]
    assert ds.graphs[0].edges == {(0, 1)}
    assert ds.graphs[1].edges == {(0, 1), (1, 2)}
    # labels {-1, 1} remapped to contiguous classes, sorted by raw value
    assert [g.label for g in ds.graphs] == [1, 0]
    # no node info: degree one-hots
    assert ds.feature_dim == 16
    assert ds.graphs[0].features[0, 1] == 1.0


def test_parse_node_labels_and_attributes(tmp_path):
    d = write_toy_dir(tmp_path)
    (d / "TOY_node_labels.txt").write_text("0\n1\n1\n0\n2\n")
    (d / "TOY_node_attributes.txt").write_text("0.5, 1.5\n2.5, 3.5\n4.5, 5.5\n6.5, 7.5\n8.5, 9.5\n")
    ds = parse_tu_dataset(d)
    assert ds.feature_dim == 5  # 3 one-hot label values + 2 attributes
    assert ds.attr_dim == 2
    assert np.allclose(ds.graphs[0].features[0], [1, 0, 0, 0.5, 1.5])
    assert np.allclose(ds.graphs[1].features[2], [0, 0, 1, 8.5, 9.5])


def test_parse_errors_name_file_and_line(tmp_path):
    d = write_toy_dir(tmp_path)
    (d / "TOY_A.txt").write_text("1, 2\n1, 999\n")
    with pytest.raises(ParseError) as e:
        parse_tu_dataset(d)
    assert "TOY_A.txt" in str(e.value) and ":2:" in str(e.value)


def test_parse_label_count_mismatch(tmp_path):
    d = write_toy_dir(tmp_path)
    (d / "TOY_graph_labels.txt").write_text("1\n")
    with pytest.raises(ParseError) as e:
        parse_tu_dataset(d)
    assert "graph_labels" in str(e.value)


def test_parse_missing_file(tmp_path):
    d = write_toy_dir(tmp_path)
    os.remove(d / "TOY_graph_indicator.txt")
    with pytest.raises(ParseError) as e:
        parse_tu_dataset(d)
    assert "graph_indicator" in str(e.value)


def test_parse_cross_graph_edge(tmp_path):
    d = write_toy_dir(tmp_path)
    (d / "TOY_A.txt").write_text("1, 2\n2, 3\n")
    with pytest.raises(ParseError):
        parse_tu_dataset(d)


def test_tu_round_trip(tmp_path):
    ds = generate_triangles_dataset(40, (8, 14), seed=2)
    write_tu_dataset(ds, tmp_path / "out", "RT")
    back = parse_tu_dataset(tmp_path / "out", name="RT")
    assert datasets_equal(ds, back)
    # and again, starting from a parsed dataset
    write_tu_dataset(back, tmp_path / "out2", "RT2")
    again = parse_tu_dataset(tmp_path / "out2")
    assert datasets_equal(back, again)


NCI1_DIR = os.environ.get("NCI1_DIR", str(Path(__file__).parent / "data" / "NCI1"))


@pytest.mark.skipif(not Path(NCI1_DIR).is_dir(), reason="NCI1 files not present")
def test_nci1_statistics():
    ds = parse_tu_dataset(NCI1_DIR)
    assert len(ds) == 4110
    assert ds.n_classes == 2
    counts = np.bincount(ds.labels())
    assert sorted(counts.tolist()) == [2053, 2057]
    assert abs(avg_node_count(ds) - 29.87) <= 0.01
    train, test = train_test_split(ds, 0.8, seed=0)
    assert (len(train), len(test)) == (3288, 822)


# -- splits ----------------------------------------------------------------------

def make_flat_dataset(labels, n_classes):
    graphs = [Graph(2, frozenset({(0, 1)}), np.zeros((2, 1)), int(l)) for l in labels]
    return GraphDataset(graphs, n_classes, 1)


def test_train_test_split_sizes_and_coverage():
    ds = make_flat_dataset([0] * 10, 1)
    train, test = train_test_split(ds, 0.8, seed=4)
    assert len(train) == 8 and len(test) == 2
    assert sorted(train + test) == list(range(10))
    assert train_test_split(ds, 0.8, seed=4) == (train, test)


def test_train_test_split_rejects_bad_frac():
    ds = make_flat_dataset([0] * 4, 1)
    with pytest.raises(ConfigError):
        train_test_split(ds, 1.0, seed=0)


def test_noniid_partition_invariant():
    labels = np.arange(400) % 7
    part = noniid_label_split(list(range(400)), labels, 5, 0.6, seed=9)
    assert part.covers(range(400))
    assert part.n_clients == 5


def test_noniid_degenerate_bias_routes_home():
    labels = np.arange(100) % 4
    part = noniid_label_split(list(range(100)), labels, 4, 1.0, seed=9)
    for c in range(4):
        assert all(labels[i] == c for i in part.parts[c])
        assert len(part.parts[c]) == 25


def test_noniid_uniform_bias_is_uniform():
    # one class, bias 1/K: assignments should be uniform across the K clients
    k = 4
    labels = np.zeros(10000, dtype=int)
    part = noniid_label_split(list(range(10000)), labels, k, 1.0 / k, seed=13)
    counts = np.array([len(p) for p in part.parts])
    expected = 10000 / k
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < CHI2_99_DF3


def test_noniid_bias_binomial_bound():
    # class 0's mass lands on its home client with probability q
    n0 = 2000
    q = 0.7
    labels = np.array([0] * n0 + [1] * n0)
    part = noniid_label_split(list(range(2 * n0)), labels, 5, q, seed=21)
    share = sum(1 for i in part.parts[0] if labels[i] == 0) / n0
    assert abs(share - q) <= 3 * np.sqrt(q * (1 - q) / n0)


def test_noniid_rejects_bias_out_of_range():
    labels = np.zeros(10, dtype=int)
    with pytest.raises(ConfigError):
        noniid_label_split(list(range(10)), labels, 5, 0.1, seed=0)
    with pytest.raises(ConfigError):
        noniid_label_split(list(range(10)), labels, 5, 1.1, seed=0)


def test_avg_node_count():
    g2 = Graph(2, frozenset(), np.zeros((2, 1)), 0)
    g4 = Graph(4, frozenset(), np.zeros((4, 1)), 0)
    assert avg_node_count([g2, g4]) == 3.0
    assert avg_node_count([g4]) == 4.0
    with pytest.raises(ConfigError):
        avg_node_count([])
