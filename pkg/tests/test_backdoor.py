import numpy as np
import pytest

from fedgnn_backdoor.backdoor import (
    EvalSet,
    TriggerGraph,
    TriggerParams,
    backdoor_dataset,
    compose_global_trigger,
    generate_trigger,
    inject_trigger,
    poison_test_set,
    trigger_size,
)
from fedgnn_backdoor.errors import (
    ConfigError,
    EvaluationError,
    InjectionError,
    PoisoningError,
)
from fedgnn_backdoor.graphs import Graph


def rng_at(seed):
    return np.random.default_rng(seed)


def random_graph(rng, n, label=0):
    edges = frozenset(
        (u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3
    )
    return Graph(n, edges, rng.normal(size=(n, 3)), label)


# -- sizing ------------------------------------------------------------------

def test_trigger_size_rounds_half_up():
    assert trigger_size(0.2, 20.0) == 4
    assert trigger_size(0.2, 22.4) == 4  # 4.48 + 0.5 = 4.98
    assert trigger_size(0.2, 22.6) == 5  # 5.02 + 0.5 = 5.52
    assert trigger_size(0.1, 15.0) == 2  # exactly 1.5 rounds up
    with pytest.raises(ConfigError):
        trigger_size(0.01, 20.0)


def test_trigger_params_validation():
    TriggerParams(0.2, 0.8, 0.2, 0)
    with pytest.raises(ConfigError):
        TriggerParams(0.2, 1.5, 0.2, 0)
    with pytest.raises(ConfigError):
        TriggerParams(0.2, 0.8, 0.0, 0)
    with pytest.raises(ConfigError):
        TriggerParams(-0.1, 0.8, 0.2, 0)
    with pytest.raises(ConfigError):
        TriggerParams(0.2, 0.8, 0.2, -1)


# -- trigger generation ----------------------------------------------------------

def test_generate_trigger_density_extremes():
    full = generate_trigger(5, 1.0, rng_at(0))
    assert full.n_edges == 10
    empty = generate_trigger(5, 0.0, rng_at(0))
    assert empty.n_edges == 0


def test_generate_trigger_edge_count_is_binomial():
    n_pairs = 6 * 5 // 2
    rho = 0.4
    rng = rng_at(1)
    counts = [generate_trigger(6, rho, rng).n_edges for _ in range(2000)]
    mean = np.mean(counts)
    sigma = np.sqrt(n_pairs * rho * (1 - rho) / 2000)
    assert abs(mean - n_pairs * rho) <= 3 * sigma


def test_generate_trigger_deterministic_per_stream():
    a = generate_trigger(7, 0.5, rng_at(42))
    b = generate_trigger(7, 0.5, rng_at(42))
    assert a == b


def test_trigger_graph_validation():
    with pytest.raises(ConfigError):
        TriggerGraph(1, frozenset())
    with pytest.raises(ConfigError):
        TriggerGraph(3, frozenset({(0, 3)}))
    t = TriggerGraph(3, frozenset({(2, 0)}))
    assert t.edges == {(0, 2)}


# -- injection ---------------------------------------------------------------------

def certificate_check(g: Graph, out: Graph, sample: np.ndarray, t: TriggerGraph):
    """Verify the injection contract directly from the artifacts."""
    assert out.n_nodes == g.n_nodes
    assert np.array_equal(out.features, g.features)
    assert out.label == g.label
    inside = set(int(x) for x in sample)
    assert len(inside) == t.n_nodes
    mapped = {
        (min(int(sample[a]), int(sample[b])), max(int(sample[a]), int(sample[b])))
        for (a, b) in t.edges
    }
    got_inside = {e for e in out.edges if e[0] in inside and e[1] in inside}
    assert got_inside == mapped
    outside_before = {e for e in g.edges if not (e[0] in inside and e[1] in inside)}
    outside_after = {e for e in out.edges if not (e[0] in inside and e[1] in inside)}
    assert outside_before == outside_after


def test_inject_trigger_certificate():
    rng = rng_at(5)
    for _ in range(30):
        g = random_graph(rng, int(rng.integers(6, 15)))
        t = generate_trigger(int(rng.integers(2, 5)), float(rng.uniform(0, 1)), rng)
        out, sample = inject_trigger(g, t, rng)
        certificate_check(g, out, sample, t)


def test_inject_trigger_too_small():
    g = random_graph(rng_at(0), 3)
    t = TriggerGraph(4, frozenset({(0, 1)}))
    with pytest.raises(InjectionError):
        inject_trigger(g, t, rng_at(0))


# -- dataset poisoning ----------------------------------------------------------------

def test_backdoor_dataset_counts_and_labels():
    rng = rng_at(7)
    local = [random_graph(rng, 10, label=i % 3) for i in range(20)]
    t = generate_trigger(3, 0.8, rng)
    out, chosen = backdoor_dataset(local, t, 0.25, target_label=0, rng=rng)
    assert len(out) == 20
    assert len(chosen) == 5  # floor(0.25 * 20)
    assert chosen == sorted(chosen)
    for i in chosen:
        assert local[i].label != 0 and out[i].label == 0
        assert np.array_equal(out[i].features, local[i].features)
    for i in set(range(20)) - set(chosen):
        assert out[i] is local[i]


def test_backdoor_dataset_clamps_to_candidates():
    rng = rng_at(8)
    # only 2 candidates: rest share the target label
    local = [random_graph(rng, 10, label=0) for _ in range(8)]
    local += [random_graph(rng, 10, label=1), random_graph(rng, 10, label=2)]
    t = generate_trigger(3, 0.5, rng)
    out, chosen = backdoor_dataset(local, t, 0.9, target_label=0, rng=rng)
    assert len(chosen) == 2 and set(chosen) == {8, 9}


def test_backdoor_dataset_small_graphs_not_candidates():
    rng = rng_at(9)
    local = [random_graph(rng, 3, label=1) for _ in range(4)]
    local.append(random_graph(rng, 12, label=1))
    t = generate_trigger(5, 0.5, rng)
    out, chosen = backdoor_dataset(local, t, 0.6, target_label=0, rng=rng)
    assert chosen == [4]


def test_backdoor_dataset_zero_floor_is_noop():
    rng = rng_at(10)
    local = [random_graph(rng, 10, label=1) for _ in range(3)]
    out, chosen = backdoor_dataset(local, t=generate_trigger(2, 1.0, rng),
                                   poison_rate=0.2, target_label=0, rng=rng)
    assert chosen == [] and out == local


def test_backdoor_dataset_no_candidates_names_client():
    rng = rng_at(11)
    local = [random_graph(rng, 10, label=0) for _ in range(5)]
    t = generate_trigger(3, 0.5, rng)
    with pytest.raises(PoisoningError) as e:
        backdoor_dataset(local, t, 0.5, target_label=0, rng=rng, client_id=7)
    assert "client 7" in str(e.value)


def test_backdoor_dataset_deterministic():
    local = [random_graph(rng_at(12), 10, label=i % 3) for i in range(10)]
    t = generate_trigger(3, 0.8, rng_at(13))
    a = backdoor_dataset(local, t, 0.3, 0, rng_at(14))
    b = backdoor_dataset(local, t, 0.3, 0, rng_at(14))
    assert a[1] == b[1]
    for x, y in zip(a[0], b[0]):
        assert x.edges == y.edges and x.label == y.label
        assert np.array_equal(x.features, y.features)


# -- composition ------------------------------------------------------------------------

def test_compose_global_trigger_offsets():
    t1 = TriggerGraph(3, frozenset({(0, 1), (1, 2)}))
    t2 = TriggerGraph(2, frozenset({(0, 1)}))
    t3 = TriggerGraph(4, frozenset({(0, 3)}))
    g = compose_global_trigger([t1, t2, t3])
    assert g.n_nodes == 9
    assert g.edges == {(0, 1), (1, 2), (3, 4), (5, 8)}
    assert g.n_edges == t1.n_edges + t2.n_edges + t3.n_edges
    with pytest.raises(ConfigError):
        compose_global_trigger([])


# -- evaluation sets -----------------------------------------------------------------------

def test_poison_test_set_counts_and_labels():
    rng = rng_at(15)
    test = [random_graph(rng, 10, label=i % 4) for i in range(40)]
    t = generate_trigger(3, 0.7, rng)
    es = poison_test_set(test, t, target_label=2, rng=rng)
    expected = sum(1 for g in test if g.label != 2)
    assert len(es.graphs) == expected
    assert all(g.label != 2 for g in es.graphs)
    # labels preserved, in order of the surviving graphs
    want_labels = [g.label for g in test if g.label != 2]
    assert [g.label for g in es.graphs] == want_labels


def test_poison_test_set_excludes_small_graphs():
    rng = rng_at(16)
    test = [random_graph(rng, 4, label=1), random_graph(rng, 12, label=1)]
    t = generate_trigger(6, 0.5, rng)
    es = poison_test_set(test, t, target_label=0, rng=rng)
    assert len(es.graphs) == 1 and es.graphs[0].n_nodes == 12


def test_poison_test_set_empty_is_error():
    rng = rng_at(17)
    test = [random_graph(rng, 10, label=0)]
    t = generate_trigger(3, 0.5, rng)
    with pytest.raises(EvaluationError):
        poison_test_set(test, t, target_label=0, rng=rng)


def test_eval_set_rejects_target_labeled_graph():
    g = random_graph(rng_at(18), 8, label=1)
    with pytest.raises(EvaluationError):
        EvalSet([g], target_label=1)
    with pytest.raises(EvaluationError):
        EvalSet([], target_label=0)
