"""Trigger generation, subgraph injection, local-dataset poisoning and
global-trigger composition.

A trigger is a small random graph. Poisoning a local dataset replaces the
connectivity among a sampled node subset of selected training graphs with the
trigger's edges and relabels them to the attacker's target class. The global
trigger is the disjoint union of all per-attacker local triggers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EvaluationError, InjectionError, PoisoningError
from .graphs import Graph


def trigger_size(gamma: float, avg_nodes: float) -> int:
    """Trigger node count: gamma times the average graph size, rounded half-up."""
    s = int(np.floor(gamma * avg_nodes + 0.5))
    if s < 2:
        raise ConfigError(
            f"trigger size {s} from gamma={gamma} and avg nodes {avg_nodes:.2f}; need >= 2"
        )
    return s


@dataclass(frozen=True)
class TriggerParams:
    """Attack knobs: relative trigger size, edge density, poison fraction, target."""

    gamma: float
    rho: float
    poison_rate: float
    target_label: int

    def __post_init__(self):
        if not (0.0 <= self.rho <= 1.0):
            raise ConfigError(f"rho must lie in [0,1], got {self.rho}")
        if not (0.0 < self.poison_rate < 1.0):
            raise ConfigError(f"poison_rate must lie in (0,1), got {self.poison_rate}")
        if self.gamma <= 0.0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.target_label < 0:
            raise ConfigError(f"target_label must be a class index, got {self.target_label}")


@dataclass(frozen=True)
class TriggerGraph:
    """Concrete trigger: an undirected graph over [0, n_nodes)."""

    n_nodes: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ConfigError(f"trigger needs at least 2 nodes, got {self.n_nodes}")
        norm = frozenset((min(u, v), max(u, v)) for (u, v) in self.edges)
        object.__setattr__(self, "edges", norm)
        for (u, v) in norm:
            if u == v or not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise ConfigError(f"bad trigger edge ({u},{v}) for {self.n_nodes} nodes")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def generate_trigger(s: int, rho: float, rng: np.random.Generator) -> TriggerGraph:
    """Erdos-Renyi draw: each of the C(s,2) node pairs kept with probability rho."""
    if s < 2:
        raise ConfigError(f"trigger size must be >= 2, got {s}")
    if not (0.0 <= rho <= 1.0):
        raise ConfigError(f"rho must lie in [0,1], got {rho}")
    pairs = [(u, v) for u in range(s) for v in range(u + 1, s)]
    mask = rng.random(len(pairs)) < rho
    return TriggerGraph(s, frozenset(p for p, keep in zip(pairs, mask) if keep))


def inject_trigger(
    g: Graph, t: TriggerGraph, rng: np.random.Generator
) -> tuple[Graph, np.ndarray]:
    """Overwrite the connectivity of a random node subset with the trigger.

    Samples t.n_nodes distinct nodes uniformly; the sampling order defines the
    mapping from trigger node i to sampled node. Every edge between two sampled
    nodes is removed, the trigger's edges are mapped in, and edges touching any
    unsampled node (and all node features) stay as they were. Returns the new
    graph and the sampled node array.
    """
    if g.n_nodes < t.n_nodes:
        raise InjectionError(
            f"graph has {g.n_nodes} nodes, trigger needs {t.n_nodes}"
        )
    sample = rng.choice(g.n_nodes, size=t.n_nodes, replace=False)
    inside = set(int(x) for x in sample)
    kept = {e for e in g.edges if not (e[0] in inside and e[1] in inside)}
    for (a, b) in t.edges:
        u, v = int(sample[a]), int(sample[b])
        kept.add((min(u, v), max(u, v)))
    return Graph(g.n_nodes, frozenset(kept), g.features, g.label), sample


def backdoor_dataset(
    local: list[Graph],
    t: TriggerGraph,
    poison_rate: float,
    target_label: int,
    rng: np.random.Generator,
    client_id: int | None = None,
) -> tuple[list[Graph], list[int]]:
    """Poison a fraction of a local dataset view.

    Candidates are graphs whose label differs from the target and which are
    large enough to host the trigger; floor(poison_rate * len(local)) of them
    (clamped to the candidate count) get the trigger injected and their label
    switched to the target. Returns the rewritten list plus the positions that
    were poisoned.
    """
    if not (0.0 < poison_rate < 1.0):
        raise ConfigError(f"poison_rate must lie in (0,1), got {poison_rate}")
    who = "" if client_id is None else f" (client {client_id})"
    candidates = [
        i for i, g in enumerate(local)
        if g.label != target_label and g.n_nodes >= t.n_nodes
    ]
    if not candidates:
        raise PoisoningError(
            f"no poisoning candidates{who}: every graph is target-labeled or "
            f"smaller than the {t.n_nodes}-node trigger"
        )
    n_poison = min(int(np.floor(poison_rate * len(local))), len(candidates))
    if n_poison == 0:
        return list(local), []
    picked = rng.choice(len(candidates), size=n_poison, replace=False)
    chosen = sorted(candidates[int(i)] for i in picked)
    out = list(local)
    for i in chosen:
        injected, _ = inject_trigger(local[i], t, rng)
        out[i] = Graph(injected.n_nodes, injected.edges, injected.features, target_label)
    return out, chosen


def compose_global_trigger(locals_: list[TriggerGraph]) -> TriggerGraph:
    """Disjoint union of local triggers: node sets offset, no cross edges."""
    if not locals_:
        raise ConfigError("cannot compose zero triggers")
    edges: set[tuple[int, int]] = set()
    off = 0
    for t in locals_:
        edges.update((off + u, off + v) for (u, v) in t.edges)
        off += t.n_nodes
    return TriggerGraph(off, frozenset(edges))


@dataclass(eq=False)
class EvalSet:
    """Trigger-embedded test graphs with their original labels kept.

    Only graphs originally labeled with a non-target class (and large enough
    for the trigger) are included, so the attack-success rate is the fraction
    of these pushed to the target class.
    """

    graphs: list[Graph]
    target_label: int

    def __post_init__(self):
        if not self.graphs:
            raise EvaluationError("evaluation set is empty")
        for g in self.graphs:
            if g.label == self.target_label:
                raise EvaluationError("evaluation set contains a target-labeled graph")


def poison_test_set(
    test: list[Graph], t: TriggerGraph, target_label: int, rng: np.random.Generator
) -> EvalSet:
    """Build the attack-evaluation set: inject the trigger into every test
    graph whose label is not the target and which can host the trigger."""
    kept = [g for g in test if g.label != target_label and g.n_nodes >= t.n_nodes]
    if not kept:
        raise EvaluationError(
            "no evaluation graphs: all test graphs are target-labeled or too small"
        )
    injected = [inject_trigger(g, t, rng)[0] for g in kept]
    return EvalSet(injected, target_label)
