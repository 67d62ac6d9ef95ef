"""Similarity-based aggregation defenses.

Two detectors operate on client parameter vectors before averaging: a
reweighting scheme driven by pairwise cosine similarity of cumulative update
histories (near-duplicate update streams get their aggregation weight pushed
toward zero), and a majority-cluster filter over cosine distances between the
submitted models themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DefenseError
from .params import ParamVector


@dataclass(eq=False)
class UpdateHistory:
    """Per-client running sums of update vectors across rounds."""

    totals: list[ParamVector]

    @classmethod
    def zeros(cls, n_clients: int, layout) -> "UpdateHistory":
        return cls([ParamVector.zeros(layout) for _ in range(n_clients)])

    def accumulate(self, updates: list[ParamVector]) -> None:
        if len(updates) != len(self.totals):
            raise DefenseError(
                f"{len(updates)} updates for {len(self.totals)} tracked clients"
            )
        self.totals = [t.add(u) for t, u in zip(self.totals, updates)]

    @property
    def n_clients(self) -> int:
        return len(self.totals)


@dataclass(eq=False)
class DefenseOutcome:
    """Aggregation weights plus diagnostics.

    weights always has one entry per client in [0,1]. accepted lists the
    surviving client ids for the filtering defense (None for reweighting).
    similarity is the full pairwise cosine matrix used by the decision;
    fail_open marks rounds where no majority cluster existed.
    """

    weights: np.ndarray
    similarity: np.ndarray
    accepted: list[int] | None = None
    fail_open: bool = False

    def similarity_stats(self) -> tuple[float, float, float]:
        """(min, mean, max) over off-diagonal pairs; nans when < 2 clients."""
        k = self.similarity.shape[0]
        if k < 2:
            return (float("nan"),) * 3
        iu = np.triu_indices(k, 1)
        vals = self.similarity[iu]
        return float(vals.min()), float(vals.mean()), float(vals.max())


def _cosine_matrix(vectors: list[np.ndarray]) -> np.ndarray:
    x = np.stack(vectors)
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    sim = (x @ x.T) / np.outer(safe, safe)
    sim[norms == 0.0, :] = 0.0
    sim[:, norms == 0.0] = 0.0
    np.fill_diagonal(sim, np.where(norms == 0.0, 0.0, 1.0))
    return sim


def foolsgold_weights(history: UpdateHistory) -> DefenseOutcome:
    """Aggregation weights from cosine similarity of cumulative updates.

    Clients whose update histories look alike (sybil-style coordination) are
    driven to weight 0; clients with distinctive histories keep weight 1.
    Zero-norm histories sit out of the similarity computation with weight 1.
    """
    k = history.n_clients
    weights = np.ones(k)
    sim_full = _cosine_matrix([t.data for t in history.totals])
    if k < 2:
        return DefenseOutcome(weights, sim_full)

    norms = np.array([t.l2() for t in history.totals])
    active = np.flatnonzero(norms > 0.0)
    if len(active) < 2:
        return DefenseOutcome(weights, sim_full)

    cs = sim_full[np.ix_(active, active)].copy()
    np.fill_diagonal(cs, -np.inf)
    v = cs.max(axis=1)

    # pardoning: scale down i's similarity to j when i looks more sybil-like
    for i in range(len(active)):
        for j in range(len(active)):
            if i != j and v[i] > v[j] and v[i] > 0:
                cs[i, j] *= v[j] / v[i]

    w = 1.0 - cs.max(axis=1)
    np.clip(w, 0.0, 1.0, out=w)
    top = w.max()
    if top > 0.0:
        w = w / top
    for i, wi in enumerate(w):
        if wi <= 0.0:
            w[i] = 0.0
        elif wi >= 1.0:
            w[i] = 1.0
        else:
            w[i] = np.clip(np.log(wi / (1.0 - wi)) + 0.5, 0.0, 1.0)
    weights[active] = w
    return DefenseOutcome(weights, sim_full)


def _average_linkage_clusters(dist: np.ndarray, threshold: float) -> list[list[int]]:
    """Agglomerative clustering: repeatedly merge the closest pair of clusters
    (average pairwise distance) until the closest pair exceeds the threshold."""
    clusters = [[i] for i in range(dist.shape[0])]
    while len(clusters) > 1:
        best = None
        best_d = np.inf
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                d = float(np.mean(dist[np.ix_(clusters[a], clusters[b])]))
                if d < best_d - 1e-15:
                    best_d, best = d, (a, b)
        if best is None or best_d > threshold:
            break
        a, b = best
        merged = sorted(clusters[a] + clusters[b])
        clusters = [c for i, c in enumerate(clusters) if i not in (a, b)]
        clusters.append(merged)
    return [sorted(c) for c in clusters]


DMF_DISTANCE_THRESHOLD = 0.5


def dmf_filter(client_params: list[ParamVector]) -> DefenseOutcome:
    """Majority-cluster model filter.

    Clusters the submitted parameter vectors by average-linkage over cosine
    distance (1 - cosine similarity) and accepts the largest cluster holding a
    strict majority (floor(K/2)+1). With no majority cluster the round fails
    open: every client is accepted and the outcome is flagged.
    """
    k = len(client_params)
    sim = _cosine_matrix([p.data for p in client_params])
    if k < 2:
        return DefenseOutcome(np.ones(k), sim, accepted=list(range(k)))
    dist = 1.0 - sim
    np.fill_diagonal(dist, 0.0)
    clusters = _average_linkage_clusters(dist, DMF_DISTANCE_THRESHOLD)
    need = k // 2 + 1
    eligible = [c for c in clusters if len(c) >= need]
    if eligible:
        accepted = max(eligible, key=lambda c: (len(c), -c[0]))
        fail_open = False
    else:
        accepted = list(range(k))
        fail_open = True
    weights = np.zeros(k)
    weights[accepted] = 1.0
    return DefenseOutcome(weights, sim, accepted=accepted, fail_open=fail_open)


def weighted_aggregate(params: list[ParamVector], weights) -> ParamVector:
    """Convex combination sum(w_i p_i) / sum(w_i)."""
    if len(params) == 0:
        raise DefenseError("cannot aggregate zero clients")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(params),):
        raise DefenseError(f"{w.shape[0] if w.ndim else 0} weights for {len(params)} clients")
    if np.any(w < 0.0):
        raise DefenseError("negative aggregation weight")
    total = float(w.sum())
    if total <= 0.0:
        raise DefenseError("all aggregation weights are zero")
    first = params[0]
    stacked = np.stack([p.data for p in params])
    return ParamVector(first.layout, (w @ stacked) / total)
