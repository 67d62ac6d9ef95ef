"""Round-based federated training with optional backdoor attacks and
similarity-based aggregation defenses.

One run: split the dataset, hand each client a local shard, pick the
compromised clients, build their triggers, then iterate broadcast ->
local training (with per-round re-poisoning on compromised clients) ->
defense reweighting -> averaging, evaluating clean accuracy and per-trigger
attack success after every round. Everything is a deterministic function of
the config seed; client work is keyed by (seed, round, client) so execution
order cannot change results.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .backdoor import (
    TriggerGraph,
    TriggerParams,
    compose_global_trigger,
    backdoor_dataset,
    generate_trigger,
    poison_test_set,
    trigger_size,
)
from .defenses import UpdateHistory, dmf_filter, foolsgold_weights, weighted_aggregate
from .errors import ConfigError, DefenseError, FederationError, SimError
from .graphs import (
    ClientPartition,
    Graph,
    GraphDataset,
    avg_node_count,
    noniid_label_split,
    train_test_split,
)
from .models import (
    DEFAULT_HIDDEN,
    GraphBatch,
    ModelSpec,
    batch_logits,
    init_params,
    loss_and_grad,
    make_batch,
    sgd_step,
)
from .params import ParamVector, mean_params
from .rng import CLIENT_ROUND, EVAL_POISON, MALICIOUS_PICK, TRIGGER, stream

ATTACKS = ("none", "cba", "dba")
DEFENSES = ("none", "foolsgold", "dmf")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one federated run."""

    n_clients: int
    n_malicious: int
    attack: str
    trigger: TriggerParams
    model: str = "gcn"
    hidden_dims: tuple[int, ...] = DEFAULT_HIDDEN
    defense: str = "none"
    rounds: int = 100
    local_epochs: int = 2
    batch_size: int = 16
    lr: float = 0.01
    split_bias: float = 0.5
    train_frac: float = 0.8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if self.attack not in ATTACKS:
            raise ConfigError(f"unknown attack {self.attack!r}, expected one of {ATTACKS}")
        if self.defense not in DEFENSES:
            raise ConfigError(f"unknown defense {self.defense!r}, expected one of {DEFENSES}")
        if self.n_clients < 1:
            raise ConfigError(f"need at least 1 client, got {self.n_clients}")
        if not (1 <= self.n_malicious <= self.n_clients):
            raise ConfigError(
                f"n_malicious must lie in [1, {self.n_clients}], got {self.n_malicious}"
            )
        if self.attack == "dba" and self.n_malicious < 2:
            raise ConfigError("distributed attack needs at least 2 malicious clients")
        if self.rounds < 1 or self.local_epochs < 0 or self.batch_size < 1:
            raise ConfigError("rounds >= 1, local_epochs >= 0, batch_size >= 1 required")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")


@dataclass(eq=False)
class ClientState:
    """One client's shard plus its attack role for this run."""

    id: int
    role: str  # "honest" | "malicious"
    graphs: list[Graph]
    trigger: TriggerGraph | None = None

    def __post_init__(self):
        if self.role == "honest" and self.trigger is not None:
            raise ConfigError(f"honest client {self.id} carries a trigger")

    @property
    def poisons(self) -> bool:
        return self.trigger is not None


@dataclass(frozen=True)
class RoundLog:
    """Per-round record of the global model and its metrics."""

    t: int
    checksum: str
    clean_acc: float
    asr_global: float
    asr_local: tuple[float, ...]
    weights: tuple[float, ...]
    losses: tuple[float, ...]
    cos_stats: tuple[float, float, float] | None = None
    fail_open: bool = False


@dataclass(eq=False)
class RunResult:
    config: ScenarioConfig
    model_spec: ModelSpec
    rounds: list[RoundLog]
    final_params: ParamVector
    trigger_basis_ids: list[int]
    poisoning_ids: list[int]
    local_triggers: list[TriggerGraph]
    global_trigger: TriggerGraph
    wall_time: float

    @property
    def final_clean_acc(self) -> float:
        return self.rounds[-1].clean_acc

    @property
    def final_asr_global(self) -> float:
        return self.rounds[-1].asr_global


def fedavg(params: list[ParamVector]) -> ParamVector:
    """Unweighted element-wise mean of client parameter vectors."""
    return mean_params(params)


def client_update(
    client: ClientState,
    global_params: ParamVector,
    cfg: ScenarioConfig,
    model_spec: ModelSpec,
    round_idx: int,
) -> tuple[ParamVector, float]:
    """One client's local work for one round.

    A poisoning client first rebuilds its poisoned shard from the pristine
    local view (fresh sample of victims and injection sites every round), then
    everyone runs local_epochs of shuffled minibatch SGD from the broadcast
    parameters. Returns the updated parameters and the mean minibatch loss
    (nan when no step was taken).
    """
    rng = stream(cfg.seed, CLIENT_ROUND, round_idx, client.id)
    view = client.graphs
    if client.poisons:
        view, _ = backdoor_dataset(
            view,
            client.trigger,
            cfg.trigger.poison_rate,
            cfg.trigger.target_label,
            rng,
            client_id=client.id,
        )
    if cfg.local_epochs == 0 or not view:
        return global_params, float("nan")
    params = global_params
    losses = []
    n = len(view)
    for _ in range(cfg.local_epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            batch = [view[int(i)] for i in order[lo:lo + cfg.batch_size]]
            loss, grad = loss_and_grad(model_spec, params, batch)
            params = sgd_step(params, grad, cfg.lr)
            losses.append(loss)
    return params, float(np.mean(losses))


# ---------------------------------------------------------------------------
# Evaluation plumbing
# ---------------------------------------------------------------------------

def _chunked_batches(graphs: list[Graph], kind: str, chunk: int = 256) -> list[GraphBatch]:
    return [make_batch(graphs[lo:lo + chunk], kind) for lo in range(0, len(graphs), chunk)]

def _accuracy(spec: ModelSpec, params: ParamVector, batches: list[GraphBatch]) -> float:
    hit = total = 0
    for b in batches:
        preds = np.argmax(batch_logits(spec, params, b), axis=1)
        hit += int(np.sum(preds == b.labels))
        total += b.n_graphs
    return hit / total

def _target_rate(spec: ModelSpec, params: ParamVector, batches: list[GraphBatch], y_t: int) -> float:
    hit = total = 0
    for b in batches:
        preds = np.argmax(batch_logits(spec, params, b), axis=1)
        hit += int(np.sum(preds == y_t))
        total += b.n_graphs
    return hit / total


def standardize_features(data: GraphDataset, train_idx: list[int]) -> GraphDataset:
    """Shift/scale the continuous attribute columns to zero mean and unit
    variance, with the statistics taken over the training split's nodes only.
    Datasets without continuous attributes pass through unchanged."""
    if data.attr_dim == 0:
        return data
    lo = data.feature_dim - data.attr_dim
    train_nodes = np.vstack([data.graphs[i].features[:, lo:] for i in train_idx])
    mu = train_nodes.mean(axis=0)
    sd = train_nodes.std(axis=0)
    sd[sd == 0.0] = 1.0
    graphs = []
    for g in data.graphs:
        f = g.features.copy()
        f[:, lo:] = (f[:, lo:] - mu) / sd
        graphs.append(Graph(g.n_nodes, g.edges, f, g.label))
    return GraphDataset(graphs, data.n_classes, data.feature_dim, attr_dim=data.attr_dim)


def params_checksum(params: ParamVector) -> str:
    return hashlib.sha256(params.to_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# The round loop
# ---------------------------------------------------------------------------

def run_federation(cfg: ScenarioConfig, data: GraphDataset) -> RunResult:
    t_start = time.perf_counter()
    if data.n_classes < 2:
        raise ConfigError("dataset needs at least 2 classes")
    if cfg.trigger.target_label >= data.n_classes:
        raise ConfigError(
            f"target label {cfg.trigger.target_label} outside [0,{data.n_classes})"
        )

    train_idx, test_idx = train_test_split(data, cfg.train_frac, cfg.seed)
    data = standardize_features(data, train_idx)
    if cfg.n_clients == 1:
        partition = ClientPartition([list(train_idx)])
    else:
        partition = noniid_label_split(
            train_idx, data.labels(), cfg.n_clients, cfg.split_bias, cfg.seed
        )
    local_views = [[data.graphs[i] for i in part] for part in partition.parts]

    # compromised clients: the first M ids of a seeded shuffle
    perm = stream(cfg.seed, MALICIOUS_PICK).permutation(cfg.n_clients)
    basis_ids = [int(x) for x in perm[: cfg.n_malicious]]

    local_triggers: list[TriggerGraph] = []
    for i, cid in enumerate(basis_ids):
        if not local_views[cid]:
            raise FederationError(f"client {cid} owns no training graphs, cannot size its trigger")
        s = trigger_size(cfg.trigger.gamma, avg_node_count(local_views[cid]))
        local_triggers.append(generate_trigger(s, cfg.trigger.rho, stream(cfg.seed, TRIGGER, i)))
    global_trigger = compose_global_trigger(local_triggers)

    if cfg.attack == "dba":
        poisoning_ids = list(basis_ids)
    elif cfg.attack == "cba":
        poisoning_ids = basis_ids[:1]
    else:
        poisoning_ids = []

    clients = []
    for k in range(cfg.n_clients):
        if cfg.attack == "dba" and k in basis_ids:
            trig = local_triggers[basis_ids.index(k)]
            clients.append(ClientState(k, "malicious", local_views[k], trig))
        elif cfg.attack == "cba" and k == poisoning_ids[0]:
            clients.append(ClientState(k, "malicious", local_views[k], global_trigger))
        else:
            clients.append(ClientState(k, "honest", local_views[k]))

    test_graphs = [data.graphs[i] for i in test_idx]
    y_t = cfg.trigger.target_label
    global_eval = poison_test_set(test_graphs, global_trigger, y_t, stream(cfg.seed, EVAL_POISON, 0))
    local_evals = [
        poison_test_set(test_graphs, t, y_t, stream(cfg.seed, EVAL_POISON, i + 1))
        for i, t in enumerate(local_triggers)
    ]
    clean_batches = _chunked_batches(test_graphs, cfg.model)
    global_eval_batches = _chunked_batches(global_eval.graphs, cfg.model)
    local_eval_batches = [_chunked_batches(e.graphs, cfg.model) for e in local_evals]

    model_spec = ModelSpec(cfg.model, (data.feature_dim, *cfg.hidden_dims), data.n_classes)
    global_params = init_params(model_spec, cfg.seed)
    history = (
        UpdateHistory.zeros(cfg.n_clients, model_spec.layout())
        if cfg.defense == "foolsgold"
        else None
    )

    logs: list[RoundLog] = []
    for t in range(1, cfg.rounds + 1):
        locals_and_losses = []
        for k in range(cfg.n_clients):
            try:
                locals_and_losses.append(
                    client_update(clients[k], global_params, cfg, model_spec, t)
                )
            except SimError as e:
                raise FederationError(f"round {t}, client {k}: {e}") from e
        client_params = [p for p, _ in locals_and_losses]
        losses = tuple(l for _, l in locals_and_losses)

        weights = np.ones(cfg.n_clients)
        cos_stats = None
        fail_open = False
        if cfg.defense == "none":
            new_global = fedavg(client_params)
        elif cfg.defense == "foolsgold":
            history.accumulate([p.sub(global_params) for p in client_params])
            outcome = foolsgold_weights(history)
            weights = outcome.weights
            cos_stats = outcome.similarity_stats()
            try:
                new_global = weighted_aggregate(client_params, weights)
            except DefenseError:
                new_global = global_params  # every client rejected: keep last model
                fail_open = True
        else:
            outcome = dmf_filter(client_params)
            weights = outcome.weights
            cos_stats = outcome.similarity_stats()
            fail_open = outcome.fail_open
            new_global = weighted_aggregate(client_params, weights)
        global_params = new_global

        logs.append(RoundLog(
            t=t,
            checksum=params_checksum(global_params),
            clean_acc=_accuracy(model_spec, global_params, clean_batches),
            asr_global=_target_rate(model_spec, global_params, global_eval_batches, y_t),
            asr_local=tuple(
                _target_rate(model_spec, global_params, bs, y_t) for bs in local_eval_batches
            ),
            weights=tuple(float(w) for w in weights),
            losses=losses,
            cos_stats=cos_stats,
            fail_open=fail_open,
        ))

    return RunResult(
        config=cfg,
        model_spec=model_spec,
        rounds=logs,
        final_params=global_params,
        trigger_basis_ids=basis_ids,
        poisoning_ids=poisoning_ids,
        local_triggers=local_triggers,
        global_trigger=global_trigger,
        wall_time=time.perf_counter() - t_start,
    )


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def _f(x: float) -> str:
    return f"{x:.6g}"


def atomic_write(path, content) -> None:
    """Write text or bytes via a temp file and atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    mode = "wb" if isinstance(content, bytes) else "w"
    with open(tmp, mode) as fh:
        fh.write(content)
    os.replace(tmp, path)


def round_csv(result: RunResult) -> str:
    """One row per round: metrics, per-client weights and losses, and (when a
    defense ran) the min/mean/max of the pairwise cosine similarities."""
    m = len(result.local_triggers)
    k = result.config.n_clients
    cols = ["t", "clean_acc", "asr_global"]
    cols += [f"asr_local_{i}" for i in range(1, m + 1)]
    cols += [f"weight_{i}" for i in range(1, k + 1)]
    cols += [f"loss_{i}" for i in range(1, k + 1)]
    with_cos = result.config.defense != "none"
    if with_cos:
        cols += ["cos_min", "cos_mean", "cos_max"]
    lines = [",".join(cols)]
    for r in result.rounds:
        row = [str(r.t), _f(r.clean_acc), _f(r.asr_global)]
        row += [_f(x) for x in r.asr_local]
        row += [_f(x) for x in r.weights]
        row += [_f(x) for x in r.losses]
        if with_cos:
            stats = r.cos_stats if r.cos_stats is not None else (float("nan"),) * 3
            row += [_f(x) for x in stats]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _jf(x: float) -> float:
    return float(_f(x)) if np.isfinite(x) else None


def round_jsonl(result: RunResult) -> str:
    records = []
    for r in result.rounds:
        records.append(json.dumps({
            "round": r.t,
            "checksum": r.checksum,
            "clean_acc": _jf(r.clean_acc),
            "asr_global": _jf(r.asr_global),
            "asr_local": [_jf(x) for x in r.asr_local],
            "weights": [_jf(x) for x in r.weights],
            "losses": [_jf(x) for x in r.losses],
            "cos_stats": None if r.cos_stats is None else [_jf(x) for x in r.cos_stats],
            "fail_open": r.fail_open,
        }))
    return "\n".join(records) + "\n"


def config_lines(cfg: ScenarioConfig) -> list[str]:
    return [
        f"n_clients = {cfg.n_clients}",
        f"n_malicious = {cfg.n_malicious}",
        f"attack = {cfg.attack}",
        f"defense = {cfg.defense}",
        f"model = {cfg.model}",
        f"hidden_dims = {','.join(str(d) for d in cfg.hidden_dims)}",
        f"rounds = {cfg.rounds}",
        f"local_epochs = {cfg.local_epochs}",
        f"batch_size = {cfg.batch_size}",
        f"lr = {_f(cfg.lr)}",
        f"gamma = {_f(cfg.trigger.gamma)}",
        f"rho = {_f(cfg.trigger.rho)}",
        f"poison_rate = {_f(cfg.trigger.poison_rate)}",
        f"target_label = {cfg.trigger.target_label}",
        f"split_bias = {_f(cfg.split_bias)}",
        f"train_frac = {_f(cfg.train_frac)}",
        f"seed = {cfg.seed}",
    ]


def manifest_text(result: RunResult) -> str:
    lines = [f"version = {__version__}"]
    lines += config_lines(result.config)
    lines.append(f"trigger_basis_clients = {','.join(str(i) for i in result.trigger_basis_ids)}")
    lines.append(f"poisoning_clients = {','.join(str(i) for i in result.poisoning_ids)}")
    for i, t in enumerate(result.local_triggers, start=1):
        edges = " ".join(f"{u}-{v}" for (u, v) in t.sorted_edges())
        lines.append(f"local_trigger_{i} = nodes:{t.n_nodes} edges:{edges}")
    g = result.global_trigger
    edges = " ".join(f"{u}-{v}" for (u, v) in g.sorted_edges())
    lines.append(f"global_trigger = nodes:{g.n_nodes} edges:{edges}")
    lines.append(f"final_checksum = {result.rounds[-1].checksum}")
    lines.append(f"wall_time_s = {_f(result.wall_time)}")
    return "\n".join(lines) + "\n"


def write_run_outputs(result: RunResult, out_dir) -> None:
    out = Path(out_dir)
    atomic_write(out / "rounds.csv", round_csv(result))
    atomic_write(out / "rounds.jsonl", round_jsonl(result))
    atomic_write(out / "manifest.txt", manifest_text(result))
    atomic_write(out / "final_params.bin", result.final_params.to_bytes())
