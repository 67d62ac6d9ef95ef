"""Deterministic simulator of backdoor attacks on federated GNN training."""

__version__ = "0.1.0"

from .backdoor import (
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
from .defenses import (
    DefenseOutcome,
    UpdateHistory,
    dmf_filter,
    foolsgold_weights,
    weighted_aggregate,
)
from .errors import (
    ConfigError,
    DefenseError,
    EvaluationError,
    FederationError,
    GenerationError,
    InjectionError,
    LayoutError,
    ParseError,
    PoisoningError,
    SimError,
    UndefinedCorrelationError,
)
from .federation import (
    RoundLog,
    RunResult,
    ScenarioConfig,
    client_update,
    fedavg,
    run_federation,
    write_run_outputs,
)
from .graphs import (
    ClientPartition,
    Graph,
    GraphDataset,
    avg_node_count,
    count_triangles,
    generate_triangles_dataset,
    noniid_label_split,
    parse_tu_dataset,
    train_test_split,
    write_tu_dataset,
)
from .metrics import attack_success_rate, cad, clean_accuracy, pearson_cc
from .models import ModelSpec, forward, init_params, loss_and_grad
from .params import ParamVector, mean_params
from .sweep import SweepSpec, run_sweep, sweep_summary

__all__ = [
    "__version__",
    # errors
    "SimError",
    "ParseError",
    "GenerationError",
    "ConfigError",
    "LayoutError",
    "InjectionError",
    "PoisoningError",
    "EvaluationError",
    "DefenseError",
    "FederationError",
    "UndefinedCorrelationError",
    # graphs
    "Graph",
    "GraphDataset",
    "ClientPartition",
    "parse_tu_dataset",
    "write_tu_dataset",
    "count_triangles",
    "generate_triangles_dataset",
    "avg_node_count",
    "train_test_split",
    "noniid_label_split",
    # models and parameters
    "ModelSpec",
    "init_params",
    "forward",
    "loss_and_grad",
    "ParamVector",
    "mean_params",
    # attack machinery
    "TriggerParams",
    "TriggerGraph",
    "EvalSet",
    "trigger_size",
    "generate_trigger",
    "inject_trigger",
    "backdoor_dataset",
    "compose_global_trigger",
    "poison_test_set",
    # federation
    "ScenarioConfig",
    "RoundLog",
    "RunResult",
    "client_update",
    "fedavg",
    "run_federation",
    "write_run_outputs",
    # defenses
    "UpdateHistory",
    "DefenseOutcome",
    "foolsgold_weights",
    "dmf_filter",
    "weighted_aggregate",
    # metrics and sweeps
    "attack_success_rate",
    "clean_accuracy",
    "cad",
    "pearson_cc",
    "SweepSpec",
    "run_sweep",
    "sweep_summary",
]
