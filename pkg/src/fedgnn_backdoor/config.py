"""Flat key=value config files.

The format is one `key = value` pair per line; `#` starts a comment; blank
lines are ignored. Keys mirror the ScenarioConfig and SweepSpec field names so
configs diff cleanly against run manifests.
"""

from __future__ import annotations

from pathlib import Path

from .backdoor import TriggerParams
from .errors import ConfigError
from .federation import ScenarioConfig

SCENARIO_KEYS = {
    "n_clients", "n_malicious", "attack", "defense", "model", "hidden_dims",
    "rounds", "local_epochs", "batch_size", "lr", "gamma", "rho",
    "poison_rate", "target_label", "split_bias", "train_frac", "seed",
}
DATA_KEYS = {"data_dir", "data_name"}
GEN_KEYS = {"n_graphs", "node_lo", "node_hi", "name", "seed"}
SWEEP_KEYS = {"sweep_param", "sweep_values", "replications"}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for ln_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{ln_no}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{source}:{ln_no}: empty key or value")
        if key in out:
            raise ConfigError(f"{source}:{ln_no}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path) -> dict[str, str]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {p}: {e.strerror or e}") from None
    return parse_config_text(text, source=str(p))


def _typed(kv: dict[str, str], key: str, cast, default=None):
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    try:
        return cast(kv[key])
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {kv[key]!r}") from None


def _dims(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.replace(",", " ").split())


def check_known_keys(kv: dict[str, str], allowed: set[str]) -> None:
    unknown = sorted(set(kv) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")


def scenario_from_mapping(kv: dict[str, str], seed_override: int | None = None) -> ScenarioConfig:
    trigger = TriggerParams(
        gamma=_typed(kv, "gamma", float, 0.2),
        rho=_typed(kv, "rho", float, 0.8),
        poison_rate=_typed(kv, "poison_rate", float, 0.2),
        target_label=_typed(kv, "target_label", int, 0),
    )
    seed = seed_override if seed_override is not None else _typed(kv, "seed", int, 0)
    return ScenarioConfig(
        n_clients=_typed(kv, "n_clients", int),
        n_malicious=_typed(kv, "n_malicious", int),
        attack=_typed(kv, "attack", str).lower(),
        trigger=trigger,
        model=_typed(kv, "model", str, "gcn").lower(),
        hidden_dims=_typed(kv, "hidden_dims", _dims, (32, 32)),
        defense=_typed(kv, "defense", str, "none").lower(),
        rounds=_typed(kv, "rounds", int, 100),
        local_epochs=_typed(kv, "local_epochs", int, 2),
        batch_size=_typed(kv, "batch_size", int, 16),
        lr=_typed(kv, "lr", float, 0.01),
        split_bias=_typed(kv, "split_bias", float, 0.5),
        train_frac=_typed(kv, "train_frac", float, 0.8),
        seed=seed,
    )
