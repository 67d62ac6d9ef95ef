"""Hyperparameter sweeps over attack knobs with replication and aggregation.

A sweep runs the base scenario once per (value, replication) cell, optionally
pairing every attacked cell with its attack-free twin to report the clean
accuracy drop. Cells are independent and can run across processes; failures
are captured per cell instead of aborting the sweep.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SimError
from .federation import RunResult, ScenarioConfig, run_federation
from .graphs import GraphDataset
from .metrics import cad as compute_cad_metric

SWEEPABLE = ("gamma", "rho", "poison_rate", "n_malicious", "n_clients")


def apply_sweep_value(base: ScenarioConfig, param: str, value) -> ScenarioConfig:
    if param in ("gamma", "rho", "poison_rate"):
        trig = dataclasses.replace(base.trigger, **{param: float(value)})
        return dataclasses.replace(base, trigger=trig)
    if param in ("n_malicious", "n_clients"):
        return dataclasses.replace(base, **{param: int(value)})
    raise ConfigError(f"cannot sweep {param!r}, choose one of {SWEEPABLE}")


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    replications: int
    base: ScenarioConfig

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {self.param!r}, choose one of {SWEEPABLE}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        for v in self.values:  # constructors validate each cell's domain
            apply_sweep_value(self.base, self.param, v)

    def cell_config(self, value, replication: int) -> ScenarioConfig:
        cfg = apply_sweep_value(self.base, self.param, value)
        return dataclasses.replace(cfg, seed=self.base.seed + replication)


@dataclass(eq=False)
class ExperimentResult:
    """One sweep cell: the config that ran, its outcome or its failure."""

    value: object
    replication: int
    config: ScenarioConfig
    run: RunResult | None
    clean_run: RunResult | None
    cad: float | None
    error: str | None
    wall_time: float

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_cell(spec: SweepSpec, data: GraphDataset, value, rep: int, with_cad: bool) -> ExperimentResult:
    cfg = spec.cell_config(value, rep)
    t0 = time.perf_counter()
    try:
        run = run_federation(cfg, data)
        clean_run = None
        cad_val = None
        if with_cad and cfg.attack != "none":
            clean_run = run_federation(dataclasses.replace(cfg, attack="none"), data)
            cad_val = compute_cad_metric(run, clean_run)
        return ExperimentResult(value, rep, cfg, run, clean_run, cad_val, None,
                                time.perf_counter() - t0)
    except SimError as e:
        return ExperimentResult(value, rep, cfg, None, None, None,
                                f"{e.prefix}: {e}", time.perf_counter() - t0)


_WORKER_STATE: dict = {}


def _worker_init(spec: SweepSpec, data: GraphDataset, with_cad: bool) -> None:
    _WORKER_STATE["spec"] = spec
    _WORKER_STATE["data"] = data
    _WORKER_STATE["with_cad"] = with_cad


def _worker_cell(args) -> ExperimentResult:
    value, rep = args
    return _run_cell(_WORKER_STATE["spec"], _WORKER_STATE["data"], value, rep,
                     _WORKER_STATE["with_cad"])


def run_sweep(
    spec: SweepSpec,
    data: GraphDataset,
    threads: int = 1,
    with_cad: bool = True,
) -> list[ExperimentResult]:
    """All (value, replication) cells in deterministic order."""
    cells = [(v, r) for v in spec.values for r in range(spec.replications)]
    if threads <= 1:
        return [_run_cell(spec, data, v, r, with_cad) for v, r in cells]
    with ProcessPoolExecutor(
        max_workers=threads, initializer=_worker_init, initargs=(spec, data, with_cad)
    ) as pool:
        return list(pool.map(_worker_cell, cells))


@dataclass(frozen=True)
class SweepAggregate:
    value: object
    n_ok: int
    n_failed: int
    mean_asr: float
    stderr_asr: float
    mean_clean_acc: float
    stderr_clean_acc: float
    mean_cad: float | None


def _mean_stderr(xs: list[float]) -> tuple[float, float]:
    if not xs:
        return float("nan"), float("nan")
    arr = np.asarray(xs)
    se = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else float("nan")
    return float(arr.mean()), se


def sweep_summary(spec: SweepSpec, results: list[ExperimentResult]) -> list[SweepAggregate]:
    """Mean and standard error of the final metrics, per swept value."""
    out = []
    for v in spec.values:
        cells = [r for r in results if r.value == v]
        ok = [r for r in cells if r.ok]
        asr, so = _mean_stderr([r.run.final_asr_global for r in ok])
        acc, sa = _mean_stderr([r.run.final_clean_acc for r in ok])
        cads = [r.cad for r in ok if r.cad is not None]
        out.append(SweepAggregate(
            value=v, n_ok=len(ok), n_failed=len(cells) - len(ok),
            mean_asr=asr, stderr_asr=so, mean_clean_acc=acc, stderr_clean_acc=sa,
            mean_cad=float(np.mean(cads)) if cads else None,
        ))
    return out


def _f(x) -> str:
    if x is None:
        return ""
    return f"{x:.6g}"


def sweep_csv(spec: SweepSpec, results: list[ExperimentResult]) -> str:
    lines = ["param,value,replication,seed,status,final_asr_global,final_clean_acc,cad,wall_time_s"]
    for r in results:
        status = "ok" if r.ok else f"failed: {r.error}"
        asr = _f(r.run.final_asr_global) if r.run else ""
        acc = _f(r.run.final_clean_acc) if r.run else ""
        lines.append(",".join([
            spec.param, _f(float(r.value)) if not isinstance(r.value, str) else r.value,
            str(r.replication), str(r.config.seed), f"\"{status}\"" if "," in status else status,
            asr, acc, _f(r.cad), _f(r.wall_time),
        ]))
    return "\n".join(lines) + "\n"


def summary_csv(aggregates: list[SweepAggregate]) -> str:
    lines = ["value,n_ok,n_failed,mean_asr,stderr_asr,mean_clean_acc,stderr_clean_acc,mean_cad"]
    for a in aggregates:
        lines.append(",".join([
            _f(float(a.value)), str(a.n_ok), str(a.n_failed),
            _f(a.mean_asr), _f(a.stderr_asr),
            _f(a.mean_clean_acc), _f(a.stderr_clean_acc), _f(a.mean_cad),
        ]))
    return "\n".join(lines) + "\n"
