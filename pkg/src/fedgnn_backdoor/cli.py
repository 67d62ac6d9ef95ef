"""Command-line entry points.

Subcommands:
  gen-data  write a synthetic triangle-count dataset as TU-format files
  run       run one federated scenario from a config file
  sweep     run a hyperparameter sweep from a config file
  report    summarize round/sweep CSVs from an output directory

Structured failures exit nonzero with a one-line diagnostic whose prefix names
the failing subsystem (parse error, config error, federation error, ...).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .config import (
    DATA_KEYS,
    GEN_KEYS,
    SCENARIO_KEYS,
    SWEEP_KEYS,
    check_known_keys,
    load_config,
    scenario_from_mapping,
)
from .errors import ConfigError, SimError
from .federation import atomic_write, run_federation, write_run_outputs
from .graphs import generate_triangles_dataset, parse_tu_dataset, write_tu_dataset
from .sweep import SweepSpec, run_sweep, summary_csv, sweep_csv, sweep_summary


def _f(x: float) -> str:
    return f"{x:.6g}"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedgnn-backdoor",
        description="Simulate backdoor attacks on federated GNN training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required: bool):
        p.add_argument("--config", required=config_required, help="key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="parallel worker processes")

    common(sub.add_parser("gen-data", help="write a synthetic dataset in TU format"), False)
    common(sub.add_parser("run", help="run one scenario"), True)
    common(sub.add_parser("sweep", help="run a sweep"), True)
    common(sub.add_parser("report", help="summarize CSVs under --out"), False)
    return parser


def _load_dataset(kv: dict[str, str]):
    if "data_dir" not in kv:
        raise ConfigError("missing required config key 'data_dir'")
    return parse_tu_dataset(kv["data_dir"], name=kv.get("data_name"))


def _cmd_gen_data(args) -> int:
    kv = load_config(args.config) if args.config else {}
    check_known_keys(kv, GEN_KEYS)
    n_graphs = int(kv.get("n_graphs", "3000"))
    lo = int(kv.get("node_lo", "10"))
    hi = int(kv.get("node_hi", "30"))
    name = kv.get("name", "SYNTH")
    seed = args.seed if args.seed is not None else int(kv.get("seed", "0"))
    ds = generate_triangles_dataset(n_graphs, (lo, hi), seed=seed)
    write_tu_dataset(ds, args.out, name)
    print(f"wrote {len(ds)} graphs ({ds.n_classes} classes, {ds.feature_dim}-dim features) "
          f"to {args.out}/{name}_*.txt")
    return 0


def _cmd_run(args) -> int:
    kv = load_config(args.config)
    check_known_keys(kv, SCENARIO_KEYS | DATA_KEYS)
    cfg = scenario_from_mapping(kv, seed_override=args.seed)
    data = _load_dataset(kv)
    result = run_federation(cfg, data)
    write_run_outputs(result, args.out)
    last = result.rounds[-1]
    print(f"rounds={cfg.rounds} clean_acc={_f(last.clean_acc)} "
          f"asr_global={_f(last.asr_global)} wall_time_s={_f(result.wall_time)} out={args.out}")
    return 0


def _cmd_sweep(args) -> int:
    kv = load_config(args.config)
    check_known_keys(kv, SCENARIO_KEYS | DATA_KEYS | SWEEP_KEYS)
    for key in ("sweep_param", "sweep_values"):
        if key not in kv:
            raise ConfigError(f"missing required config key {key!r}")
    base = scenario_from_mapping(kv, seed_override=args.seed)
    param = kv["sweep_param"].strip()
    cast = int if param in ("n_malicious", "n_clients") else float
    try:
        values = tuple(cast(v) for v in kv["sweep_values"].replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"bad sweep_values: {kv['sweep_values']!r}") from None
    spec = SweepSpec(param, values, int(kv.get("replications", "1")), base)
    data = _load_dataset(kv)

    results = run_sweep(spec, data, threads=args.threads)
    out = Path(args.out)
    for r in results:
        if r.run is not None:
            write_run_outputs(r.run, out / "cells" / f"{spec.param}={r.value}_rep{r.replication}")
    atomic_write(out / "sweep.csv", sweep_csv(spec, results))
    aggregates = sweep_summary(spec, results)
    atomic_write(out / "summary.csv", summary_csv(aggregates))
    for a in aggregates:
        print(f"{spec.param}={a.value}: n_ok={a.n_ok} n_failed={a.n_failed} "
              f"asr={_f(a.mean_asr)}±{_f(a.stderr_asr)} "
              f"clean_acc={_f(a.mean_clean_acc)}±{_f(a.stderr_clean_acc)}")
    return 0


def _summarize_rounds_csv(path: Path) -> str | None:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return None
    last = rows[-1]
    peak = max(float(r["asr_global"]) for r in rows)
    return (f"{path.parent.name or '.'}: rounds={len(rows)} "
            f"final_clean_acc={_f(float(last['clean_acc']))} "
            f"final_asr_global={_f(float(last['asr_global']))} peak_asr_global={_f(peak)}")


def _cmd_report(args) -> int:
    out = Path(args.out)
    if not out.is_dir():
        raise ConfigError(f"output directory {out} does not exist")
    found = sorted(out.rglob("rounds.csv"))
    for p in found:
        line = _summarize_rounds_csv(p)
        if line:
            print(line)
    summary = out / "summary.csv"
    if summary.exists():
        print(summary.read_text().rstrip())
    if not found and not summary.exists():
        raise ConfigError(f"no rounds.csv or summary.csv under {out}")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SimError as e:
        print(f"{e.prefix}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
