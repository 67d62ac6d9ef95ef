"""Benchmark the two sparse message-passing backends against each other.

Times the CSR sparse-times-dense product (the simulator's hot kernel) for
both the compiled extension and the numpy fallback across a grid of problem
sizes, then times one full federated round end to end under each backend.

Usage:
    python benchmarks/bench_kernels.py            # kernel microbenchmark
    python benchmarks/bench_kernels.py --round    # plus end-to-end round timing
"""

import argparse
import subprocess
import sys
import time

import numpy as np

from fedgnn_backdoor.kernels import BACKEND, _csr_np

try:
    from fedgnn_backdoor.kernels import _csr_cy
except ImportError:
    _csr_cy = None


def random_csr(rng, n, avg_deg):
    """Random n x n CSR with roughly avg_deg entries per row."""
    counts = rng.poisson(avg_deg, size=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(counts)
    nnz = int(indptr[-1])
    indices = rng.integers(0, n, size=nnz, dtype=np.int64)
    weights = rng.random(nnz)
    return indptr, indices, weights


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernel(args):
    rng = np.random.default_rng(0)
    print(f"active backend: {BACKEND}")
    if _csr_cy is None:
        print("compiled backend unavailable, timing numpy only")
    print(f"{'n':>7} {'avg_deg':>7} {'width':>5} {'numpy_ms':>10} "
          f"{'compiled_ms':>11} {'speedup':>8}")
    for n in args.sizes:
        for width in args.widths:
            indptr, indices, weights = random_csr(rng, n, args.avg_deg)
            dense = rng.random((n, width))
            t_np = time_fn(lambda: _csr_np.csr_matmul(indptr, indices, weights, dense),
                           args.repeats)
            if _csr_cy is not None:
                t_cy = time_fn(lambda: _csr_cy.csr_matmul(indptr, indices, weights, dense),
                               args.repeats)
                out_np = _csr_np.csr_matmul(indptr, indices, weights, dense)
                out_cy = _csr_cy.csr_matmul(indptr, indices, weights, dense)
                assert np.allclose(out_np, out_cy, atol=1e-12), "backends disagree"
                print(f"{n:>7} {args.avg_deg:>7} {width:>5} {1e3 * t_np:>10.3f} "
                      f"{1e3 * t_cy:>11.3f} {t_np / t_cy:>8.2f}x")
            else:
                print(f"{n:>7} {args.avg_deg:>7} {width:>5} {1e3 * t_np:>10.3f} "
                      f"{'-':>11} {'-':>8}")


ROUND_SNIPPET = """
import time
import numpy as np
from fedgnn_backdoor.backdoor import TriggerParams
from fedgnn_backdoor.federation import ScenarioConfig, run_federation
from fedgnn_backdoor.graphs import generate_triangles_dataset
from fedgnn_backdoor.kernels import BACKEND

data = generate_triangles_dataset(1000, (10, 30), seed=0)
cfg = ScenarioConfig(
    n_clients=5, n_malicious=3, attack="dba",
    trigger=TriggerParams(gamma=0.2, rho=0.8, poison_rate=0.2, target_label=0),
    rounds=5, seed=0,
)
t0 = time.perf_counter()
run = run_federation(cfg, data)
dt = time.perf_counter() - t0
print(f"{BACKEND}: {cfg.rounds} rounds in {dt:.2f}s "
      f"({dt / cfg.rounds:.2f}s/round), final checksum {run.rounds[-1].checksum[:12]}")
"""


def bench_round():
    """Time a short federated run under each backend in fresh interpreters."""
    for backend in ("compiled", "numpy"):
        proc = subprocess.run(
            [sys.executable, "-c", ROUND_SNIPPET],
            env={"FEDGNN_BACKDOOR_KERNELS": backend, "PATH": "/usr/bin:/bin"},
            capture_output=True, text=True,
        )
        out = proc.stdout.strip() or proc.stderr.strip()
        print(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    ap.add_argument("--widths", type=int, nargs="+", default=[16, 32])
    ap.add_argument("--avg-deg", type=int, default=6)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--round", action="store_true",
                    help="also time a short federated run under each backend")
    args = ap.parse_args()
    bench_kernel(args)
    if args.round:
        print()
        bench_round()


if __name__ == "__main__":
    main()
