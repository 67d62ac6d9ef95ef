import dataclasses
import time

import pytest

from fedgnn_backdoor.backdoor import TriggerParams
from fedgnn_backdoor.federation import ScenarioConfig, run_federation
from fedgnn_backdoor.graphs import generate_triangles_dataset

import _acceptance_log


@pytest.fixture(scope="session")
def ds_small():
    """3000 graphs, 10..30 nodes: the dataset behind the trend criteria."""
    return generate_triangles_dataset(3000, (10, 30), seed=0)


@pytest.fixture(scope="session")
def ds_large():
    """3000 graphs, 20..120 nodes: room for a 20-part composed trigger."""
    return generate_triangles_dataset(3000, (20, 120), seed=0)


TREND_CONFIG = ScenarioConfig(
    n_clients=5,
    n_malicious=3,
    attack="dba",
    trigger=TriggerParams(gamma=0.2, rho=0.8, poison_rate=0.2, target_label=0),
    model="gcn",
    rounds=100,
    split_bias=0.5,
    seed=0,
)

TREND_SEEDS = (0, 1, 2, 3, 4)


@pytest.fixture(scope="session")
def trend_runs(ds_small):
    """Five seeds of the distributed attack plus paired attack-free twins.

    Shared by the attack-efficacy, accuracy-drop and determinism checks so the
    expensive federated runs happen once per session.
    """
    t0 = time.perf_counter()
    out = []
    for seed in TREND_SEEDS:
        cfg = dataclasses.replace(TREND_CONFIG, seed=seed)
        attacked = run_federation(cfg, ds_small)
        clean = run_federation(dataclasses.replace(cfg, attack="none"), ds_small)
        out.append((attacked, clean))
    return out, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_log.RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for criterion, ok, detail in sorted(_acceptance_log.RESULTS):
        terminalreporter.write_line(
            f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
        )
