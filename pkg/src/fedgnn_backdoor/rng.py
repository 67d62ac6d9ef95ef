"""Deterministic random-stream derivation.

Every random decision in the simulator draws from a numpy Generator seeded
by (root seed, subsystem tag, *context ints). Streams are therefore pure
functions of their key and independent of scheduling or call order across
clients/rounds.
"""

from __future__ import annotations

import numpy as np

# Subsystem tags. Values are arbitrary but frozen: changing them changes
# every seeded result.
DATA_SPLIT = 1
CLIENT_SPLIT = 2
MALICIOUS_PICK = 3
INIT = 4
TRIGGER = 5
CLIENT_ROUND = 6
EVAL_POISON = 7
DATASET_GEN = 8


def stream(seed: int, tag: int, *context: int) -> np.random.Generator:
    """Generator for (seed, tag, context...); same key, same stream."""
    return np.random.default_rng([np.uint64(seed), tag, *context])
