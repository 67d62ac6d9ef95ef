"""Evaluation metrics: attack success rate, clean accuracy, the clean-accuracy
drop between paired runs, and Pearson correlation."""

from __future__ import annotations

import dataclasses

import numpy as np

from .backdoor import EvalSet
from .errors import EvaluationError, UndefinedCorrelationError
from .graphs import Graph
from .models import ModelSpec, batch_logits, make_batch
from .params import ParamVector

EVAL_CHUNK = 256


def _predictions(spec: ModelSpec, params: ParamVector, graphs: list[Graph]) -> np.ndarray:
    """Predicted class per graph; argmax ties resolve to the lowest class index."""
    preds = []
    for lo in range(0, len(graphs), EVAL_CHUNK):
        logits = batch_logits(spec, params, make_batch(graphs[lo:lo + EVAL_CHUNK], spec.kind))
        preds.append(np.argmax(logits, axis=1))
    return np.concatenate(preds)


def attack_success_rate(spec: ModelSpec, params: ParamVector, eval_set: EvalSet) -> float:
    """Fraction of trigger-embedded graphs pushed to the target class."""
    if not eval_set.graphs:
        raise EvaluationError("empty evaluation set")
    preds = _predictions(spec, params, eval_set.graphs)
    return float(np.mean(preds == eval_set.target_label))


def clean_accuracy(spec: ModelSpec, params: ParamVector, test: list[Graph]) -> float:
    """Top-1 accuracy on untriggered graphs."""
    if not test:
        raise EvaluationError("empty test set")
    preds = _predictions(spec, params, test)
    labels = np.array([g.label for g in test])
    return float(np.mean(preds == labels))


def cad(attacked_run, clean_run) -> float:
    """Clean-accuracy drop: the attack-free run's final clean accuracy minus
    the attacked run's. Both runs must share every config field except the
    attack mode."""
    a = dataclasses.replace(attacked_run.config, attack="none")
    b = dataclasses.replace(clean_run.config, attack="none")
    if a != b:
        raise EvaluationError("runs differ in more than the attack mode")
    return clean_run.final_clean_acc - attacked_run.final_clean_acc


def pearson_cc(xs, ys) -> float:
    """Pearson correlation coefficient of two equal-length series."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise EvaluationError("series must be 1-d and of equal length")
    if x.shape[0] < 2:
        raise EvaluationError("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(dx @ dx))
    sy = float(np.sqrt(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("a series has zero variance")
    return float((dx @ dy) / (sx * sy))
