"""Hold-out log-likelihood scores for every feature subset.

For each subset the estimator is fitted on the first split and scored on the
second as the mean hold-out log density.  A zero density at any hold-out
point makes the score -inf; such blocks still flow through the solver but
lose against any finite alternative.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .combinatorics import FeaturePartition, FeatureSubset, enumerate_subsets
from .errors import ParameterError, StructureError
from .kernels import Kernel
from .mirror_kde import BandwidthRule, MirrorKdeModel, fit

THREADS_ENV_VAR = "ISDE_THREADS"


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Complete map subset -> mean hold-out log likelihood."""

    d: int
    k: int
    n: int
    m: int
    beta: float
    kernel_name: str
    entries: dict[FeatureSubset, float] = field(repr=False)

    def __post_init__(self):
        expected = enumerate_subsets(self.d, self.k)
        if set(self.entries) != set(expected):
            raise StructureError(
                f"score table must cover all {len(expected)} subsets of size <= {self.k}"
            )
        for subset, score in self.entries.items():
            if math.isnan(score):
                raise StructureError(f"score for {subset} is NaN")

    def score(self, subset: FeatureSubset) -> float:
        try:
            return self.entries[subset]
        except KeyError:
            raise StructureError(f"no score for {subset}") from None


def score_subset(model: MirrorKdeModel, holdout: np.ndarray) -> float:
    """Mean log density of the model over the projected hold-out rows."""
    holdout = np.asarray(holdout, dtype=np.float64)
    if holdout.ndim != 2:
        raise StructureError(f"hold-out must be a 2-d matrix, got shape {holdout.shape}")
    if holdout.shape[0] < 1:
        raise ParameterError("hold-out split is empty")
    if holdout.shape[1] == model.subset.d:
        projected = holdout[:, model.subset.columns()]
    elif holdout.shape[1] == model.subset.size:
        projected = holdout
    else:
        raise StructureError(
            f"hold-out has {holdout.shape[1]} columns; expected {model.subset.d} "
            f"(full) or {model.subset.size} (projected)"
        )
    return float(np.mean(model.log_evaluate(projected)))


def build_score_table(
    w_split: np.ndarray,
    z_split: np.ndarray,
    k: int,
    rule: BandwidthRule,
    kernel: Kernel,
    max_workers: int | None = None,
) -> tuple[ScoreTable, dict[FeatureSubset, MirrorKdeModel]]:
    """Fit on ``w_split`` and score on ``z_split`` for every admissible subset.

    Subsets are processed on a thread pool (the compiled core releases the
    GIL); the table content is a pure function of the inputs regardless of
    worker count.  ``ISDE_THREADS`` caps the pool when ``max_workers`` is not
    given.
    """
    w = np.asarray(w_split, dtype=np.float64)
    z = np.asarray(z_split, dtype=np.float64)
    if w.ndim != 2 or z.ndim != 2:
        raise StructureError("both splits must be 2-d matrices")
    if w.shape[0] < 2 or z.shape[0] < 1:
        raise ParameterError(
            f"splits too small: fitting needs >= 2 rows (got {w.shape[0]}), "
            f"scoring needs >= 1 (got {z.shape[0]})"
        )
    if w.shape[1] != z.shape[1]:
        raise StructureError(
            f"splits disagree on dimension: {w.shape[1]} vs {z.shape[1]}"
        )
    d = w.shape[1]
    subsets = enumerate_subsets(d, k)

    def job(subset: FeatureSubset) -> tuple[MirrorKdeModel, float]:
        model = fit(w, subset, rule, kernel)
        return model, score_subset(model, z)

    workers = max_workers if max_workers is not None else _default_workers()
    if workers > 1 and len(subsets) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, subsets))
    else:
        results = [job(s) for s in subsets]

    models = {s: model for s, (model, _) in zip(subsets, results)}
    entries = {s: score for s, (_, score) in zip(subsets, results)}
    table = ScoreTable(
        d=d,
        k=k,
        n=z.shape[0],
        m=w.shape[0],
        beta=rule.beta,
        kernel_name=kernel.name,
        entries=entries,
    )
    return table, models


def partition_score(table: ScoreTable, partition: FeaturePartition) -> float:
    """Total score of a partition: left-fold sum over canonical blocks."""
    total = 0.0
    for block in sorted(partition.blocks, key=lambda b: b.mask & -b.mask):
        total += table.score(block)
    return total


def table_to_dict(table: ScoreTable) -> dict[str, Any]:
    """JSON-ready export keyed by comma-joined 1-based indices."""
    return {
        "meta": {
            "d": table.d,
            "k": table.k,
            "n": table.n,
            "m": table.m,
            "beta": table.beta,
            "kernel": table.kernel_name,
        },
        "scores": {
            ",".join(map(str, s.indices())): table.entries[s]
            for s in enumerate_subsets(table.d, table.k)
        },
    }


def _default_workers() -> int:
    env = os.environ.get(THREADS_ENV_VAR, "").strip()
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ParameterError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from None
        if workers < 1:
            raise ParameterError(f"{THREADS_ENV_VAR} must be >= 1, got {workers}")
        return workers
    return min(32, os.cpu_count() or 1)
