"""Risk decomposition against a known synthetic truth.

The loss of the fitted product estimator decomposes into three interpretable
parts:

* a structure bias — the loss of the best partition-constrained projection of
  the truth itself;
* an estimation part — the summed marginal losses on the blocks of that best
  structure;
* a selection discrepancy — the gap, between population and hold-out means,
  of the score difference of the population-best and the selected partition.

The sum of the three parts upper-bounds the total loss.  With a
Gaussian-copula truth the bias is exact (closed form); the remaining terms
are Monte-Carlo estimates with standard errors, and the decomposition
inequality is checked within combined Monte-Carlo error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .combinatorics import FeaturePartition, enumerate_partitions
from .errors import ParameterError
from .gaussian import GaussianCopulaDensity
from .kernels import get_kernel
from .pipeline import IsdeConfig, IsdeResult, split_data
from .scoring import build_score_table, partition_score
from .solver import solve_dp

MAX_EXHAUSTIVE_DIMENSION = 10


@dataclass(frozen=True)
class MonteCarloKl:
    """Monte-Carlo estimate of a KL divergence with its standard error."""

    estimate: float
    std_error: float
    n_used: int
    n_failed: int

    @property
    def degenerate(self) -> bool:
        """True when some sampled points hit zero estimated density."""
        return self.n_failed > 0


def monte_carlo_kl(
    truth,
    estimate_log_pdf: Callable[[np.ndarray], np.ndarray],
    n_mc: int,
    seed: int,
) -> MonteCarloKl:
    """Estimate KL(truth || estimate) by sampling from the truth.

    ``truth`` must expose ``sample(n, rng)`` and ``log_pdf(points)``.  Points
    where the estimate has zero density (log ratio +inf) are excluded and
    counted as failures.
    """
    if n_mc < 100:
        raise ParameterError(f"need at least 100 Monte-Carlo points, got {n_mc}")
    rng = np.random.default_rng(seed)
    points = truth.sample(n_mc, rng)
    values = np.asarray(truth.log_pdf(points)) - np.asarray(estimate_log_pdf(points))
    finite = np.isfinite(values)
    used = values[finite]
    n_failed = int(n_mc - used.size)
    if used.size == 0:
        return MonteCarloKl(np.inf, np.inf, 0, n_failed)
    mean = float(np.mean(used))
    se = float(np.std(used, ddof=1) / np.sqrt(used.size)) if used.size > 1 else np.inf
    return MonteCarloKl(mean, se, int(used.size), n_failed)


@dataclass(frozen=True)
class RiskDecompositionReport:
    """All terms of the decomposition, with Monte-Carlo errors where relevant.

    ``margin`` estimates (bias + estimation + selection) - total_loss from
    pointwise differences on the shared Monte-Carlo sample, so its standard
    error accounts for correlations between the terms; ``inequality_ok``
    checks margin >= -3 margin_se.
    """

    selected_partition: FeaturePartition
    population_partition: FeaturePartition
    best_structure: FeaturePartition
    bias: float
    estimation: float
    estimation_se: float
    selection: float
    selection_se: float
    total_loss: float
    total_loss_se: float
    margin: float
    margin_se: float
    inequality_ok: bool
    mc_failures: int

    def to_dict(self) -> dict:
        return {
            "selected_partition": self.selected_partition.to_index_lists(),
            "population_partition": self.population_partition.to_index_lists(),
            "best_structure": self.best_structure.to_index_lists(),
            "bias": self.bias,
            "estimation": self.estimation,
            "estimation_se": self.estimation_se,
            "selection": self.selection,
            "selection_se": self.selection_se,
            "total_loss": self.total_loss,
            "total_loss_se": self.total_loss_se,
            "margin": self.margin,
            "margin_se": self.margin_se,
            "inequality_ok": self.inequality_ok,
            "mc_failures": self.mc_failures,
        }


def risk_decomposition_report(
    truth: GaussianCopulaDensity,
    config: IsdeConfig,
    n_mc: int,
    n_data: int,
) -> RiskDecompositionReport:
    """Draw data from the truth, fit, select, and decompose the loss.

    Deterministic given (truth, config, n_mc, n_data): the data sample, the
    Monte-Carlo sample and the pipeline all derive from ``config.seed``.
    Exhaustive partition searches cap the dimension at
    ``MAX_EXHAUSTIVE_DIMENSION``.
    """
    d = truth.d
    if d > MAX_EXHAUSTIVE_DIMENSION:
        raise ParameterError(
            f"exhaustive oracle search needs d <= {MAX_EXHAUSTIVE_DIMENSION}, got {d}"
        )
    if n_mc < 100:
        raise ParameterError(f"need at least 100 Monte-Carlo points, got {n_mc}")
    seeds = np.random.default_rng(config.seed).integers(0, 2**63 - 1, size=2)
    data = truth.sample(n_data, np.random.default_rng(int(seeds[0])))

    w_split, z_split = split_data(data, config)
    table, models = build_score_table(
        w_split, z_split, config.k, config.bandwidth_rule(), get_kernel(config.kernel)
    )
    selected, _ = solve_dp(table)
    result = IsdeResult(
        partition=selected,
        score=partition_score(table, selected),
        models={b: models[b] for b in selected.blocks},
        score_table=table,
        config=config,
    )
    return _decompose(truth, result, models, int(seeds[1]), n_mc)


def _decompose(truth, result, models, mc_seed, n_mc) -> RiskDecompositionReport:
    d = truth.d
    config = result.config
    table = result.score_table
    selected = result.partition

    partitions = list(enumerate_partitions(d, config.k))
    projection_loss = {p: truth.kl_projection(p) for p in partitions}
    best_structure = min(
        partitions,
        key=lambda p: (projection_loss[p], -p.block_count, p.sort_key()),
    )
    bias = projection_loss[best_structure]

    mc_points = truth.sample(n_mc, np.random.default_rng(mc_seed))
    truth_logs = truth.log_pdf(mc_points)
    block_logs = {s: models[s].log_evaluate(mc_points[:, s.columns()]) for s in models}

    # population-best combination of the fitted marginals, by exhaustive search
    population_scores = {s: float(np.mean(block_logs[s])) for s in models}
    population_partition = max(
        partitions,
        key=lambda p: (
            sum(population_scores[b] for b in p.blocks),
            p.block_count,
            _NegLex(p.sort_key()),
        ),
    )

    def partition_logs(partition: FeaturePartition) -> np.ndarray:
        total = np.zeros(n_mc)
        for block in partition.blocks:
            total = total + block_logs[block]
        return total

    est_values = np.zeros(n_mc)
    for block in best_structure.blocks:
        marginal_logs = truth.marginal(block).log_pdf(mc_points[:, block.columns()])
        est_values = est_values + (marginal_logs - block_logs[block])

    sel_values = partition_logs(population_partition) - partition_logs(selected)
    holdout_gap = partition_score(table, population_partition) - partition_score(
        table, selected
    )

    loss_values = truth_logs - partition_logs(selected)
    margin_values = bias + est_values + sel_values - loss_values

    finite = np.isfinite(est_values) & np.isfinite(sel_values) & np.isfinite(loss_values)
    n_failed = int(n_mc - int(finite.sum()))

    def mean_se(values: np.ndarray) -> tuple[float, float]:
        vals = values[finite]
        if vals.size < 2:
            return np.inf, np.inf
        return (
            float(np.mean(vals)),
            float(np.std(vals, ddof=1) / np.sqrt(vals.size)),
        )

    estimation, estimation_se = mean_se(est_values)
    sel_pop, sel_se = mean_se(sel_values)
    selection = sel_pop - float(holdout_gap)
    total_loss, total_loss_se = mean_se(loss_values)
    margin_mean, margin_se = mean_se(margin_values)
    margin_mean -= float(holdout_gap)

    return RiskDecompositionReport(
        selected_partition=selected,
        population_partition=population_partition,
        best_structure=best_structure,
        bias=bias,
        estimation=estimation,
        estimation_se=estimation_se,
        selection=selection,
        selection_se=sel_se,
        total_loss=total_loss,
        total_loss_se=total_loss_se,
        margin=margin_mean,
        margin_se=margin_se,
        inequality_ok=bool(margin_mean >= -3.0 * margin_se),
        mc_failures=n_failed,
    )


class _NegLex:
    """Reverses tuple order so lexicographically smaller keys win a max()."""

    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return self.v > other.v

    def __eq__(self, other):
        return self.v == other.v
