"""End-to-end estimation: split, fit marginals, score, select a partition.

Given data on the unit cube, the pipeline splits it into a fitting part W and
a hold-out part Z, fits a mirror-image estimator for every feature subset of
size at most k on W, scores each on Z as a mean log likelihood, and selects
the partition maximising the summed scores with an exact solver.  The result
bundles the selected partition, its block estimators and the full score
table, and is a pure function of (data, config).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .combinatorics import FeaturePartition, FeatureSubset
from .errors import DataError, ParameterError, StructureError
from .kernels import get_kernel
from .mirror_kde import BandwidthRule, MirrorKdeModel, model_from_dict, model_to_dict
from .scoring import ScoreTable, build_score_table, partition_score, table_to_dict
from .solver import DP_MAX_DIMENSION, solve_dp

MIN_TOTAL_ROWS = 4


@dataclass(frozen=True)
class IsdeConfig:
    """User-facing knobs for one pipeline run."""

    k: int
    split_fraction: float = 0.5
    beta: float = 2.0
    kernel: str = "epanechnikov"
    bandwidth_scale: float = 1.0
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ParameterError(
                f"split fraction must lie in (0, 1), got {self.split_fraction}"
            )
        if not 0.0 < self.beta <= 2.0:
            raise ParameterError(f"beta must lie in (0, 2], got {self.beta}")
        if not self.bandwidth_scale > 0:
            raise ParameterError("bandwidth scale must be positive")
        get_kernel(self.kernel)

    def bandwidth_rule(self) -> BandwidthRule:
        return BandwidthRule(beta=self.beta, scale=self.bandwidth_scale)


@dataclass(frozen=True, eq=False)
class IsdeResult:
    """Selected partition, its block estimators, and the evidence behind them."""

    partition: FeaturePartition
    score: float
    models: dict[FeatureSubset, MirrorKdeModel] = field(repr=False)
    score_table: ScoreTable = field(repr=False)
    config: IsdeConfig
    diagnostics: Any = None

    @property
    def d(self) -> int:
        return self.partition.d


def split_data(data: np.ndarray, config: IsdeConfig) -> tuple[np.ndarray, np.ndarray]:
    """Validate the data and cut it into the fitting and hold-out parts.

    With shuffling enabled the permutation is drawn from the config seed; the
    fitting part takes the first ``floor(split_fraction * N)`` rows.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise StructureError(f"data must be a 2-d matrix, got shape {data.shape}")
    n_total, d = data.shape
    if n_total < MIN_TOTAL_ROWS:
        raise ParameterError(f"need at least {MIN_TOTAL_ROWS} rows, got {n_total}")
    if d > DP_MAX_DIMENSION:
        raise ParameterError(f"at most {DP_MAX_DIMENSION} features supported, got {d}")
    if config.k > d:
        raise ParameterError(f"k={config.k} exceeds the number of features {d}")
    _check_unit_cube(data)

    if config.shuffle:
        order = np.random.default_rng(config.seed).permutation(n_total)
        data = data[order]
    m = int(config.split_fraction * n_total)
    if m < 2 or n_total - m < 1:
        raise ParameterError(
            f"split {config.split_fraction} of {n_total} rows leaves too little "
            f"data (fit: {m}, hold-out: {n_total - m})"
        )
    return data[:m], data[m:]


def run(data: np.ndarray, config: IsdeConfig) -> IsdeResult:
    """Run the full pipeline; deterministic given (data, config)."""
    w_split, z_split = split_data(data, config)
    table, models = build_score_table(
        w_split, z_split, config.k, config.bandwidth_rule(), get_kernel(config.kernel)
    )
    partition, _ = solve_dp(table)
    score = partition_score(table, partition)
    if score == -np.inf:
        warnings.warn(
            "selected partition has -inf hold-out score: the estimator assigns "
            "zero density to at least one hold-out point and is degenerate",
            stacklevel=2,
        )
    block_models = {block: models[block] for block in partition.blocks}
    return IsdeResult(
        partition=partition,
        score=score,
        models=block_models,
        score_table=table,
        config=config,
    )


def evaluate_joint(result: IsdeResult, x) -> float | np.ndarray:
    """Density of the selected product estimator; zero outside the unit cube."""
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != result.d:
        raise StructureError(
            f"points must have {result.d} coordinates, got shape {pts.shape}"
        )
    values = np.ones(pts.shape[0], dtype=np.float64)
    for block in result.partition.blocks:
        values *= result.models[block].evaluate(pts[:, block.columns()])
    return float(values[0]) if single else values


def log_evaluate_joint(result: IsdeResult, x) -> float | np.ndarray:
    """Log of :func:`evaluate_joint`; -inf where any block density vanishes."""
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    total = np.zeros(pts.shape[0], dtype=np.float64)
    for block in result.partition.blocks:
        total = total + result.models[block].log_evaluate(pts[:, block.columns()])
    return float(total[0]) if single else total


def rescale_to_unit_cube(data: np.ndarray) -> tuple[np.ndarray, dict[str, list[float]]]:
    """Column-wise min-max map onto [0, 1]; returns the affine map for replay."""
    data = np.asarray(data, dtype=np.float64)
    if not np.isfinite(data).all():
        raise DataError("data contains non-finite values")
    lo = data.min(axis=0)
    hi = data.max(axis=0)
    span = hi - lo
    flat = np.nonzero(span == 0)[0]
    if flat.size:
        raise DataError(f"column {flat[0] + 1} is constant and cannot be rescaled")
    scaled = (data - lo) / span
    return scaled, {"min": lo.tolist(), "max": hi.tolist()}


def result_to_dict(result: IsdeResult, rescale: dict | None = None) -> dict[str, Any]:
    """JSON-ready form of a result; keys are sorted at serialisation time."""
    payload: dict[str, Any] = {
        "partition": result.partition.to_index_lists(),
        "score": result.score,
        "score_table": table_to_dict(result.score_table),
        "config": {
            "k": result.config.k,
            "split_fraction": result.config.split_fraction,
            "beta": result.config.beta,
            "kernel": result.config.kernel,
            "bandwidth_scale": result.config.bandwidth_scale,
            "seed": result.config.seed,
            "shuffle": result.config.shuffle,
        },
        "models": {
            ",".join(map(str, block.indices())): model_to_dict(result.models[block])
            for block in result.partition.blocks
        },
    }
    if rescale is not None:
        payload["rescale"] = rescale
    if result.diagnostics is not None:
        payload["diagnostics"] = result.diagnostics
    return payload


def result_from_dict(payload: dict[str, Any]) -> IsdeResult:
    """Rebuild a result from its JSON form (models, partition, table)."""
    try:
        cfg = payload["config"]
        config = IsdeConfig(
            k=int(cfg["k"]),
            split_fraction=float(cfg["split_fraction"]),
            beta=float(cfg["beta"]),
            kernel=str(cfg["kernel"]),
            bandwidth_scale=float(cfg["bandwidth_scale"]),
            seed=int(cfg["seed"]),
            shuffle=bool(cfg["shuffle"]),
        )
        meta = payload["score_table"]["meta"]
        d = int(meta["d"])
        partition = FeaturePartition.from_index_lists(payload["partition"], d)
        entries = {}
        for key, value in payload["score_table"]["scores"].items():
            subset = FeatureSubset.from_indices([int(t) for t in key.split(",")], d)
            entries[subset] = float(value)
        table = ScoreTable(
            d=d,
            k=int(meta["k"]),
            n=int(meta["n"]),
            m=int(meta["m"]),
            beta=float(meta["beta"]),
            kernel_name=str(meta["kernel"]),
            entries=entries,
        )
        models = {}
        for key, model_payload in payload["models"].items():
            subset = FeatureSubset.from_indices([int(t) for t in key.split(",")], d)
            models[subset] = model_from_dict(model_payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise StructureError(f"malformed result payload: {exc}") from None
    missing = [b for b in partition.blocks if b not in models]
    if missing:
        raise StructureError(
            f"result payload stores no model for partition block {missing[0].indices()}"
        )
    return IsdeResult(
        partition=partition,
        score=float(payload["score"]),
        models=models,
        score_table=table,
        config=config,
        diagnostics=payload.get("diagnostics"),
    )


def _check_unit_cube(data: np.ndarray) -> None:
    ok = (data >= 0.0) & (data <= 1.0)
    if not ok.all():
        r, c = np.argwhere(~ok)[0]
        raise DataError(
            f"value {data[r, c]!r} at row {r + 1}, column {c + 1} is outside "
            "[0, 1]; pass --rescale (CLI) or rescale_to_unit_cube() to map the "
            "data onto the unit cube explicitly"
        )


__all__ = [
    "IsdeConfig",
    "IsdeResult",
    "run",
    "split_data",
    "evaluate_joint",
    "log_evaluate_joint",
    "rescale_to_unit_cube",
    "result_to_dict",
    "result_from_dict",
]
