"""Computable theoretical quantities for the selection and estimation errors.

These are reporting utilities: the envelope constant ``A`` and the rate
constant ``c_k`` are user inputs (the envelope condition is an assumption on
the data-generating density, not something the library verifies), so none of
the outputs is a certified certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .combinatorics import count_subsets
from .errors import ParameterError
from .mirror_kde import MirrorKdeModel


@dataclass(frozen=True)
class BoundParams:
    """Shared parameter bundle for the bound formulas."""

    d: int
    k: int
    n: int
    m: int
    A: float = 1.0
    delta_n: float = 0.05
    delta_m: float = 0.05
    beta: float = 2.0
    c_k: float = 1.0

    def __post_init__(self):
        for name in ("d", "k", "n", "m"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be a positive integer")
        if self.k > self.d:
            raise ParameterError(f"k={self.k} exceeds d={self.d}")
        if not self.A > 0:
            raise ParameterError("A must be positive")
        for name in ("delta_n", "delta_m"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1)")
        if not 0.0 < self.beta <= 2.0:
            raise ParameterError("beta must lie in (0, 2]")
        if not self.c_k > 0:
            raise ParameterError("c_k must be positive")


def bc_envelope(A: float, subset_size: int, hatted: bool = False) -> tuple[float, float]:
    """Density envelope (lower, upper) = exp(-+ c*A*|S|), c=2 for estimators."""
    _check_envelope_args(A, subset_size)
    c = 2.0 if hatted else 1.0
    e = c * A * subset_size
    return math.exp(-e), math.exp(e)


def uc_threshold(A: float, subset_size: int) -> float:
    """Strict cap on the uniform estimation error compatible with the envelope."""
    _check_envelope_args(A, subset_size)
    t = math.exp(-A * subset_size)
    return t * (1.0 - t)


def kl_upper_from_uc(A: float, subset_size: int, eps: float) -> float:
    """KL bound exp(2 A |S|) * eps, valid when eps is below the threshold."""
    _check_envelope_args(A, subset_size)
    if eps < 0:
        raise ParameterError("eps must be nonnegative")
    if eps >= uc_threshold(A, subset_size):
        raise ParameterError(
            f"eps={eps} is not below the uniform-control threshold "
            f"{uc_threshold(A, subset_size)}; the bound is not guaranteed"
        )
    return math.exp(2.0 * A * subset_size) * eps


def selection_bound(params: BoundParams) -> float:
    """High-probability cap on the hold-out selection discrepancy.

    2 d sqrt(2 A k / n) sqrt(log(2 S / delta_n)) where S counts the admissible
    subsets; follows from a Hoeffding bound on each subset log likelihood and
    a union bound over subsets.
    """
    s = count_subsets(params.d, params.k)
    return (
        2.0
        * params.d
        * math.sqrt(2.0 * params.A * params.k / params.n)
        * math.sqrt(math.log(2.0 * s / params.delta_n))
    )


def final_bound(params: BoundParams, p_star_block_count: int) -> float:
    """Total high-probability risk excess: estimation term plus selection term.

    exp(2Ak) sqrt(2) |P| c_k sqrt(log m + log S) m^(-beta/(2 beta + k))
      + 2 d sqrt(log n + log S) sqrt(A k / n)
    """
    if p_star_block_count < 1:
        raise ParameterError("block count must be positive")
    s = count_subsets(params.d, params.k)
    first = (
        math.exp(2.0 * params.A * params.k)
        * math.sqrt(2.0)
        * p_star_block_count
        * params.c_k
        * math.sqrt(math.log(params.m) + math.log(s))
        * float(params.m) ** (-params.beta / (2.0 * params.beta + params.k))
    )
    second = (
        2.0
        * params.d
        * math.sqrt(math.log(params.n) + math.log(s))
        * math.sqrt(params.A * params.k / params.n)
    )
    return first + second


def estimate_bounding_constant(
    models: dict,
    n_probe: int = 4096,
    seed: int = 0,
) -> float:
    """Heuristic envelope constant: max over models of max |log f| / |S|.

    Probes each fitted density on quasi-random interior points.  This is a
    plug-in diagnostic only; it can under-estimate the true constant and is
    never used to certify a bound.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for model in models.values():
        if not isinstance(model, MirrorKdeModel):
            raise ParameterError("models must map subsets to fitted estimators")
        p = model.subset.size
        pts = rng.uniform(0.0, 1.0, size=(n_probe, p))
        with np.errstate(divide="ignore"):
            logs = model.log_evaluate(pts)
        finite = logs[np.isfinite(logs)]
        if finite.size == 0:
            continue
        worst = max(worst, float(np.max(np.abs(finite))) / p)
    return worst


def _check_envelope_args(A: float, subset_size: int) -> None:
    if not A > 0:
        raise ParameterError(f"A must be positive, got {A}")
    if subset_size < 1:
        raise ParameterError(f"subset size must be >= 1, got {subset_size}")
