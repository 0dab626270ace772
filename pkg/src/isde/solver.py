"""Exact maximisation of the partition score over all admissible partitions.

Two engines return the same optimum value:

* :func:`solve_dp` — dynamic programming over subset bitmasks; ``2^d`` memory,
  the default for ``d <= 20``.
* :func:`solve_branch_and_bound` — depth-first search usable up to ``d <= 24``.

Ties (score-equal partitions) break toward more blocks, then the
lexicographically smallest canonical form, deterministically in both engines.

The branch-and-bound upper bound is the amortised per-feature score: writing
``amort(i) = max over admissible blocks S containing i of score(S)/|S|``, any
completion Q of an uncovered set U satisfies

    sum_{S in Q} score(S) = sum_{S in Q} sum_{i in S} score(S)/|S|
                         <= sum_{i in U} amort(i)

because each feature of U appears in exactly one block of Q.  The bound never
underestimates the best completion, so pruning on it is admissible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _backend
from .combinatorics import (
    FeaturePartition,
    FeatureSubset,
    block_lex_less,
    enumerate_subsets,
)
from .errors import ParameterError
from .scoring import ScoreTable, partition_score

DP_MAX_DIMENSION = 20
BNB_MAX_DIMENSION = 24


def solve_dp(table: ScoreTable) -> tuple[FeaturePartition, float]:
    """Optimal partition by bitmask DP; exact for any complete table."""
    if table.d > DP_MAX_DIMENSION:
        raise ParameterError(
            f"DP solver supports d <= {DP_MAX_DIMENSION}, got {table.d}; "
            "use solve_branch_and_bound"
        )
    best, first, _ = _run_dp(table)
    partition = _walk_chain(first, table.d)
    return partition, partition_score(table, partition)


def dump_dp_table(table: ScoreTable, path: str | None = None) -> dict[str, dict]:
    """Debug dump: per state mask, the best score and chosen first block."""
    best, first, _ = _run_dp(table)
    payload = {
        str(mask): {"score": float(best[mask]), "first_block": int(first[mask])}
        for mask in range(1, 1 << table.d)
    }
    if path is not None:
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True)
    return payload


def _run_dp(table: ScoreTable):
    masks: list[int] = []
    scores: list[float] = []
    offsets = [0]
    by_min: dict[int, list[FeatureSubset]] = {}
    for subset in enumerate_subsets(table.d, table.k):
        low = (subset.mask & -subset.mask).bit_length() - 1
        by_min.setdefault(low, []).append(subset)
    for f in range(table.d):
        for subset in by_min.get(f, []):
            masks.append(subset.mask)
            scores.append(table.score(subset))
        offsets.append(len(masks))
    return _backend.dp_solve(
        table.d,
        np.asarray(masks, dtype=np.int64),
        np.asarray(scores, dtype=np.float64),
        np.asarray(offsets, dtype=np.int64),
    )


def _walk_chain(first: np.ndarray, d: int) -> FeaturePartition:
    blocks = []
    state = (1 << d) - 1
    while state:
        mask = int(first[state])
        blocks.append(FeatureSubset(mask, d))
        state ^= mask
    return FeaturePartition(tuple(blocks))


@dataclass
class _Incumbent:
    blocks: tuple[int, ...]
    score: float
    key: tuple


def solve_branch_and_bound(table: ScoreTable) -> tuple[FeaturePartition, float]:
    """Optimal partition by depth-first branch and bound.

    Branches on blocks containing the lowest uncovered feature; prunes only
    branches whose amortised bound falls strictly below the incumbent, so
    score ties are fully explored and broken by the same rule as the DP.
    """
    d = table.d
    if d > BNB_MAX_DIMENSION:
        raise ParameterError(
            f"branch and bound supports d <= {BNB_MAX_DIMENSION}, got {d}"
        )
    full = (1 << d) - 1

    by_min: dict[int, list[tuple[float, int]]] = {f: [] for f in range(d)}
    amort = [-np.inf] * d
    for subset in enumerate_subsets(d, table.k):
        score = table.score(subset)
        low = (subset.mask & -subset.mask).bit_length() - 1
        by_min[low].append((score, subset.mask))
        per_feature = score / subset.size
        for col in subset.columns():
            if per_feature > amort[col]:
                amort[col] = per_feature
    for f in range(d):
        by_min[f].sort(key=lambda item: (-item[0], item[1]))

    def bound(uncovered: int) -> float:
        total = 0.0
        u = uncovered
        while u:
            low = u & -u
            total += amort[low.bit_length() - 1]
            u ^= low
        return total

    singletons = tuple(1 << i for i in range(d))
    incumbent = _Incumbent(
        blocks=singletons,
        score=_chain_score(table, singletons, d),
        key=_solution_key(table, singletons, d),
    )

    def dfs(uncovered: int, acc: list[int], acc_score: float) -> None:
        if uncovered == 0:
            blocks = tuple(acc)
            key = _solution_key(table, blocks, d)
            if key > incumbent.key:
                incumbent.blocks = blocks
                incumbent.score = _chain_score(table, blocks, d)
                incumbent.key = key
            return
        if acc_score + bound(uncovered) < incumbent.score:
            return
        f = (uncovered & -uncovered).bit_length() - 1
        for score, mask in by_min[f]:
            if mask & ~uncovered:
                continue
            acc.append(mask)
            dfs(uncovered ^ mask, acc, acc_score + score)
            acc.pop()

    dfs(full, [], 0.0)
    partition = FeaturePartition(tuple(FeatureSubset(m, d) for m in incumbent.blocks))
    return partition, partition_score(table, partition)


def _chain_score(table: ScoreTable, blocks: tuple[int, ...], d: int) -> float:
    total = 0.0
    for mask in sorted(blocks, key=lambda m: m & -m):
        total += table.score(FeatureSubset(mask, d))
    return total


def _solution_key(table: ScoreTable, blocks: tuple[int, ...], d: int):
    """Orderable key realising the tie-break: score, block count, lex form."""
    ordered = sorted(blocks, key=lambda m: m & -m)
    lex = tuple(FeatureSubset(m, d).indices() for m in ordered)
    return (_chain_score(table, blocks, d), len(blocks), _NegatedLex(lex))


class _NegatedLex:
    """Wrapper making lexicographically smaller tuples compare greater."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __eq__(self, other):
        return self.value == other.value

    def __gt__(self, other):
        return self.value < other.value

    def __lt__(self, other):
        return self.value > other.value


__all__ = [
    "solve_dp",
    "solve_branch_and_bound",
    "dump_dp_table",
    "block_lex_less",
    "DP_MAX_DIMENSION",
    "BNB_MAX_DIMENSION",
]
