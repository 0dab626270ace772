"""Feature subsets and partitions, with enumeration and counting utilities.

Subsets are bitmasks over ``d`` features (bit ``i`` is feature ``i + 1``;
external serialisation is always 1-based).  Partitions are kept in canonical
form: blocks sorted by their smallest feature index, so two equal partitions
compare equal structurally.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, Sequence

from .errors import ParameterError, StructureError

MAX_SUBSET_DIMENSION = 24
MAX_PARTITION_DIMENSION = 20


@dataclass(frozen=True, order=True)
class FeatureSubset:
    """A nonempty set of features encoded as a bitmask over ``d`` positions."""

    mask: int
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"dimension must be positive, got {self.d}")
        if self.mask <= 0:
            raise StructureError("feature subset must be nonempty")
        if self.mask >> self.d:
            raise StructureError(
                f"mask {bin(self.mask)} has bits beyond dimension {self.d}"
            )

    @classmethod
    def from_indices(cls, indices: Iterable[int], d: int) -> "FeatureSubset":
        """Build from 1-based feature indices."""
        mask = 0
        for i in indices:
            if not 1 <= i <= d:
                raise StructureError(f"feature index {i} outside 1..{d}")
            mask |= 1 << (i - 1)
        return cls(mask, d)

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def indices(self) -> tuple[int, ...]:
        """1-based feature indices in ascending order."""
        return tuple(i + 1 for i in range(self.d) if self.mask >> i & 1)

    def columns(self) -> tuple[int, ...]:
        """0-based column positions in ascending order."""
        return tuple(i for i in range(self.d) if self.mask >> i & 1)

    def __repr__(self):
        return f"FeatureSubset({{{','.join(map(str, self.indices()))}}}, d={self.d})"


@dataclass(frozen=True)
class FeaturePartition:
    """Disjoint feature subsets covering all ``d`` features.

    Construction validates disjointness and coverage; block order is kept as
    given so that :func:`canonicalize` has something to do.  Everything this
    package produces is already canonical.
    """

    blocks: tuple[FeatureSubset, ...]

    def __post_init__(self):
        if not self.blocks:
            raise StructureError("partition needs at least one block")
        d = self.blocks[0].d
        union = 0
        for b in self.blocks:
            if b.d != d:
                raise StructureError("blocks disagree on the dimension")
            if union & b.mask:
                raise StructureError("partition blocks overlap")
            union |= b.mask
        if union != (1 << d) - 1:
            raise StructureError("partition blocks do not cover all features")

    @classmethod
    def from_index_lists(cls, lists: Sequence[Sequence[int]], d: int) -> "FeaturePartition":
        return canonicalize([FeatureSubset.from_indices(ix, d) for ix in lists])

    @property
    def d(self) -> int:
        return self.blocks[0].d

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    @property
    def max_block_size(self) -> int:
        return max(b.size for b in self.blocks)

    def is_canonical(self) -> bool:
        keys = [min(b.columns()) for b in self.blocks]
        return keys == sorted(keys)

    def to_index_lists(self) -> list[list[int]]:
        """Serialised form: sorted lists of sorted 1-based indices."""
        return [list(b.indices()) for b in canonicalize(self).blocks]

    def sort_key(self) -> tuple[tuple[int, ...], ...]:
        """Lexicographic key of the canonical form, used for tie-breaking."""
        return tuple(b.indices() for b in canonicalize(self).blocks)

    def __repr__(self):
        return f"FeaturePartition({self.to_index_lists()})"


def canonicalize(
    partition: FeaturePartition | Iterable[FeatureSubset],
) -> FeaturePartition:
    """Sort blocks by their smallest feature; validates disjoint coverage.

    Idempotent, and accepts either a partition or a raw block iterable.
    """
    blocks = partition.blocks if isinstance(partition, FeaturePartition) else tuple(partition)
    ordered = tuple(sorted(blocks, key=lambda b: b.mask & -b.mask))
    return FeaturePartition(ordered)


def count_subsets(d: int, k: int) -> int:
    """Number of nonempty feature subsets of size at most ``k``."""
    _check_dk(d, k, MAX_SUBSET_DIMENSION)
    return sum(comb(d, j) for j in range(1, k + 1))


def enumerate_subsets(d: int, k: int) -> list[FeatureSubset]:
    """All nonempty subsets of cardinality <= k, in ascending mask order."""
    _check_dk(d, k, MAX_SUBSET_DIMENSION)
    return [
        FeatureSubset(mask, d)
        for mask in range(1, 1 << d)
        if mask.bit_count() <= k
    ]


def count_partitions(d: int, k: int) -> int:
    """Number of partitions of ``d`` features into blocks of size <= k.

    Follows the recurrence ``P(n) = sum_j C(n-1, j-1) P(n-j)`` over feasible
    sizes ``j`` of the block containing the first element, with ``P(0) = 1``.
    """
    if d == 0:
        return 1
    _check_dk(d, k, MAX_PARTITION_DIMENSION)

    @lru_cache(maxsize=None)
    def rec(n: int) -> int:
        if n == 0:
            return 1
        return sum(comb(n - 1, j - 1) * rec(n - j) for j in range(1, min(k, n) + 1))

    return rec(d)


def enumerate_partitions(d: int, k: int) -> Iterator[FeaturePartition]:
    """Yield every partition with blocks of size <= k, in canonical form.

    Recursion branches on the block containing the lowest uncovered feature,
    so each partition is produced exactly once and already sorted.
    """
    _check_dk(d, k, MAX_PARTITION_DIMENSION)
    full = (1 << d) - 1

    def blocks_over(uncovered: int) -> Iterator[int]:
        low = uncovered & -uncovered
        rest = uncovered ^ low
        others = [1 << i for i in range(d) if rest >> i & 1]

        def grow(mask: int, start: int, room: int) -> Iterator[int]:
            yield mask
            if room == 0:
                return
            for j in range(start, len(others)):
                yield from grow(mask | others[j], j + 1, room - 1)

        yield from grow(low, 0, k - 1)

    def rec(uncovered: int, acc: list[FeatureSubset]) -> Iterator[FeaturePartition]:
        if uncovered == 0:
            yield FeaturePartition(tuple(acc))
            return
        for mask in blocks_over(uncovered):
            acc.append(FeatureSubset(mask, d))
            yield from rec(uncovered ^ mask, acc)
            acc.pop()

    yield from rec(full, [])


def block_lex_less(a: int, b: int) -> bool:
    """Strict lexicographic order of two block masks as sorted index tuples."""
    if a == b:
        return False
    x = a ^ b
    c = x & -x
    above = ~((c << 1) - 1)
    if a & c:
        return bool(b & above)
    return not bool(a & above)


def _check_dk(d: int, k: int, cap: int) -> None:
    if not 1 <= k <= d:
        raise ParameterError(f"need 1 <= k <= d, got k={k}, d={d}")
    if d > cap:
        raise ParameterError(f"dimension {d} exceeds the supported cap {cap}")
