"""Pure-NumPy backend for the hot loops.

Semantics mirror ``isde._core`` (the Cython extension) exactly: kernel sums
accumulate reflection terms in the same lexicographic order, and the pruned
evaluation path skips only terms that are identically zero, so pruned and
unpruned results agree bit for bit.
"""

from __future__ import annotations

import itertools

import numpy as np

from .kernels import kernel_values

# chunk so the (points, samples, coords) broadcast stays around ~32 MB
_CHUNK_BUDGET = 4_000_000


def _sum_products(points: np.ndarray, reflected: np.ndarray, h: float, kernel_id: int) -> np.ndarray:
    """sum_i prod_k K((reflected[i,k] - x[q,k]) / h) for each point row."""
    q, p = points.shape
    m = reflected.shape[0]
    out = np.empty(q, dtype=np.float64)
    step = max(1, _CHUNK_BUDGET // max(1, m * p))
    for lo in range(0, q, step):
        hi = min(q, lo + step)
        u = (reflected[None, :, :] - points[lo:hi, None, :]) / h
        out[lo:hi] = kernel_values(kernel_id, u).prod(axis=2).sum(axis=1)
    return out


def kde_eval(
    points: np.ndarray,
    samples: np.ndarray,
    h: float,
    kernel_id: int,
    mirror: bool,
    prune: bool,
) -> np.ndarray:
    """Plain or mirror-image product-kernel density sums at many points."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    q, p = points.shape
    m = samples.shape[0]
    norm = m * h**p
    if q == 0:
        return np.zeros(0, dtype=np.float64)

    if not mirror:
        return _sum_products(points, samples, h, kernel_id) / norm

    out = np.zeros(q, dtype=np.float64)
    inside = ((points >= 0.0) & (points <= 1.0)).all(axis=1)
    if not inside.any():
        return out
    pts = points[inside]

    digit_choices = []
    for k in range(p):
        digits = []
        if not prune or bool((pts[:, k] <= h).any()):
            digits.append(-1)
        digits.append(0)
        if not prune or bool((pts[:, k] >= 1.0 - h).any()):
            digits.append(1)
        digit_choices.append(digits)

    acc = np.zeros(pts.shape[0], dtype=np.float64)
    for a in itertools.product(*digit_choices):
        if prune:
            mask = np.ones(pts.shape[0], dtype=bool)
            for k, ak in enumerate(a):
                if ak == -1:
                    mask &= pts[:, k] <= h
                elif ak == 1:
                    mask &= pts[:, k] >= 1.0 - h
            sel = np.nonzero(mask)[0]
            if sel.size == 0:
                continue
            sub = pts[sel]
        else:
            sel = None
            sub = pts
        reflected = samples.copy()
        for k, ak in enumerate(a):
            if ak == -1:
                reflected[:, k] = -samples[:, k]
            elif ak == 1:
                reflected[:, k] = 2.0 - samples[:, k]
        term = _sum_products(sub, reflected, h, kernel_id)
        if sel is None:
            acc += term
        else:
            acc[sel] += term
    out[inside] = acc / norm
    return out


def dp_solve(
    d: int,
    block_masks: np.ndarray,
    block_scores: np.ndarray,
    group_offsets: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact set-partition DP over bitmask states.

    ``block_masks`` holds admissible blocks grouped by their lowest feature
    (``group_offsets[f]:group_offsets[f+1]`` is the group for feature ``f``),
    with ``block_scores`` aligned.  Returns, per state mask, the best total
    score, the chosen first block (-1 for the empty state) and the block
    count, with ties broken toward more blocks then lexicographically
    smaller first block.
    """
    n_states = 1 << d
    masks = [int(v) for v in block_masks]
    scores = [float(v) for v in block_scores]
    offsets = [int(v) for v in group_offsets]

    best = np.empty(n_states, dtype=np.float64)
    first = np.full(n_states, -1, dtype=np.int64)
    count = np.zeros(n_states, dtype=np.int32)
    best[0] = 0.0

    bl = best.tolist()
    fl = first.tolist()
    cl = count.tolist()

    for state in range(1, n_states):
        f = (state & -state).bit_length() - 1
        cur_score = 0.0
        cur_first = -1
        cur_count = 0
        for idx in range(offsets[f], offsets[f + 1]):
            s = masks[idx]
            if s & ~state:
                continue
            rest = state ^ s
            cand = scores[idx] + bl[rest]
            ccnt = cl[rest] + 1
            if (
                cur_first == -1
                or cand > cur_score
                or (
                    cand == cur_score
                    and (ccnt > cur_count or (ccnt == cur_count and _lex_less(s, cur_first)))
                )
            ):
                cur_score = cand
                cur_first = s
                cur_count = ccnt
        bl[state] = cur_score
        fl[state] = cur_first
        cl[state] = cur_count

    return (
        np.asarray(bl, dtype=np.float64),
        np.asarray(fl, dtype=np.int64),
        np.asarray(cl, dtype=np.int32),
    )


def _lex_less(a: int, b: int) -> bool:
    if a == b:
        return False
    x = a ^ b
    c = x & -x
    above = ~((c << 1) - 1)
    if a & c:
        return bool(b & above)
    return not bool(a & above)
