"""Marginal density estimators on the unit cube.

Two estimators share one sample store: the plain product-kernel estimator
(which leaks mass outside the cube and is biased at the boundary) and the
mirror-image estimator, which augments every sample with its coordinatewise
reflections

    t -> -t        (below 0)
    t -> t
    t -> 2 - t     (above 1)

and restricts the result to [0, 1]^p.  With a compactly supported kernel and
bandwidth below 1/2 the mirror-image estimator integrates to exactly 1 over
the cube.

Evaluation prunes reflection terms whose kernel support cannot reach the
query point; pruning is exact, so results are bit-identical to the full
3^p-term sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _backend
from .combinatorics import FeatureSubset
from .errors import DataError, ParameterError, StructureError
from .kernels import Kernel, get_kernel

BANDWIDTH_FLOOR = 1e-6
BANDWIDTH_CEILING = 0.5 - 1e-9


@dataclass(frozen=True)
class BandwidthRule:
    """Bandwidth schedule h = scale * m^(-1 / (2 beta + p)).

    ``beta`` is the assumed Hoelder smoothness of the target density (at most
    2 for a second-order kernel); ``scale`` is the free constant in front of
    the rate.
    """

    beta: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta <= 2.0:
            raise ParameterError(f"beta must be in (0, 2], got {self.beta}")
        if not self.scale > 0.0:
            raise ParameterError(f"scale must be positive, got {self.scale}")


def select_bandwidth(rule: BandwidthRule, m: int, subset_size: int) -> float:
    """Rate-optimal bandwidth, clamped into (0, 1/2)."""
    if m < 2:
        raise ParameterError(f"need at least 2 fitting samples, got {m}")
    if subset_size < 1:
        raise ParameterError("subset size must be positive")
    h = rule.scale * float(m) ** (-1.0 / (2.0 * rule.beta + subset_size))
    return min(max(h, BANDWIDTH_FLOOR), BANDWIDTH_CEILING)


@dataclass(frozen=True, eq=False)
class MirrorKdeModel:
    """A fitted marginal estimator: projected samples plus a bandwidth.

    Samples are stored verbatim (no precomputation), so persisted models
    reproduce evaluations exactly.
    """

    subset: FeatureSubset
    bandwidth: float
    kernel: Kernel
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0.0 < self.bandwidth < 0.5:
            raise ParameterError(
                f"bandwidth must lie in (0, 1/2), got {self.bandwidth}"
            )
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != self.subset.size:
            raise StructureError(
                f"samples must be (m, {self.subset.size}), got {samples.shape}"
            )
        _check_unit_range(samples)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    def evaluate(self, x, *, pruned: bool = True):
        """Mirror-image density at ``x``; zero outside the unit cube."""
        pts, single = self._as_points(x)
        vals = _backend.kde_eval(
            pts, self.samples, self.bandwidth, self.kernel.kernel_id, True, pruned
        )
        return float(vals[0]) if single else vals

    def evaluate_plain(self, x):
        """Uncorrected product-kernel density at ``x``, defined on all of R^p."""
        pts, single = self._as_points(x)
        vals = _backend.kde_eval(
            pts, self.samples, self.bandwidth, self.kernel.kernel_id, False, True
        )
        return float(vals[0]) if single else vals

    def log_evaluate(self, x):
        """Natural log of :meth:`evaluate`; -inf where the density is zero."""
        vals = self.evaluate(x)
        with np.errstate(divide="ignore"):
            return np.log(vals) if isinstance(vals, np.ndarray) else float(np.log(vals))

    def _as_points(self, x) -> tuple[np.ndarray, bool]:
        arr = np.asarray(x, dtype=np.float64)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.subset.size:
            raise StructureError(
                f"points must have {self.subset.size} coordinates, got shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise DataError("evaluation points must be finite")
        return np.ascontiguousarray(arr), single


def fit(
    data: np.ndarray,
    subset: FeatureSubset,
    rule: BandwidthRule,
    kernel: Kernel,
) -> MirrorKdeModel:
    """Project ``data`` onto ``subset`` and attach the scheduled bandwidth."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise StructureError(f"data must be a 2-d matrix, got shape {data.shape}")
    if data.shape[0] < 2:
        raise ParameterError(f"need at least 2 fitting samples, got {data.shape[0]}")
    if data.shape[1] != subset.d:
        raise StructureError(
            f"data has {data.shape[1]} columns but the subset lives in d={subset.d}"
        )
    _check_unit_range(data)
    h = select_bandwidth(rule, data.shape[0], subset.size)
    projected = np.ascontiguousarray(data[:, subset.columns()])
    return MirrorKdeModel(subset=subset, bandwidth=h, kernel=kernel, samples=projected)


def model_to_dict(model: MirrorKdeModel) -> dict[str, Any]:
    """JSON-ready form: subset indices, bandwidth, kernel name, raw samples."""
    return {
        "subset": list(model.subset.indices()),
        "d": model.subset.d,
        "bandwidth": model.bandwidth,
        "kernel": model.kernel.name,
        "samples": model.samples.tolist(),
    }


def model_from_dict(payload: dict[str, Any]) -> MirrorKdeModel:
    try:
        subset = FeatureSubset.from_indices(payload["subset"], payload["d"])
        return MirrorKdeModel(
            subset=subset,
            bandwidth=float(payload["bandwidth"]),
            kernel=get_kernel(payload["kernel"]),
            samples=np.asarray(payload["samples"], dtype=np.float64),
        )
    except KeyError as exc:
        raise StructureError(f"model payload missing field {exc}") from None


def _check_unit_range(data: np.ndarray) -> None:
    ok = (data >= 0.0) & (data <= 1.0)
    if not ok.all():
        r, c = np.argwhere(~ok)[0]
        raise DataError(
            f"value {data[r, c]!r} at row {r + 1}, column {c + 1} is outside [0, 1]"
        )
