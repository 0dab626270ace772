"""One-dimensional smoothing kernels and their tensor products.

All kernels are symmetric probability densities supported on [-1, 1] with
vanishing first moment, so they qualify as second-order kernels for density
estimation on a bounded domain.  Values at |x| = 1 are defined as 0 for every
kind, including the box kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ParameterError

EPANECHNIKOV_ID = 0
TRIANGULAR_ID = 1
BOX_ID = 2


def _epanechnikov_values(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _triangular_values(u: np.ndarray) -> np.ndarray:
    a = np.abs(u)
    return np.where(a <= 1.0, 1.0 - a, 0.0)


def _box_values(u: np.ndarray) -> np.ndarray:
    return 0.5 * (np.abs(u) < 1.0)


_VALUE_FUNCS = {
    EPANECHNIKOV_ID: _epanechnikov_values,
    TRIANGULAR_ID: _triangular_values,
    BOX_ID: _box_values,
}


def kernel_values(kernel_id: int, u: np.ndarray) -> np.ndarray:
    """Vectorised kernel evaluation, shared with the pure-Python backend."""
    return _VALUE_FUNCS[kernel_id](np.asarray(u, dtype=np.float64))


@dataclass(frozen=True)
class Kernel:
    """A smoothing kernel with precomputed norms.

    ``sup_norm`` is the maximum of the kernel and ``derivative_sup_norm`` the
    (almost-everywhere) maximum of its derivative; both enter variance-side
    constants but are not used numerically during estimation.
    """

    name: str
    kernel_id: int
    sup_norm: float
    derivative_sup_norm: float

    def evaluate(self, x: float) -> float:
        """Kernel value at a scalar point; NaN signals non-finite input."""
        x = float(x)
        if not math.isfinite(x):
            return math.nan
        return float(kernel_values(self.kernel_id, np.float64(x)))

    def product(self, u: Iterable[float]) -> float:
        """Product kernel over a coordinate vector; zero if any |u_j| >= 1."""
        arr = np.asarray(list(u) if not isinstance(u, np.ndarray) else u, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ParameterError("product kernel needs a nonempty 1-d vector")
        if not np.isfinite(arr).all():
            return math.nan
        return float(np.prod(kernel_values(self.kernel_id, arr)))


EPANECHNIKOV = Kernel("epanechnikov", EPANECHNIKOV_ID, sup_norm=0.75, derivative_sup_norm=1.5)
TRIANGULAR = Kernel("triangular", TRIANGULAR_ID, sup_norm=1.0, derivative_sup_norm=1.0)
BOX = Kernel("box", BOX_ID, sup_norm=0.5, derivative_sup_norm=0.0)

KERNELS = {k.name: k for k in (EPANECHNIKOV, TRIANGULAR, BOX)}


def get_kernel(name: str) -> Kernel:
    """Look a kernel up by its configuration name."""
    try:
        return KERNELS[name.strip().lower()]
    except KeyError:
        raise ParameterError(
            f"unknown kernel {name!r}; choose one of {sorted(KERNELS)}"
        ) from None


def product_kernel(kernel: Kernel, u: Iterable[float]) -> float:
    """Free-function alias for :meth:`Kernel.product`."""
    return kernel.product(u)
