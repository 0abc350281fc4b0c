"""Dense symmetric eigendecomposition and spectral filtering.

Eigensystems come back with ascending eigenvalues and orthonormal
eigenvector columns. Filters are scalar gain functions evaluated on the
spectrum; the artificial test filters and the closed-form frequency
responses of the analyzed regularizers live here too.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .graphs import Graph, LaplacianKind, laplacian

__all__ = [
    "NonSymmetricError",
    "DimensionMismatchError",
    "EmptySelectionError",
    "EigenSystem",
    "eig_sym",
    "FilterKind",
    "FilterFn",
    "artificial_filter",
    "ResponseKind",
    "frequency_response",
    "apply_spectral_filter",
    "band_select",
]

SYMMETRY_ATOL = 1e-12


class NonSymmetricError(ValueError):
    """Input matrix is not symmetric within tolerance."""


class DimensionMismatchError(ValueError):
    """Signal and operator dimensions disagree."""


class EmptySelectionError(ValueError):
    """A band selection matched no spectral components."""


@dataclass
class EigenSystem:
    """Eigenvalues in ascending order, eigenvectors as orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def eig_sym(m: np.ndarray) -> EigenSystem:
    """Eigendecomposition of a dense symmetric matrix.

    Deterministic for a fixed input on one platform; eigenvalues ascend and
    U reconstructs the input as U diag(lam) U^T.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSymmetricError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 0.0)
    if float(np.max(np.abs(m - m.T))) > SYMMETRY_ATOL * scale:
        raise NonSymmetricError("matrix is not symmetric within 1e-12")
    eigenvalues, eigenvectors = np.linalg.eigh(m)
    return EigenSystem(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


class FilterKind(Enum):
    HIGH_PASS = "highpass"
    LOW_PASS = "lowpass"
    BAND_PASS = "bandpass"
    BAND_REJECT = "bandreject"
    CUSTOM = "custom"


@dataclass(frozen=True)
class FilterFn:
    """Scalar spectral gain h(lambda), vectorized over numpy arrays."""

    fn: Callable[[np.ndarray], np.ndarray]
    kind: FilterKind = FilterKind.CUSTOM

    def __call__(self, lam) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(lam, dtype=np.float64)), dtype=np.float64)


_ARTIFICIAL = {
    FilterKind.HIGH_PASS: lambda lam: 1.0 - np.exp(-10.0 * lam**2),
    FilterKind.LOW_PASS: lambda lam: np.exp(-10.0 * lam**2),
    FilterKind.BAND_PASS: lambda lam: np.exp(-10.0 * (lam - 1.0) ** 2),
    FilterKind.BAND_REJECT: lambda lam: 1.0 - np.exp(-10.0 * (lam - 1.0) ** 2),
}


def artificial_filter(kind: FilterKind) -> FilterFn:
    """One of the four synthetic target filters on [0, 2]."""
    if kind not in _ARTIFICIAL:
        raise ValueError(f"no artificial filter of kind {kind}")
    return FilterFn(fn=_ARTIFICIAL[kind], kind=kind)


class ResponseKind(Enum):
    GCN = "gcn"
    NETWORK_LASSO = "nl"
    PREG = "preg"
    MADREG = "madreg"
    CLAR_HIGH_PASS = "clar"


_RESPONSES = {
    ResponseKind.GCN: lambda lam: 1.0 - lam,
    ResponseKind.NETWORK_LASSO: lambda lam: 1.0 - lam,
    ResponseKind.PREG: lambda lam: 1.0 - lam**2,
    ResponseKind.MADREG: lambda lam: -((1.0 - lam) ** 3 + (1.0 - lam) ** 7),
    ResponseKind.CLAR_HIGH_PASS: lambda lam: -(1.0 - lam),
}


def frequency_response(kind: ResponseKind) -> FilterFn:
    """Closed-form spectral gain of a propagation or regularization operator."""
    return FilterFn(fn=_RESPONSES[kind], kind=FilterKind.CUSTOM)


def apply_spectral_filter(g: Graph, kind: LaplacianKind, x: np.ndarray, h: FilterFn) -> np.ndarray:
    """Filter a node signal: U diag(h(lam)) U^T x on the chosen Laplacian."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != g.n:
        raise DimensionMismatchError(f"signal must be ({g.n}, d), got {x.shape}")
    es = eig_sym(laplacian(g, kind))
    gains = h(es.eigenvalues)
    u = es.eigenvectors
    return u @ (gains[:, None] * (u.T @ x))


def band_select(es: EigenSystem, x: np.ndarray, mode: str, param) -> np.ndarray:
    """Project a signal onto a band of eigencomponents.

    mode "prefix": param is an eigenvalue threshold; keeps components with
    eigenvalue <= threshold (small slack absorbs eigensolver roundoff).
    mode "window": param is (start, count) into the ascending spectrum.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != es.dim:
        raise DimensionMismatchError(f"signal must be ({es.dim}, d), got {x.shape}")
    if mode == "prefix":
        mask = es.eigenvalues <= float(param) + 1e-9
        idx = np.flatnonzero(mask)
    elif mode == "window":
        start, count = param
        if count > es.dim:
            raise DimensionMismatchError(f"window of {count} exceeds spectrum size {es.dim}")
        idx = np.arange(max(0, int(start)), min(es.dim, int(start) + int(count)))
    else:
        raise ValueError(f"unknown band mode {mode!r}")
    if idx.size == 0:
        raise EmptySelectionError(f"band selection {mode}/{param} matched no components")
    u_sel = es.eigenvectors[:, idx]
    return u_sel @ (u_sel.T @ x)
