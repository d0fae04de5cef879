"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numbers

import numpy as np
import scipy.sparse as sp

from .opinions import OpinionMatrix


def check_opinions(X) -> OpinionMatrix:
    """Coerce ``X`` to an :class:`OpinionMatrix`.

    Arrays and sparse matrices are read as users x claims with entries in
    {-1, 0, +1}; row ``i`` is user ``i`` and column ``j`` is claim ``j``.
    """
    if isinstance(X, OpinionMatrix):
        return X
    if sp.issparse(X):
        m = sp.coo_matrix(X)
        if m.ndim != 2:
            raise ValueError("opinion matrix must be 2-D")
        data = np.asarray(m.data, dtype=np.float64)
        rows, cols = m.row, m.col
        shape = m.shape
    else:
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"opinion matrix must be 2-D (users x claims), got shape {arr.shape}")
        rows, cols = np.nonzero(arr)
        data = arr[rows, cols]
        shape = arr.shape
    if not np.all(np.isfinite(data)):
        raise ValueError("opinion matrix contains NaN or infinity")
    bad = ~np.isin(data, (-1.0, 1.0))
    if bad.any():
        raise ValueError(f"opinions must be -1, 0 or +1; found {data[bad][0]!r}")
    entries = {(int(u), int(c)): int(x) for u, c, x in zip(rows, cols, data) if x != 0}
    return OpinionMatrix(entries, users=range(shape[0]), claims=range(shape[1]))


def check_probability(value, name: str, *, open_interval: bool = False) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    v = float(value)
    ok = 0.0 < v < 1.0 if open_interval else 0.0 <= v <= 1.0
    if not ok:
        rng = "(0, 1)" if open_interval else "[0, 1]"
        raise ValueError(f"{name} must lie in {rng}, got {v}")
    return v


def check_positive(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool) or not value > 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    return float(value)


def check_claim_vector(values, n_claims: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(n_claims, float(arr))
    if arr.shape != (n_claims,):
        raise ValueError(f"{name} must have one entry per claim ({n_claims}), got shape {arr.shape}")
    if not np.all((arr >= 0) & (arr <= 1)):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr
