import numpy as np

from .errors import DomainError, NotSymmetric


def as_matrix(x, name="matrix"):
    """Return ``x`` as a finite 2-D float64 array (copied only if needed)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DomainError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DomainError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def as_vector(x, name="vector"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise DomainError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def check_wide(Y, name="Y"):
    """Require a p x n matrix with p <= n."""
    Y = as_matrix(Y, name)
    p, n = Y.shape
    if p > n:
        raise DomainError(f"{name} has p={p} rows > n={n} columns")
    return Y


def check_symmetric(S, tol=1e-10, name="S"):
    S = as_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise NotSymmetric(f"{name} is not square: {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > tol * scale:
        raise NotSymmetric(f"{name} is not symmetric within {tol:g}")
    return S


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
