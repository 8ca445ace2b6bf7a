"""Log-volumes of pinned simplices and linear images of convex bodies.

Everything stays in log space; p! is only ever seen as gammaln(p + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._validation import as_matrix, check_wide
from .errors import DomainError, SingularM
from .linalg import EPS, log_det_gram

BODY_KINDS = ("StandardSimplex", "UnitCube", "SymmetricCube", "CrossPolytope", "UnitBall")


@dataclass(frozen=True)
class ConvexBodyKind:
    kind: str
    p: int

    def __post_init__(self):
        if self.kind not in BODY_KINDS:
            raise DomainError(f"unknown body {self.kind!r}; expected one of {BODY_KINDS}")
        if int(self.p) != self.p or self.p < 1:
            raise DomainError("body dimension must be a positive integer")


def log_factorial(p):
    return float(gammaln(p + 1))


def body_log_volume(body):
    """log Vol_p of a catalog body in R^p."""
    p = body.p
    if body.kind == "StandardSimplex":
        return -log_factorial(p)
    if body.kind == "UnitCube":
        return 0.0
    if body.kind == "SymmetricCube":
        return p * math.log(2.0)
    if body.kind == "CrossPolytope":
        return p * math.log(2.0) - log_factorial(p)
    return 0.5 * p * math.log(math.pi) - float(gammaln(0.5 * p + 1))


def pinned_simplex_log_volume(X):
    """log Vol_p of conv{0, x_1, ..., x_p} = -log p! + log det(XX^T) / 2."""
    X = check_wide(X, "X")
    return -log_factorial(X.shape[0]) + 0.5 * log_det_gram(X)


def upsilon_log_volume(body, Y):
    """log Vol_p of {sum_i s_i y_i : s in body} = log det(YY^T)/2 + log Vol_p(body)."""
    Y = check_wide(Y)
    if body.p != Y.shape[0]:
        raise DomainError(f"body dimension {body.p} != number of rows {Y.shape[0]}")
    if body.kind == "StandardSimplex":
        # same expression as pinned_simplex_log_volume so the two agree bit for bit
        return pinned_simplex_log_volume(Y)
    return 0.5 * log_det_gram(Y) + body_log_volume(body)


def linear_image_log_volume(M, Y, check=True):
    """log Vol_p of the pinned simplex spanned by the rows of M Y.

    Computed as -log p! + log det(YY^T)/2 + log|det M|; with ``check`` the
    direct route pinned_simplex_log_volume(M @ Y) must agree to 1e-8.
    """
    M = as_matrix(M, "M")
    Y = check_wide(Y)
    p = Y.shape[0]
    if M.shape != (p, p):
        raise DomainError(f"M must be {p} x {p}, got {M.shape}")
    sign, logabs = np.linalg.slogdet(M)
    scale = float(np.max(np.abs(M)))
    if sign == 0 or not np.isfinite(logabs) or logabs <= p * math.log(p * EPS * scale):
        raise SingularM("M is singular")
    value = -log_factorial(p) + 0.5 * log_det_gram(Y) + float(logabs)
    if check:
        direct = pinned_simplex_log_volume(M @ Y)
        if abs(direct - value) > 1e-8 * max(1.0, abs(value)):
            raise ArithmeticError(
                f"linear-image routes disagree: {value!r} vs {direct!r}"
            )
    return value
